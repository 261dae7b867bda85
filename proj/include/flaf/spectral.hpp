#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace flaf {

using cplx = std::complex<double>;

/// Half spectrum (n_fft/2 + 1 bins) of a real frame.
///
/// Convention: unscaled forward transform, 1/n_fft on the inverse.
struct Spectrum {
    std::size_t n_fft = 0;
    std::vector<cplx> bins;

    Spectrum() = default;
    explicit Spectrum(std::size_t n) : n_fft(n), bins(n / 2 + 1) {}

    std::size_t size() const { return bins.size(); }
};

/// Real-input transform of a fixed size. Plans are created once per size and
/// shared read-only between instances and threads.
class RealFft {
public:
    explicit RealFft(std::size_t n_fft);

    std::size_t size() const { return n_; }
    void forward(std::span<const double> x, std::span<cplx> out) const;
    void inverse(std::span<const cplx> in, std::span<double> x) const;

    struct Plans; // FFTW plan pair, owned by a process-wide cache

private:
    std::size_t n_;
    const Plans* plans_;
};

Spectrum forward(std::span<const double> x);
std::vector<double> inverse(const Spectrum& spectrum);

/// Transform of a filter zero-padded to n_fft.
Spectrum filter_spectrum(std::span<const double> taps, std::size_t n_fft);

/// Parseval-weighted energy: equals the squared norm of the time frame.
double spectrum_energy(const Spectrum& spectrum);

/// Zero every time-domain sample at index >= keep (projection).
Spectrum gradient_constrain(const Spectrum& g, std::size_t keep);
void gradient_constrain_inplace(Spectrum& g, std::size_t keep, const RealFft& fft, std::vector<double>& scratch);

/// Smallest power of two holding filter_len + hop samples.
std::size_t fft_size_for(std::size_t filter_len, std::size_t hop);
bool is_power_of_two(std::size_t n);

/// Input history for overlap-save filtering: the last n_fft samples, advanced
/// by exactly one hop per block.
class OverlapSaveBuffer {
public:
    OverlapSaveBuffer(std::size_t n_fft, std::size_t hop, std::size_t filter_len);

    std::size_t n_fft() const { return history_.size(); }
    std::size_t hop() const { return hop_; }
    std::size_t filter_len() const { return filter_len_; }

    void push(std::span<const double> block);
    std::span<const double> history() const { return history_; }

private:
    std::vector<double> history_;
    std::size_t hop_;
    std::size_t filter_len_;
};

/// Push a block and return the last hop samples of IFFT(X * W), i.e. the
/// linear convolution of the input stream with the filter embodied by W.
std::vector<double> os_convolve(OverlapSaveBuffer& buf, const Spectrum& W, std::span<const double> new_block);

} // namespace flaf
