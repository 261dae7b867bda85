#include "flaf/spectral.hpp"

#include "flaf/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace flaf {

struct RealFft::Plans {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
};

namespace {

// FFTW's planner is not thread-safe; execution of an existing plan is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

std::map<std::size_t, std::unique_ptr<RealFft::Plans>>& plan_cache()
{
    static std::map<std::size_t, std::unique_ptr<RealFft::Plans>> cache;
    return cache;
}

} // namespace

RealFft::RealFft(std::size_t n_fft) : n_(n_fft)
{
    if (n_fft < 2) throw InvalidInput("transform size must be >= 2");
    std::lock_guard lock(planner_mutex());
    auto& cache = plan_cache();
    auto it = cache.find(n_fft);
    if (it == cache.end()) {
        auto plans = std::make_unique<Plans>();
        std::vector<double> re(n_fft);
        std::vector<cplx> spec(n_fft / 2 + 1);
        auto* c = reinterpret_cast<fftw_complex*>(spec.data());
        const int n = static_cast<int>(n_fft);
        plans->r2c = fftw_plan_dft_r2c_1d(n, re.data(), c, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans->c2r = fftw_plan_dft_c2r_1d(n, c, re.data(), FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT);
        if (!plans->r2c || !plans->c2r) throw Error("FFTW failed to plan a size-" + std::to_string(n_fft) + " transform");
        it = cache.emplace(n_fft, std::move(plans)).first;
    }
    plans_ = it->second.get();
}

void RealFft::forward(std::span<const double> x, std::span<cplx> out) const
{
    if (x.size() != n_ || out.size() != n_ / 2 + 1) throw InvalidInput("forward transform: length mismatch");
    // r2c out-of-place leaves its input untouched
    fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(x.data()), reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::inverse(std::span<const cplx> in, std::span<double> x) const
{
    if (x.size() != n_ || in.size() != n_ / 2 + 1) throw InvalidInput("inverse transform: length mismatch");
    std::vector<cplx> scratch(in.begin(), in.end());
    fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(scratch.data()), x.data());
    const double scale = 1.0 / static_cast<double>(n_);
    for (double& v : x) v *= scale;
}

Spectrum forward(std::span<const double> x)
{
    Spectrum s(x.size());
    RealFft(x.size()).forward(x, s.bins);
    return s;
}

std::vector<double> inverse(const Spectrum& spectrum)
{
    std::vector<double> x(spectrum.n_fft);
    RealFft(spectrum.n_fft).inverse(spectrum.bins, x);
    return x;
}

Spectrum filter_spectrum(std::span<const double> taps, std::size_t n_fft)
{
    if (taps.size() > n_fft) throw InvalidInput("filter longer than the transform size");
    std::vector<double> padded(n_fft, 0.0);
    std::copy(taps.begin(), taps.end(), padded.begin());
    return forward(padded);
}

double spectrum_energy(const Spectrum& s)
{
    const std::size_t n = s.n_fft;
    double acc = 0.0;
    for (std::size_t k = 0; k < s.bins.size(); ++k) {
        // interior bins stand for themselves and their mirror image
        const bool self_mirrored = k == 0 || (n % 2 == 0 && k == n / 2);
        acc += (self_mirrored ? 1.0 : 2.0) * std::norm(s.bins[k]);
    }
    return acc / static_cast<double>(n);
}

void gradient_constrain_inplace(Spectrum& g, std::size_t keep, const RealFft& fft, std::vector<double>& scratch)
{
    if (keep > g.n_fft) throw InvalidInput("gradient constraint: keep exceeds transform size");
    if (keep == g.n_fft) return;
    scratch.resize(g.n_fft);
    fft.inverse(g.bins, scratch);
    std::fill(scratch.begin() + static_cast<std::ptrdiff_t>(keep), scratch.end(), 0.0);
    fft.forward(scratch, g.bins);
}

Spectrum gradient_constrain(const Spectrum& g, std::size_t keep)
{
    Spectrum out = g;
    std::vector<double> scratch;
    gradient_constrain_inplace(out, keep, RealFft(g.n_fft), scratch);
    return out;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t fft_size_for(std::size_t filter_len, std::size_t hop)
{
    std::size_t n = 2;
    while (n < filter_len + hop) n <<= 1;
    return n;
}

OverlapSaveBuffer::OverlapSaveBuffer(std::size_t n_fft, std::size_t hop, std::size_t filter_len)
    : history_(n_fft, 0.0), hop_(hop), filter_len_(filter_len)
{
    if (hop == 0 || filter_len == 0) throw InvalidInput("overlap-save: hop and filter length must be >= 1");
    if (n_fft < filter_len + hop) throw InvalidInput("overlap-save: n_fft must be >= filter length + hop");
}

void OverlapSaveBuffer::push(std::span<const double> block)
{
    if (block.size() != hop_) throw InvalidInput("overlap-save: block length must equal the hop");
    std::copy(history_.begin() + static_cast<std::ptrdiff_t>(hop_), history_.end(), history_.begin());
    std::copy(block.begin(), block.end(), history_.end() - static_cast<std::ptrdiff_t>(hop_));
}

std::vector<double> os_convolve(OverlapSaveBuffer& buf, const Spectrum& W, std::span<const double> new_block)
{
    if (W.n_fft != buf.n_fft()) throw InvalidInput("os_convolve: filter spectrum size mismatch");
    buf.push(new_block);
    const RealFft fft(buf.n_fft());
    Spectrum x(buf.n_fft());
    fft.forward(buf.history(), x.bins);
    for (std::size_t k = 0; k < x.size(); ++k) x.bins[k] *= W.bins[k];
    std::vector<double> frame(buf.n_fft());
    fft.inverse(x.bins, frame);
    return {frame.end() - static_cast<std::ptrdiff_t>(buf.hop()), frame.end()};
}

} // namespace flaf
