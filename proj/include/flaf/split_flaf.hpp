#pragma once

#include "flaf/expansions.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace flaf {

struct SampleOutput {
    double y = 0.0;
    double e = 0.0;
};

/// Time-domain split functional link adaptive filter.
///
/// A linear branch of M taps runs in parallel with a nonlinear branch of
/// M_re weights; both see their own sliding buffer and are adapted jointly
/// from the common error with independent NLMS normalizations:
///
///     y[n] = w_lin' x_lin + w_nl' g_n,  e[n] = d[n] - y[n]
///     w   <- w + mu * e * buf / (reg + |buf|^2)      (per branch)
///
/// The nonlinear buffer advances by `stride` entries per sample: stride = Q
/// gives the sample-major sliding layout of g_n; stride = M_re replaces the
/// whole vector each sample (random vector features).
class SplitFlaf {
public:
    SplitFlaf(std::size_t linear_len, std::size_t nl_len, std::size_t stride, double mu_lin, double mu_nl,
              double reg);

    /// Full predict/update cycle. Non-finite x or d skips the sample.
    SampleOutput step(double x_new, std::span<const double> g_new, double d);

    /// Push inputs and return y[n] with the current weights.
    double predict(double x_new, std::span<const double> g_new);
    /// NLMS update of both branches with the error of the last prediction.
    void update(double e);

    std::span<const double> linear_weights() const { return w_lin_; }
    std::span<const double> nonlinear_weights() const { return w_nl_; }
    void set_linear_weights(std::span<const double> w);
    void set_nonlinear_weights(std::span<const double> w);

    std::span<const double> linear_buffer() const { return buf_lin_; }
    std::span<const double> nonlinear_buffer() const { return buf_nl_; }

    /// Output of the nonlinear branch for the last prediction.
    double last_nonlinear_output() const { return last_y_nl_; }

    bool diverged() const { return diverged_; }
    std::uint64_t skipped() const { return skipped_; }
    /// Multiplications spent in filtering and adaptation so far.
    std::uint64_t multiplications() const { return mults_; }

private:
    std::vector<double> w_lin_;
    std::vector<double> w_nl_;
    std::vector<double> buf_lin_;
    std::vector<double> buf_nl_;
    std::size_t stride_;
    double mu_lin_;
    double mu_nl_;
    double reg_;
    double last_y_nl_ = 0.0;
    bool diverged_ = false;
    std::uint64_t skipped_ = 0;
    std::uint64_t mults_ = 0;
};

/// Sample-by-sample FLAF: expander feeding a SplitFlaf, including the
/// adaptive exponential factor update when that expansion is selected.
class TimeDomainFlaf {
public:
    /// Without an expansion the filter is a plain NLMS of length M.
    TimeDomainFlaf(std::size_t linear_len, std::optional<ExpansionConfig> expansion, double mu_lin, double mu_nl,
                   double reg);

    SampleOutput step(double x, double d);

    const SplitFlaf& core() const { return core_; }
    SplitFlaf& core() { return core_; }
    const Expander* expander() const { return expander_ ? &*expander_ : nullptr; }

    /// Expansion plus filter multiplications.
    std::uint64_t multiplications() const;

private:
    std::optional<Expander> expander_;
    SplitFlaf core_;
    std::vector<double> g_;
    std::vector<double> x_recent_; // AE only: x[n], x[n-1], ...
};

} // namespace flaf
