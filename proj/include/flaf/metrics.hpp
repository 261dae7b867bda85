#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace flaf {

inline constexpr double kErleClampDb = 80.0;
inline constexpr double kMisalignmentFloorDb = -300.0;

struct ErleOptions {
    std::size_t window = 2048;
    std::size_t warmup = 4000; // samples excluded from mean_db
};

struct ErleTrace {
    std::size_t window = 0;
    std::vector<double> values;   // dB per sample, sliding-window energies
    double mean_db = 0.0;         // whole-run energy ratio after the warm-up
    double mean_db_all = 0.0;     // same ratio including the warm-up
    std::size_t clamped = 0;      // samples clamped to +80 dB (zero error energy)
};

ErleTrace erle(std::span<const double> d, std::span<const double> e, const ErleOptions& options = {});

/// 20 log10(|w_est - w_true| / |w_true|), shorter vector zero-padded.
double misalignment_db(std::span<const double> w_est, std::span<const double> w_true);

} // namespace flaf
