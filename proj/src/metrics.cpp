#include "flaf/metrics.hpp"

#include "flaf/error.hpp"

#include <algorithm>
#include <cmath>

namespace flaf {

namespace {

double ratio_db(double num, double den, bool& clamped)
{
    clamped = false;
    if (!(den > 0.0)) {
        clamped = true;
        return num > 0.0 ? kErleClampDb : 0.0;
    }
    if (!(num > 0.0)) return -kErleClampDb;
    return std::min(10.0 * std::log10(num / den), kErleClampDb);
}

} // namespace

ErleTrace erle(std::span<const double> d, std::span<const double> e, const ErleOptions& opt)
{
    if (d.size() != e.size()) throw InvalidInput("erle: d and e must have equal lengths");
    if (opt.window < 1) throw InvalidInput("erle: window must be >= 1");
    ErleTrace tr;
    tr.window = opt.window;
    tr.values.resize(d.size());

    // Running sums are rebuilt exactly every few windows so cancellation
    // error cannot accumulate over long streams.
    const std::size_t refresh = 16 * opt.window;
    double sd = 0.0, se = 0.0;
    for (std::size_t n = 0; n < d.size(); ++n) {
        if (n > 0 && n % refresh == 0) {
            sd = se = 0.0;
            const std::size_t lo = n + 1 > opt.window ? n + 1 - opt.window : 0;
            for (std::size_t k = lo; k < n; ++k) {
                sd += d[k] * d[k];
                se += e[k] * e[k];
            }
        } else if (n >= opt.window) {
            const std::size_t old = n - opt.window;
            sd -= d[old] * d[old];
            se -= e[old] * e[old];
        }
        sd += d[n] * d[n];
        se += e[n] * e[n];
        // subtraction can leave a tiny negative residue
        if (se < 0.0) se = 0.0;
        if (sd < 0.0) sd = 0.0;
        bool clamped = false;
        tr.values[n] = ratio_db(sd, se, clamped);
        if (clamped) ++tr.clamped;
    }

    const auto whole = [&](std::size_t from) {
        double nd = 0.0, ne = 0.0;
        for (std::size_t n = from; n < d.size(); ++n) {
            nd += d[n] * d[n];
            ne += e[n] * e[n];
        }
        bool clamped = false;
        return ratio_db(nd, ne, clamped);
    };
    tr.mean_db_all = whole(0);
    tr.mean_db = whole(std::min(opt.warmup, d.size()));
    return tr;
}

double misalignment_db(std::span<const double> w_est, std::span<const double> w_true)
{
    const std::size_t n = std::max(w_est.size(), w_true.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = i < w_est.size() ? w_est[i] : 0.0;
        const double b = i < w_true.size() ? w_true[i] : 0.0;
        num += (a - b) * (a - b);
        den += b * b;
    }
    if (!(den > 0.0)) throw InvalidInput("misalignment: reference weights have zero norm");
    if (num == 0.0) return kMisalignmentFloorDb;
    return std::max(10.0 * std::log10(num / den), kMisalignmentFloorDb);
}

} // namespace flaf
