#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dayahead/backtest.hpp"
#include "dayahead/error.hpp"
#include "dayahead/estimation.hpp"

namespace dayahead {

struct DmConfig {
    double power = 1.0;          ///< loss exponent; 1 compares absolute errors
    std::size_t q_max = 21;      ///< upper bound of the AR order scan for the differentials
    std::size_t min_length = 30; ///< fewest differentials accepted per hour
    double threshold = 1.645;    ///< one-sided 95% critical value
};

struct DmEntry {
    std::size_t hour = 0;
    double statistic = 0.0;
    double long_run_variance = 0.0;
    std::size_t order = 0;  ///< selected AR order of the differential fit
    double threshold = 0.0;
    std::size_t length = 0;  ///< number of differentials entering the test
    bool degenerate = false;
    bool significant = false;
};

struct DmResult {
    std::string model_a;
    std::string model_b;
    std::vector<DmEntry> hours;  ///< hours 1..24
};

inline std::vector<double> loss_differential(std::span<const double> e1,
                                             std::span<const double> e2, double power) {
    if (e1.size() != e2.size())
        throw DataError(detail::concat("error sequences differ in length: ", e1.size(), " vs ",
                                       e2.size()));
    auto loss = [power](double e) {
        if (power == 1.0) return std::abs(e);
        if (power == 2.0) return e * e;
        return std::pow(std::abs(e), power);
    };
    std::vector<double> out(e1.size());
    for (std::size_t i = 0; i < e1.size(); ++i) out[i] = loss(e1[i]) - loss(e2[i]);
    return out;
}

/// Test statistic for one hour's loss-differential series: the mean
/// differential scaled by an autoregressive long-run standard error. The
/// spectral density of the fitted AR at frequency zero gives the long-run
/// variance sigma^2 / (1 - sum phi)^2; a constant series has no variance to
/// scale by and is reported as a degenerate zero.
inline DmEntry dm_statistic(std::span<const double> delta, const DmConfig& config = {}) {
    const std::size_t m = delta.size();
    if (m < config.min_length)
        throw DataError(detail::concat("need at least ", config.min_length,
                                       " loss differentials, got ", m));
    DmEntry entry;
    entry.threshold = config.threshold;
    entry.length = m;

    const bool constant =
        std::all_of(delta.begin(), delta.end(), [&](double v) { return v == delta[0]; });
    if (constant) {
        entry.degenerate = true;
        return entry;
    }

    const std::size_t q_max = std::min(config.q_max, m - 1);
    const ArFit fit = fit_ar_aic(sample_autocovariance(delta, q_max), q_max,
                                 /*allow_zero=*/true);
    double phi_sum = 0.0;
    for (double c : fit.coeffs) phi_sum += c;
    const double denom = (1.0 - phi_sum) * (1.0 - phi_sum);
    entry.long_run_variance = fit.sigma2 / denom;
    entry.order = fit.order();

    double mean = 0.0;
    for (double v : delta) mean += v;
    mean /= double(m);
    entry.statistic = mean / std::sqrt(entry.long_run_variance / double(m));
    if (!std::isfinite(entry.statistic)) {
        entry.statistic = 0.0;
        entry.degenerate = true;
    }
    entry.significant = entry.statistic > entry.threshold;
    return entry;
}

/// Per-hour comparison of two models from a finished study. Hour positions
/// 1..24 are tested; the rare 25th hour is skipped by design.
inline DmResult run_dm(const ErrorMatrix& em, std::size_t model_a, std::size_t model_b,
                       const DmConfig& config = {}) {
    if (model_a >= em.errors.size() || model_b >= em.errors.size())
        throw DataError("model index outside the error matrix");
    DmResult result;
    result.model_a = em.model_names[model_a];
    result.model_b = em.model_names[model_b];
    for (std::size_t h = 1; h <= 24; ++h) {
        std::vector<double> e1, e2;
        for (std::size_t r = 1; r <= em.roll_count(); ++r) {
            const std::size_t base = em.roll_offsets[r - 1];
            if (em.roll_offsets[r] - base < h) continue;
            e1.push_back(em.errors[model_a][base + h - 1]);
            e2.push_back(em.errors[model_b][base + h - 1]);
        }
        const std::vector<double> delta = loss_differential(e1, e2, config.power);
        DmEntry entry = dm_statistic(delta, config);
        entry.hour = h;
        result.hours.push_back(entry);
    }
    return result;
}

}  // namespace dayahead
