#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dayahead/detail/parallel.hpp"
#include "dayahead/error.hpp"
#include "dayahead/models.hpp"
#include "dayahead/rng.hpp"
#include "dayahead/series.hpp"

namespace dayahead {

struct StudyConfig {
    std::size_t in_sample_days = 730;
    std::size_t rolls = 1825;
    std::vector<ModelSpec> models;
    std::size_t bootstrap_replicates = 1000;
    std::uint64_t seed = 1;
    /// Re-estimate every this many rolls; forecasts in between reuse the last
    /// coefficients but always see the current window's data. 1 = refit daily.
    std::size_t refit_stride = 1;

    void validate() const {
        if (in_sample_days < 1) throw DataError("in_sample_days must be at least 1");
        if (rolls < 1) throw DataError("rolls must be at least 1");
        if (bootstrap_replicates < 1) throw DataError("bootstrap_replicates must be at least 1");
        if (refit_stride < 1) throw DataError("refit_stride must be at least 1");
        if (models.empty()) throw DataError("no models configured");
    }
};

/// Out-of-sample forecast errors, hour-aligned across models. Columns run
/// over the forecast hours of all rolls in order; column c belongs to global
/// hour index first_hour + c on the study calendar.
struct ErrorMatrix {
    std::vector<ModelSpec> models;
    std::vector<std::string> model_names;
    std::shared_ptr<const TradingCalendar> calendar;
    std::size_t first_hour = 0;  ///< global 1-based index of the first forecast hour
    std::size_t first_day = 0;   ///< global 1-based index of the first forecast day
    std::vector<std::size_t> roll_offsets;  ///< per roll: first column; plus one sentinel end
    std::vector<std::vector<double>> errors; ///< [model][column], actual minus forecast
    std::vector<std::vector<std::size_t>> orders;  ///< [model][roll] fitted order in use

    std::size_t roll_count() const { return roll_offsets.empty() ? 0 : roll_offsets.size() - 1; }
    std::size_t column_count() const { return roll_offsets.empty() ? 0 : roll_offsets.back(); }
    std::size_t hour_of_column(std::size_t c) const { return first_hour + c; }
    std::size_t day_of_roll(std::size_t r) const { return first_day + r - 1; }  // r is 1-based

    /// Forecast position within the day (1..25) of column c.
    std::size_t position_of_column(std::size_t c) const {
        return calendar->hour_of_day(hour_of_column(c));
    }
};

/// Runs the rolling study: for roll r = 1..rolls, fit every model on the
/// window of days r .. r+D-1 and forecast day r+D. The pair must cover
/// D + rolls days; the early exchange series doubles as the observed
/// next-day block of each roll.
inline ErrorMatrix run_study(const MarketPair& pair, const StudyConfig& config,
                             std::size_t jobs = 1) {
    config.validate();
    const TradingCalendar& cal = pair.calendar();
    const std::size_t need_days = config.in_sample_days + config.rolls;
    const std::size_t have_days =
        pair.target.size() == 0 ? 0 : cal.day_of_time(pair.target.size());
    if (cal.day_count() < need_days || pair.target.size() < cal.first_hour_of_day(need_days) +
                                           std::size_t(cal.hours_in_day(need_days)) - 1)
        throw DataError(detail::concat("study needs ", need_days, " days of data (", need_days,
                                       " = ", config.in_sample_days, " in-sample + ", config.rolls,
                                       " rolls), got ", have_days, " target days"));
    if (pair.exaa.size() < pair.target.size())
        throw DataError("early exchange series must cover every forecast day");
    if (pair.target.has_missing() ||
        std::any_of(pair.exaa.values.begin(), pair.exaa.values.end(),
                    [](double v) { return std::isnan(v); }))
        throw DataError("study input contains missing values; impute first");

    const std::size_t D = config.in_sample_days;
    const std::size_t n_models = config.models.size();

    ErrorMatrix em;
    em.models = config.models;
    for (const ModelSpec& m : config.models) em.model_names.emplace_back(to_string(m.kind));
    em.calendar = pair.target.calendar;
    em.first_day = D + 1;
    em.first_hour = cal.first_hour_of_day(D + 1);
    em.roll_offsets.resize(config.rolls + 1);
    em.roll_offsets[0] = 0;
    for (std::size_t r = 1; r <= config.rolls; ++r)
        em.roll_offsets[r] = em.roll_offsets[r - 1] + std::size_t(cal.hours_in_day(D + r));
    const std::size_t total = em.roll_offsets.back();
    em.errors.assign(n_models, std::vector<double>(total, 0.0));
    em.orders.assign(n_models, std::vector<std::size_t>(config.rolls, 0));

    // Rolls sharing one refit are a block; blocks are the parallel unit so a
    // cached fit never crosses threads and every slot has one writer.
    const std::size_t stride = config.refit_stride;
    const std::size_t blocks = (config.rolls + stride - 1) / stride;

    detail::parallel_for(blocks, jobs, [&](std::size_t block) {
        const std::size_t r_begin = 1 + block * stride;
        const std::size_t r_end = std::min(config.rolls, r_begin + stride - 1);
        std::vector<FittedModel> fits(n_models);
        for (std::size_t r = r_begin; r <= r_end; ++r) {
            const std::size_t forecast_day_index = D + r;
            const auto window_cal =
                std::make_shared<const TradingCalendar>(cal.slice(r, D + 1));
            const std::size_t w_first = cal.first_hour_of_day(r);
            const std::size_t w_hours = cal.first_hour_of_day(forecast_day_index) - w_first;
            const std::size_t horizon = std::size_t(cal.hours_in_day(forecast_day_index));

            MarketPair window{
                HourlySeries(window_cal,
                             {pair.exaa.values.begin() + long(w_first) - 1,
                              pair.exaa.values.begin() + long(w_first + w_hours + horizon) - 1},
                             pair.exaa.market_id),
                HourlySeries(window_cal,
                             {pair.target.values.begin() + long(w_first) - 1,
                              pair.target.values.begin() + long(w_first + w_hours) - 1},
                             pair.target.market_id)};
            std::span<const double> exaa_next(window.exaa.values.data() + w_hours, horizon);

            for (std::size_t m = 0; m < n_models; ++m) {
                if (r == r_begin) fits[m] = fit(config.models[m], window);
                em.orders[m][r - 1] = fits[m].selected_order();
                const DayAheadForecast fc = forecast_day(fits[m], window, exaa_next);
                const std::size_t base = em.roll_offsets[r - 1];
                for (std::size_t h = 0; h < horizon; ++h) {
                    const double actual = pair.target.values[w_first + w_hours + h - 1];
                    em.errors[m][base + h] = actual - fc.values[h];
                }
            }
        }
    });
    return em;
}

// ---------------------------------------------------------------------------
// Summary metrics.

inline constexpr std::size_t kMaxDayHours = 25;

struct HourlyMetrics {
    /// Index i holds the statistics of forecast position i+1; positions that
    /// never occur have count 0 and NaN metrics.
    std::vector<std::size_t> counts;
    std::vector<std::vector<double>> mae;   ///< [model][position]
    std::vector<std::vector<double>> rmse;  ///< [model][position]
};

struct PartitionCell {
    std::string label;
    double mae = 0.0;
    std::size_t count = 0;
};

inline std::vector<std::pair<double, double>> mae_rmse(const ErrorMatrix& em) {
    const std::size_t total = em.column_count();
    if (total == 0) throw DataError("error matrix is empty");
    std::vector<std::pair<double, double>> out;
    out.reserve(em.errors.size());
    for (const auto& row : em.errors) {
        double abs_sum = 0.0, sq_sum = 0.0;
        for (double e : row) {
            abs_sum += std::abs(e);
            sq_sum += e * e;
        }
        out.emplace_back(abs_sum / double(total), std::sqrt(sq_sum / double(total)));
    }
    return out;
}

inline HourlyMetrics hourly_metrics(const ErrorMatrix& em) {
    if (em.column_count() == 0) throw DataError("error matrix is empty");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    HourlyMetrics out;
    out.counts.assign(kMaxDayHours, 0);
    const std::size_t n_models = em.errors.size();
    out.mae.assign(n_models, std::vector<double>(kMaxDayHours, nan));
    out.rmse.assign(n_models, std::vector<double>(kMaxDayHours, nan));

    for (std::size_t r = 1; r <= em.roll_count(); ++r) {
        const std::size_t len = em.roll_offsets[r] - em.roll_offsets[r - 1];
        for (std::size_t h = 0; h < len; ++h) ++out.counts[h];
    }
    for (std::size_t m = 0; m < n_models; ++m) {
        std::vector<double> abs_sum(kMaxDayHours, 0.0), sq_sum(kMaxDayHours, 0.0);
        for (std::size_t r = 1; r <= em.roll_count(); ++r) {
            const std::size_t base = em.roll_offsets[r - 1];
            const std::size_t len = em.roll_offsets[r] - base;
            for (std::size_t h = 0; h < len; ++h) {
                const double e = em.errors[m][base + h];
                abs_sum[h] += std::abs(e);
                sq_sum[h] += e * e;
            }
        }
        for (std::size_t h = 0; h < kMaxDayHours; ++h) {
            if (out.counts[h] == 0) continue;
            out.mae[m][h] = abs_sum[h] / double(out.counts[h]);
            out.rmse[m][h] = std::sqrt(sq_sum[h] / double(out.counts[h]));
        }
    }
    return out;
}

/// Mean absolute error by calendar group, reported in the scheme's label
/// order. Labels whose group is empty in the out-of-sample range are omitted.
inline std::vector<std::vector<PartitionCell>> partition_mae(const ErrorMatrix& em,
                                                             const PartitionScheme& scheme) {
    if (em.column_count() == 0) throw DataError("error matrix is empty");
    const TradingCalendar& cal = *em.calendar;
    const std::vector<std::string> labels = scheme.labels();

    // One label per day; all columns of the day share it.
    std::vector<std::size_t> column_group(em.column_count());
    for (std::size_t r = 1; r <= em.roll_count(); ++r) {
        const std::size_t base = em.roll_offsets[r - 1];
        const std::string label = cal.partition_label(em.hour_of_column(base), scheme);
        const auto it = std::find(labels.begin(), labels.end(), label);
        const std::size_t g = std::size_t(it - labels.begin());
        for (std::size_t c = base; c < em.roll_offsets[r]; ++c) column_group[c] = g;
    }

    std::vector<std::vector<PartitionCell>> out(em.errors.size());
    for (std::size_t m = 0; m < em.errors.size(); ++m) {
        std::vector<double> sums(labels.size(), 0.0);
        std::vector<std::size_t> counts(labels.size(), 0);
        for (std::size_t c = 0; c < em.column_count(); ++c) {
            sums[column_group[c]] += std::abs(em.errors[m][c]);
            ++counts[column_group[c]];
        }
        for (std::size_t g = 0; g < labels.size(); ++g)
            if (counts[g] > 0)
                out[m].push_back({labels[g], sums[g] / double(counts[g]), counts[g]});
    }
    return out;
}

enum class MetricKind { mae, rmse };

/// Standard deviation of the metric over B i.i.d.-resampled replicates of the
/// loss sequence. Pass absolute losses; squaring for RMSE happens inside so
/// both metrics resample the same underlying errors.
inline double bootstrap_sd(std::span<const double> abs_losses, MetricKind kind, std::size_t B,
                           std::uint64_t seed, std::size_t jobs = 1) {
    const std::size_t n = abs_losses.size();
    if (n == 0) throw DataError("bootstrap over an empty loss sequence");
    if (B < 1) throw DataError("bootstrap needs at least one replicate");
    std::vector<double> replicate(B, 0.0);
    detail::parallel_for(B, jobs, [&](std::size_t b) {
        Rng rng = derive_stream(seed, "replicate", b);
        double acc = 0.0;
        if (kind == MetricKind::mae) {
            for (std::size_t i = 0; i < n; ++i) acc += abs_losses[rng.uniform_below(n)];
            replicate[b] = acc / double(n);
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                const double v = abs_losses[rng.uniform_below(n)];
                acc += v * v;
            }
            replicate[b] = std::sqrt(acc / double(n));
        }
    });
    double mean = 0.0;
    for (double v : replicate) mean += v;
    mean /= double(B);
    if (B == 1) return 0.0;
    double ss = 0.0;
    for (double v : replicate) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / double(B - 1));
}

struct ModelMetrics {
    std::string name;
    ModelSpec spec;
    double mae = 0.0;
    double rmse = 0.0;
    double mae_sd = 0.0;
    double rmse_sd = 0.0;
    bool mae_best = false;
    bool rmse_best = false;
    /// Within two standard deviations of the best model's metric: the
    /// "not significantly worse than best" marker.
    bool mae_within_2sd = false;
    bool rmse_within_2sd = false;
    std::vector<double> mae_by_hour;
    std::vector<double> rmse_by_hour;
    std::size_t min_order = 0, max_order = 0;
    double median_order = 0.0;
};

struct PartitionTable {
    std::string name;  ///< "monthly", "daily", "annual"
    std::vector<std::vector<PartitionCell>> per_model;
};

struct MetricReport {
    std::vector<ModelMetrics> models;
    std::vector<std::size_t> hour_counts;
    std::vector<PartitionTable> partitions;
    std::size_t total_hours = 0;
    std::size_t rolls = 0;
};

namespace detail {

inline void flag_best(std::vector<ModelMetrics>& models, MetricKind kind) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < models.size(); ++m) {
        const double v = kind == MetricKind::mae ? models[m].mae : models[m].rmse;
        const double bv = kind == MetricKind::mae ? models[best].mae : models[best].rmse;
        if (v < bv) best = m;
    }
    const ModelMetrics& b = models[best];
    const double cutoff = kind == MetricKind::mae ? b.mae + 2.0 * b.mae_sd
                                                  : b.rmse + 2.0 * b.rmse_sd;
    for (std::size_t m = 0; m < models.size(); ++m) {
        const double v = kind == MetricKind::mae ? models[m].mae : models[m].rmse;
        if (kind == MetricKind::mae) {
            models[m].mae_best = (m == best);
            models[m].mae_within_2sd = v <= cutoff;
        } else {
            models[m].rmse_best = (m == best);
            models[m].rmse_within_2sd = v <= cutoff;
        }
    }
}

inline double median_of_orders(const std::vector<std::size_t>& orders) {
    if (orders.empty()) return 0.0;
    std::vector<std::size_t> s = orders;
    std::sort(s.begin(), s.end());
    const std::size_t h = s.size() / 2;
    return s.size() % 2 ? double(s[h]) : 0.5 * double(s[h - 1] + s[h]);
}

}  // namespace detail

/// Assembles the full report: point metrics, bootstrap uncertainty, per-hour
/// tables, and the requested calendar partitions.
inline MetricReport compute_metrics(const ErrorMatrix& em, std::size_t bootstrap_replicates,
                                    std::uint64_t seed,
                                    std::span<const std::pair<std::string, PartitionScheme>> schemes,
                                    std::size_t jobs = 1) {
    MetricReport report;
    report.total_hours = em.column_count();
    report.rolls = em.roll_count();

    const auto point = mae_rmse(em);
    const HourlyMetrics hm = hourly_metrics(em);
    report.hour_counts = hm.counts;

    for (std::size_t m = 0; m < em.errors.size(); ++m) {
        ModelMetrics mm;
        mm.name = em.model_names[m];
        if (m < em.models.size()) mm.spec = em.models[m];
        mm.mae = point[m].first;
        mm.rmse = point[m].second;
        std::vector<double> abs_losses(em.errors[m].size());
        for (std::size_t c = 0; c < em.errors[m].size(); ++c)
            abs_losses[c] = std::abs(em.errors[m][c]);
        mm.mae_sd = bootstrap_sd(abs_losses, MetricKind::mae, bootstrap_replicates,
                                 derive_seed(seed, "bootstrap-mae", m), jobs);
        mm.rmse_sd = bootstrap_sd(abs_losses, MetricKind::rmse, bootstrap_replicates,
                                  derive_seed(seed, "bootstrap-rmse", m), jobs);
        mm.mae_by_hour = hm.mae[m];
        mm.rmse_by_hour = hm.rmse[m];
        const auto& orders = em.orders[m];
        mm.min_order = orders.empty() ? 0 : *std::min_element(orders.begin(), orders.end());
        mm.max_order = orders.empty() ? 0 : *std::max_element(orders.begin(), orders.end());
        mm.median_order = detail::median_of_orders(orders);
        report.models.push_back(std::move(mm));
    }
    detail::flag_best(report.models, MetricKind::mae);
    detail::flag_best(report.models, MetricKind::rmse);

    for (const auto& [name, scheme] : schemes)
        report.partitions.push_back({name, partition_mae(em, scheme)});
    return report;
}

}  // namespace dayahead
