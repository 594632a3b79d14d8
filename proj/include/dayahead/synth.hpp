#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "dayahead/calendar.hpp"
#include "dayahead/error.hpp"
#include "dayahead/estimation.hpp"
#include "dayahead/rng.hpp"
#include "dayahead/series.hpp"

namespace dayahead {

/// Coupled two-market generator: the early exchange carries seasonal shape
/// plus autoregressive noise, the target adds an AR(1) spread and
/// idiosyncratic noise on top of it. The spread dynamics control how much an
/// early-exchange-aware model can gain.
struct SynthConfig {
    std::size_t days = 400;
    std::chrono::year_month_day first_day{std::chrono::year{2017}, std::chrono::month{1},
                                          std::chrono::day{2}};
    double base_level = 40.0;       ///< EUR/MWh
    double daily_amplitude = 10.0;
    double weekly_amplitude = 4.0;
    std::vector<double> exaa_ar = {0.7};
    double exaa_sigma = 3.0;
    double spread_phi = 0.5;
    double spread_sigma = 1.0;
    double idio_sigma = 0.5;
    /// 0 keeps innovations gaussian; >2 draws unit-variance Student-t with
    /// that many degrees of freedom (heavier tails, unstable squared losses).
    unsigned student_t_df = 0;
    std::vector<std::size_t> short_days;  ///< 1-based positions of 23-hour days
    std::vector<std::size_t> long_days;   ///< 1-based positions of 25-hour days
    std::uint64_t seed = 1;
    std::string exaa_id = "EXAA";
    std::string target_id = "TARGET";

    void validate() const {
        if (days < 1) throw DataError("synth: days must be at least 1");
        if (!first_day.ok()) throw DataError("synth: first_day is not a valid date");
        if (!exaa_ar.empty() && !ar_is_stationary(exaa_ar))
            throw DataError("synth: exaa_ar coefficients are not stationary");
        if (!(std::abs(spread_phi) < 1.0))
            throw DataError("synth: spread_phi must have magnitude below 1");
        if (exaa_sigma < 0 || spread_sigma < 0 || idio_sigma < 0)
            throw DataError("synth: noise scales must be nonnegative");
        if (student_t_df != 0 && student_t_df <= 2)
            throw DataError("synth: student_t_df must be 0 (gaussian) or greater than 2");
        for (std::size_t d : short_days)
            if (d < 1 || d > days) throw DataError("synth: short_days position out of range");
        for (std::size_t d : long_days) {
            if (d < 1 || d > days) throw DataError("synth: long_days position out of range");
            if (std::find(short_days.begin(), short_days.end(), d) != short_days.end())
                throw DataError(detail::concat("synth: day ", d, " is both short and long"));
        }
    }
};

struct SynthOutput {
    MarketPair pair;
    std::vector<double> spread;    ///< ground-truth spread per hour
    std::vector<double> seasonal;  ///< deterministic component per hour
};

namespace detail {

class Innovations {
public:
    Innovations(Rng rng, unsigned t_df) : rng_(std::move(rng)), t_df_(t_df) {}
    double draw() { return t_df_ == 0 ? rng_.normal() : rng_.student_t(t_df_); }

private:
    Rng rng_;
    unsigned t_df_;
};

}  // namespace detail

inline SynthOutput generate(const SynthConfig& config) {
    config.validate();
    std::vector<int> lengths(config.days, 24);
    for (std::size_t d : config.short_days) lengths[d - 1] = 23;
    for (std::size_t d : config.long_days) lengths[d - 1] = 25;
    auto cal = std::make_shared<const TradingCalendar>(config.first_day, std::move(lengths));
    const std::size_t n = cal->total_hours();

    // Independent streams per component: changing one scale never disturbs
    // the draws of the others.
    detail::Innovations exaa_noise(derive_stream(config.seed, "exaa-noise"), config.student_t_df);
    detail::Innovations spread_noise(derive_stream(config.seed, "spread"), config.student_t_df);
    detail::Innovations idio_noise(derive_stream(config.seed, "idio"), config.student_t_df);

    const std::size_t p = config.exaa_ar.size();
    const std::size_t burn_in = std::max<std::size_t>(500, 10 * std::max<std::size_t>(p, 1));

    std::vector<double> seasonal(n), exaa(n), target(n), spread_out(n);

    // Daily shape keyed to the clock position within the day, weekly shape to
    // the weekday; both average out over whole weeks.
    std::size_t day = 1, pos = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (pos == std::size_t(cal->hours_in_day(day))) {
            ++day;
            pos = 0;
        }
        const unsigned dow = cal->weekday_of_day(day).iso_encoding();  // 1=Mon..7=Sun
        const double daily =
            config.daily_amplitude * std::sin(2.0 * std::numbers::pi * double(pos) / 24.0);
        const double weekly = config.weekly_amplitude *
                              std::sin(2.0 * std::numbers::pi * double(dow - 1) / 7.0);
        seasonal[t] = config.base_level + daily + weekly;
        ++pos;
    }

    // Early exchange: seasonal + AR noise.
    {
        std::vector<double> u(burn_in + n, 0.0);
        for (std::size_t t = 0; t < u.size(); ++t) {
            double acc = config.exaa_sigma * exaa_noise.draw();
            for (std::size_t k = 1; k <= p && k <= t; ++k)
                acc += config.exaa_ar[k - 1] * u[t - k];
            u[t] = acc;
        }
        for (std::size_t t = 0; t < n; ++t) exaa[t] = seasonal[t] + u[burn_in + t];
    }

    // Target: early exchange + AR(1) spread + idiosyncratic noise.
    {
        double s = 0.0;
        for (std::size_t t = 0; t < burn_in; ++t)
            s = config.spread_phi * s + config.spread_sigma * spread_noise.draw();
        for (std::size_t t = 0; t < n; ++t) {
            s = config.spread_phi * s + config.spread_sigma * spread_noise.draw();
            spread_out[t] = s;
            target[t] = exaa[t] + s + config.idio_sigma * idio_noise.draw();
        }
    }

    SynthOutput out{MarketPair(HourlySeries(cal, std::move(exaa), config.exaa_id),
                               HourlySeries(cal, std::move(target), config.target_id)),
                    std::move(spread_out), std::move(seasonal)};
    return out;
}

}  // namespace dayahead
