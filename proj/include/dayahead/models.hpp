#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dayahead/error.hpp"
#include "dayahead/estimation.hpp"
#include "dayahead/series.hpp"

namespace dayahead {

enum class ModelKind {
    naive,          ///< value 168 hours earlier
    ar,             ///< autoregression on the target series
    naive_exaa,     ///< copy the early exchange's observed next-day prices
    var2d,          ///< bivariate autoregression, second equation forecast
    var2d_shifted,  ///< bivariate autoregression on the day-ahead-shifted pair
    delta_ar,       ///< autoregression on the target-minus-early-exchange spread
};

inline constexpr ModelKind kAllModelKinds[] = {
    ModelKind::naive,  ModelKind::ar,            ModelKind::naive_exaa,
    ModelKind::var2d,  ModelKind::var2d_shifted, ModelKind::delta_ar,
};

inline std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::naive: return "naive";
        case ModelKind::ar: return "ar";
        case ModelKind::naive_exaa: return "naive_exaa";
        case ModelKind::var2d: return "var2d";
        case ModelKind::var2d_shifted: return "var2d_shifted";
        case ModelKind::delta_ar: return "delta_ar";
    }
    throw std::invalid_argument("unknown model kind");
}

inline ModelKind model_kind_from_string(std::string_view name) {
    for (ModelKind k : kAllModelKinds)
        if (to_string(k) == name) return k;
    throw DataError(detail::concat("unknown model kind '", name, "'"));
}

inline constexpr std::size_t kDefaultPMaxUnivariate = 1400;
inline constexpr std::size_t kDefaultPMaxBivariate = 700;
inline constexpr std::size_t kNaiveLagHours = 168;

struct ModelSpec {
    ModelKind kind = ModelKind::naive;
    /// Order-scan upper bound; 0 selects the per-kind default. Ignored by the
    /// two parameterless kinds.
    std::size_t p_max = 0;
    /// delta_ar only: feed raw lagged spreads into the forecast recursion
    /// with the full mean as intercept, instead of the mean-centered
    /// recursion every other autoregressive kind uses. Off by default. The
    /// raw form is only self-consistent for a zero-mean spread; with a
    /// persistent spread it pulls long-horizon forecasts toward
    /// mean/(1 - sum phi), so it exists for comparison, not as the default.
    bool raw_delta = false;
    AutocovMethod method = AutocovMethod::automatic;

    static ModelSpec of(ModelKind kind) { return ModelSpec{.kind = kind}; }

    bool is_autoregressive() const {
        return kind == ModelKind::ar || kind == ModelKind::delta_ar || kind == ModelKind::var2d ||
               kind == ModelKind::var2d_shifted;
    }
    bool is_bivariate() const {
        return kind == ModelKind::var2d || kind == ModelKind::var2d_shifted;
    }
    bool uses_exaa() const { return kind != ModelKind::naive && kind != ModelKind::ar; }

    std::size_t effective_p_max() const {
        if (!is_autoregressive()) return 0;
        if (p_max > 0) return p_max;
        return is_bivariate() ? kDefaultPMaxBivariate : kDefaultPMaxUnivariate;
    }
};

struct DayAheadForecast {
    std::vector<double> values;  ///< one prediction per hour of the target day
    ModelSpec model;
    std::size_t target_day = 0;  ///< 1-based day index in the history's calendar
};

/// Result of estimating one model on one calibration window. The two naive
/// kinds carry no parameters; `ar_fit` is populated for ar and delta_ar,
/// `var_fit` for the two bivariate kinds.
struct FittedModel {
    ModelSpec spec;
    ArFit ar_fit;
    VarFit var_fit;
    std::size_t window_hours = 0;  ///< target hours the fit consumed

    std::size_t selected_order() const {
        return spec.is_bivariate() ? var_fit.order() : ar_fit.order();
    }
};

/// Estimates `spec` on a calibration window. The window's target series is
/// the in-sample data; its exaa series must cover the same hours and, for
/// var2d_shifted, additionally the full day after the target range (the
/// day-ahead shift reaches into it).
inline FittedModel fit(const ModelSpec& spec, const MarketPair& window) {
    const std::size_t n = window.target.size();
    FittedModel model;
    model.spec = spec;
    model.window_hours = n;

    switch (spec.kind) {
        case ModelKind::naive:
            if (n < kNaiveLagHours)
                throw DataError(detail::concat("naive model needs at least ", kNaiveLagHours,
                                               " in-sample hours, got ", n));
            return model;
        case ModelKind::naive_exaa:
            if (window.exaa.size() < n)
                throw DataError("exaa series shorter than the in-sample window");
            return model;
        case ModelKind::ar: {
            std::span<const double> y(window.target.values.data(), n);
            model.ar_fit = fit_ar_aic(y, spec.effective_p_max(), spec.method);
            return model;
        }
        case ModelKind::delta_ar: {
            if (window.exaa.size() < n)
                throw DataError("exaa series shorter than the in-sample window");
            std::vector<double> delta(n);
            for (std::size_t t = 0; t < n; ++t)
                delta[t] = window.target.values[t] - window.exaa.values[t];
            model.ar_fit = fit_ar_aic(delta, spec.effective_p_max(), spec.method);
            return model;
        }
        case ModelKind::var2d: {
            if (window.exaa.size() < n)
                throw DataError("exaa series shorter than the in-sample window");
            std::span<const double> e(window.exaa.values.data(), n);
            std::span<const double> x(window.target.values.data(), n);
            model.var_fit = fit_var_aic(e, x, spec.effective_p_max(), spec.method);
            return model;
        }
        case ModelKind::var2d_shifted: {
            const ShiftedPair sh = build_shifted(window);
            model.var_fit =
                fit_var_aic(sh.exaa_ahead, sh.target, spec.effective_p_max(), spec.method);
            return model;
        }
    }
    throw std::invalid_argument("unknown model kind");
}

namespace detail {

/// Iterates the centered univariate recursion over the forecast day: each
/// step's lagged values come from `tail` (most recent last) until the lag
/// reaches already-forecast hours.
inline std::vector<double> iterate_ar(const ArFit& fit, std::span<const double> tail,
                                      std::size_t horizon) {
    const std::size_t p = fit.order();
    std::vector<double> out;
    out.reserve(horizon);
    for (std::size_t h = 1; h <= horizon; ++h) {
        double acc = fit.mean;
        for (std::size_t k = 1; k <= p; ++k) {
            // Value at offset h - k from the first forecast hour.
            const double lagged = (k < h) ? out[h - k - 1] : tail[tail.size() - (k - h + 1)];
            acc += fit.coeffs[k - 1] * (lagged - fit.mean);
        }
        out.push_back(acc);
    }
    return out;
}

}  // namespace detail

/// Produces the next-day forecast. `history` must end exactly at a day
/// boundary and match the data the model was fitted on; the forecast day is
/// the one that follows, and `exaa_next` carries that day's observed early
/// exchange prices (may be empty for the two kinds that ignore it).
inline DayAheadForecast forecast_day(const FittedModel& model, const MarketPair& history,
                                     std::span<const double> exaa_next) {
    const TradingCalendar& cal = history.calendar();
    // The history may differ from the fitted window when a fit is reused
    // across nearby rolls; each kind checks below that it reaches far enough
    // back for its own lags.
    const std::size_t n = history.target.size();
    if (n == 0) throw DataError("empty history");
    if (n + 1 > cal.total_hours())
        throw DataError("calendar does not extend past the fitted window");
    const std::size_t day = cal.day_of_time(n + 1);
    if (cal.first_hour_of_day(day) != n + 1)
        throw DataError("in-sample window must end at a day boundary");
    const std::size_t horizon = cal.hours_in_day(day);
    const ModelSpec& spec = model.spec;
    if (spec.uses_exaa() && exaa_next.size() != horizon)
        throw DataError(detail::concat("expected ", horizon, " next-day exaa values, got ",
                                       exaa_next.size()));

    DayAheadForecast fc;
    fc.model = spec;
    fc.target_day = day;
    fc.values.reserve(horizon);

    switch (spec.kind) {
        case ModelKind::naive: {
            if (n < kNaiveLagHours) throw DataError("history shorter than the weekly lag");
            for (std::size_t h = 1; h <= horizon; ++h)
                fc.values.push_back(history.target.at(n + h - kNaiveLagHours));
            return fc;
        }
        case ModelKind::naive_exaa: {
            fc.values.assign(exaa_next.begin(), exaa_next.end());
            return fc;
        }
        case ModelKind::ar: {
            const std::size_t p = model.ar_fit.order();
            if (p > n) throw DataError("history shorter than the fitted order");
            std::span<const double> tail(history.target.values.data() + (n - p), p);
            fc.values = detail::iterate_ar(model.ar_fit, tail, horizon);
            return fc;
        }
        case ModelKind::delta_ar: {
            const ArFit& fit = model.ar_fit;
            const std::size_t p = fit.order();
            if (p > n) throw DataError("history shorter than the fitted order");
            if (history.exaa.size() < n) throw DataError("exaa series shorter than history");
            std::vector<double> delta;
            delta.reserve(p + horizon);
            for (std::size_t t = n - p + 1; t <= n; ++t)
                delta.push_back(history.target.at(t) - history.exaa.at(t));
            for (std::size_t h = 1; h <= horizon; ++h) {
                double acc = fit.mean;
                for (std::size_t k = 1; k <= p; ++k) {
                    const double lagged = delta[delta.size() - k];
                    acc += fit.coeffs[k - 1] * (spec.raw_delta ? lagged : lagged - fit.mean);
                }
                delta.push_back(acc);
                fc.values.push_back(exaa_next[h - 1] + acc);
            }
            return fc;
        }
        case ModelKind::var2d: {
            const VarFit& fit = model.var_fit;
            const std::size_t p = fit.order();
            if (p > n) throw DataError("history shorter than the fitted order");
            if (history.exaa.size() < n) throw DataError("exaa series shorter than history");
            for (std::size_t h = 1; h <= horizon; ++h) {
                double acc = fit.mean.y;
                for (std::size_t k = 1; k <= p; ++k) {
                    const std::size_t s = n + h - k;  // lagged hour, 1-based
                    Vec2 lagged;
                    if (s <= n)
                        lagged = {history.exaa.at(s), history.target.at(s)};
                    else
                        lagged = {exaa_next[s - n - 1], fc.values[s - n - 1]};
                    const Vec2 centered = lagged - fit.mean;
                    const Mat2& phi = fit.coeffs[k - 1];
                    acc += phi.c * centered.x + phi.d * centered.y;
                }
                fc.values.push_back(acc);
            }
            return fc;
        }
        case ModelKind::var2d_shifted: {
            const VarFit& fit = model.var_fit;
            const std::size_t p = fit.order();
            if (p > n) throw DataError("history shorter than the fitted order");
            // Shifted vectors for the last p observed hours. Day-ahead exaa
            // references landing in the forecast day resolve to exaa_next, so
            // the forecast depends on it from the first hour on.
            auto shifted_exaa = [&](std::size_t t) {
                const std::size_t d = cal.day_of_time(t);
                const std::size_t shift =
                    (t == cal.first_hour_of_day(d) + cal.hours_in_day(d) - 1)
                        ? cal.hours_in_day(d + 1)
                        : cal.hours_in_day(d);
                const std::size_t e = t + shift;
                if (e > n) return exaa_next[e - n - 1];
                return history.exaa.at(e);
            };
            std::vector<Vec2> lags;  // oldest first, grows with forecasts
            lags.reserve(p + horizon);
            for (std::size_t t = n - p + 1; t <= n; ++t)
                lags.push_back({shifted_exaa(t), history.target.at(t)});
            for (std::size_t h = 1; h <= horizon; ++h) {
                Vec2 acc = fit.mean;
                for (std::size_t k = 1; k <= p; ++k) {
                    const Vec2 centered = lags[lags.size() - k] - fit.mean;
                    const Mat2& phi = fit.coeffs[k - 1];
                    acc = acc + phi * centered;
                }
                lags.push_back(acc);
                fc.values.push_back(acc.y);
            }
            return fc;
        }
    }
    throw std::invalid_argument("unknown model kind");
}

}  // namespace dayahead
