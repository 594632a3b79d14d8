#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dayahead/calendar.hpp"
#include "dayahead/error.hpp"

namespace dayahead {

/// Hourly prices for one market, aligned from hour 1 of the shared calendar.
/// Slots may hold NaN ("missing") until imputation; downstream code requires
/// all-finite series.
struct HourlySeries {
    std::shared_ptr<const TradingCalendar> calendar;
    std::vector<double> values;
    std::string market_id;

    HourlySeries() = default;
    HourlySeries(std::shared_ptr<const TradingCalendar> cal, std::vector<double> vals,
                 std::string id)
        : calendar(std::move(cal)), values(std::move(vals)), market_id(std::move(id)) {
        if (!calendar) throw DataError("series needs a calendar");
        if (values.size() > calendar->total_hours())
            throw DataError(detail::concat("series '", market_id, "' has ", values.size(),
                                           " values but the calendar only covers ",
                                           calendar->total_hours(), " hours"));
    }

    std::size_t size() const { return values.size(); }

    /// Value at 1-based hour index t.
    double at(std::size_t t) const {
        if (t < 1 || t > values.size())
            throw std::out_of_range(detail::concat("hour index ", t, " outside series [1, ",
                                                   values.size(), "]"));
        return values[t - 1];
    }

    bool has_missing() const {
        for (double v : values)
            if (!std::isfinite(v)) return true;
        return false;
    }
};

/// The early-settling market (exaa role) paired with the target market.
/// `exaa` may extend past `target` by the next forecast day's hours, since
/// those prices are already observed when the target's auction closes.
struct MarketPair {
    HourlySeries exaa;
    HourlySeries target;

    MarketPair() = default;
    MarketPair(HourlySeries exaa_series, HourlySeries target_series)
        : exaa(std::move(exaa_series)), target(std::move(target_series)) {
        if (!exaa.calendar || !target.calendar || !(*exaa.calendar == *target.calendar))
            throw DataError("market pair series must share one calendar");
        if (exaa.size() < target.size())
            throw DataError(detail::concat("exaa series (", exaa.size(),
                                           " hours) shorter than target (", target.size(), ")"));
    }

    const TradingCalendar& calendar() const { return *target.calendar; }

    /// Checks the single-forecast shape: exaa leads target by exactly the next
    /// day's hours (or not at all).
    void validate_forecast_shape() const {
        const std::size_t lead = exaa.size() - target.size();
        if (lead == 0) return;
        if (lead < 23 || lead > 25)
            throw DataError(detail::concat("exaa leads target by ", lead,
                                           " hours, expected 0 or a day length in {23,24,25}"));
    }
};

/// Day-ahead-shifted view of a market pair: component 1 at index t holds the
/// exaa price one day ahead (same slot next day), component 2 the target price
/// at t. Component 1 is a pure reindexing of the exaa series.
struct ShiftedPair {
    std::vector<double> exaa_ahead;  // component 1
    std::vector<double> target;      // component 2

    std::size_t size() const { return target.size(); }
};

/// Day-ahead shift of the exaa component: component 1 at hour t becomes the
/// exaa price at t + H(day of t+1), i.e. the same slot one trading day later.
/// On the last hour before a clock-change day the shift is that day's 23 or 25.
inline ShiftedPair build_shifted(const MarketPair& pair) {
    const TradingCalendar& cal = pair.calendar();
    const std::size_t n = pair.target.size();
    if (n == 0) throw DataError("cannot shift an empty pair");
    if (n + 1 > cal.total_hours())
        throw DataError("calendar does not cover the day after the target range");

    ShiftedPair out;
    out.target = pair.target.values;
    out.exaa_ahead.resize(n);
    const std::size_t last_day = cal.day_of_time(n);
    std::size_t t = 1;
    for (std::size_t d = 1; d <= last_day && t <= n; ++d) {
        const std::size_t H = std::size_t(cal.hours_in_day(d));
        const std::size_t day_end = cal.first_hour_of_day(d) + H - 1;
        for (; t <= std::min(n, day_end); ++t) {
            // d(t+1) is this day except on its final hour, where it is the next day.
            const std::size_t shift =
                (t == day_end) ? std::size_t(cal.hours_in_day(d + 1)) : H;
            const std::size_t src = t + shift;
            if (src > pair.exaa.size())
                throw DataError(detail::concat("exaa series too short for day-ahead shift: hour ",
                                               t, " needs exaa hour ", src, ", have ",
                                               pair.exaa.size()));
            out.exaa_ahead[t - 1] = pair.exaa.values[src - 1];
        }
    }
    return out;
}

}  // namespace dayahead
