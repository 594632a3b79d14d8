#pragma once

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dayahead/calendar.hpp"
#include "dayahead/error.hpp"
#include "dayahead/series.hpp"

namespace dayahead {

namespace detail {

inline bool parse_double(std::string_view s, double& out) {
    // from_chars<double> is incomplete on some toolchains; strtod on a copy.
    std::string buf(s);
    char* end = nullptr;
    out = std::strtod(buf.c_str(), &end);
    return end == buf.c_str() + buf.size() && !buf.empty();
}

inline bool is_missing_field(std::string_view s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan";
}

}  // namespace detail

/// Loads an hourly price CSV (`timestamp_local,price`, header row, '.' decimals)
/// into a calendar-aligned series. Slots without a usable row are NaN.
///
/// Rows are grouped by the date part of the timestamp and must follow calendar
/// order. Regular 24-hour days are matched by the HH field, which pins gaps to
/// the right slot and rejects duplicated hours. A clock-change day must carry
/// exactly H(d) rows; they fill the slots in file order (this is what places
/// the duplicated autumn hour). Whole days may be absent from the file; their
/// slots stay missing.
inline HourlySeries load_prices(const std::string& path, const std::string& market_id,
                                std::shared_ptr<const TradingCalendar> calendar) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open price file: " + path);
    const TradingCalendar& cal = *calendar;

    struct Row {
        int hour = -1;  // HH of the timestamp, -1 if unparseable
        double value = std::numeric_limits<double>::quiet_NaN();
        std::size_t lineno = 0;
    };
    std::vector<std::vector<Row>> per_day(cal.day_count());
    const auto first = std::chrono::sys_days{cal.first_day()};

    std::string line;
    std::size_t lineno = 0;
    std::size_t last_day = 0;
    bool header_skipped = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header_skipped) {
            header_skipped = true;  // first non-empty line is the header
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw DataError(detail::concat(path, ":", lineno, ": missing comma"));
        const std::string_view stamp = std::string_view(line).substr(0, comma);
        const std::string_view field = std::string_view(line).substr(comma + 1);

        // timestamp_local = "YYYY-MM-DD HH:MM"
        if (stamp.size() < 16 || stamp[10] != ' ' || stamp[13] != ':')
            throw DataError(detail::concat(path, ":", lineno, ": bad timestamp '", stamp, "'"));
        std::chrono::year_month_day date{};
        try {
            date = parse_date(stamp.substr(0, 10));
        } catch (const DataError&) {
            throw DataError(detail::concat(path, ":", lineno, ": bad timestamp '", stamp, "'"));
        }
        int hh = -1;
        if (stamp[11] >= '0' && stamp[11] <= '9' && stamp[12] >= '0' && stamp[12] <= '9')
            hh = (stamp[11] - '0') * 10 + (stamp[12] - '0');
        if (hh < 0 || hh > 23)
            throw DataError(detail::concat(path, ":", lineno, ": bad hour in '", stamp, "'"));

        const auto offset = (std::chrono::sys_days{date} - first).count();
        if (offset < 0 || std::size_t(offset) >= cal.day_count())
            throw DataError(detail::concat(path, ":", lineno, ": date ", format_date(date),
                                           " outside the calendar"));
        const std::size_t day = std::size_t(offset) + 1;
        if (day < last_day)
            throw DataError(detail::concat(path, ":", lineno, ": date ", format_date(date),
                                           " out of order"));
        last_day = std::max(last_day, day);

        Row row;
        row.hour = hh;
        row.lineno = lineno;
        if (!detail::is_missing_field(field)) {
            if (!detail::parse_double(field, row.value))
                throw DataError(detail::concat(path, ":", lineno, ": bad price '", field, "'"));
        }
        per_day[day - 1].push_back(row);
    }
    if (last_day == 0) throw DataError(path + ": no data rows");

    std::vector<double> values;
    values.reserve(cal.first_hour_of_day(last_day) - 1 + std::size_t(cal.hours_in_day(last_day)));
    for (std::size_t d = 1; d <= last_day; ++d) {
        const std::size_t H = std::size_t(cal.hours_in_day(d));
        const auto& rows = per_day[d - 1];
        std::vector<double> slots(H, std::numeric_limits<double>::quiet_NaN());
        if (rows.size() > H) {
            throw DataError(detail::concat(path, ": day ", format_date(cal.date_of_day(d)),
                                           " has ", rows.size(), " rows, calendar says ", H));
        } else if (rows.size() == H && H != 24) {
            for (std::size_t i = 0; i < H; ++i) slots[i] = rows[i].value;
        } else if (H == 24) {
            std::vector<bool> seen(24, false);
            for (const Row& row : rows) {
                if (seen[std::size_t(row.hour)])
                    throw DataError(detail::concat(path, ":", row.lineno, ": duplicate hour ",
                                                   row.hour, " on ",
                                                   format_date(cal.date_of_day(d))));
                seen[std::size_t(row.hour)] = true;
                slots[std::size_t(row.hour)] = row.value;
            }
        } else if (!rows.empty()) {
            // On a clock-change day the slot of an absent row is ambiguous.
            throw DataError(detail::concat(path, ": day ", format_date(cal.date_of_day(d)),
                                           " has ", rows.size(), " rows, calendar says ", H,
                                           " (incomplete clock-change days are not supported)"));
        }
        values.insert(values.end(), slots.begin(), slots.end());
    }
    return HourlySeries(std::move(calendar), std::move(values), market_id);
}

namespace detail {

/// Local clock hours (HH) of a day, in slot order. The spring clock change
/// removes 02:00, the autumn one duplicates it.
inline std::vector<int> clock_hours(std::size_t day_length) {
    std::vector<int> hh;
    hh.reserve(day_length);
    for (int h = 0; h < 24; ++h) {
        if (day_length == 23 && h == 2) continue;
        hh.push_back(h);
        if (day_length == 25 && h == 2) hh.push_back(h);
    }
    if (hh.size() != day_length)
        throw DataError(detail::concat("unsupported day length ", day_length));
    return hh;
}

inline void format_price(std::ostream& out, double v) {
    if (std::isnan(v)) return;  // missing slots serialize as empty fields
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
}

}  // namespace detail

/// Writes the hourly CSV format load_prices reads; a full round trip
/// reproduces the series exactly, including the duplicated autumn hour.
inline void write_prices(std::ostream& out, const HourlySeries& series) {
    out << "timestamp_local,price\n";
    const TradingCalendar& cal = *series.calendar;
    const std::size_t covered =
        series.values.empty() ? 0 : cal.day_of_time(series.values.size());
    std::size_t t = 0;
    for (std::size_t d = 1; d <= covered; ++d) {
        const std::size_t H = std::size_t(cal.hours_in_day(d));
        const std::vector<int> hh = detail::clock_hours(H);
        const std::string date = format_date(cal.date_of_day(d));
        for (std::size_t i = 0; i < H && t < series.values.size(); ++i, ++t) {
            const char hour_chars[2] = {char('0' + hh[i] / 10), char('0' + hh[i] % 10)};
            out << date << ' ';
            out.write(hour_chars, 2);
            out << ":00,";
            detail::format_price(out, series.values[t]);
            out << '\n';
        }
    }
}

inline void write_prices_file(const std::string& path, const HourlySeries& series) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot create price file: " + path);
    write_prices(out, series);
    if (!out) throw DataError("failed writing price file: " + path);
}

/// Fills every missing slot with the value one week (168 hours) earlier,
/// sweeping forward so chains of missing weeks resolve to the last real value.
inline HourlySeries impute_weekly(HourlySeries series) {
    auto& v = series.values;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (std::isfinite(v[i])) continue;
        if (i < 168)
            throw DataError(detail::concat("series '", series.market_id,
                                           "': missing value at hour ", i + 1,
                                           " has no counterpart one week earlier"));
        v[i] = v[i - 168];
    }
    return series;
}

/// Loads a per-day FX file (`YYYY-MM-DD,rate`), dates consecutive from the
/// calendar's first day. Returns one rate per covered day.
inline std::vector<double> load_fx(const std::string& path, const TradingCalendar& cal) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open fx file: " + path);
    std::vector<double> rates;
    std::string line;
    std::size_t lineno = 0;
    using namespace std::chrono;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw DataError(detail::concat(path, ":", lineno, ": missing comma"));
        const auto date = parse_date(std::string_view(line).substr(0, comma));
        const auto expected =
            year_month_day{sys_days{cal.first_day()} + days{long(rates.size())}};
        if (date != expected)
            throw DataError(detail::concat(path, ":", lineno, ": expected date ",
                                           format_date(expected), ", got ", format_date(date)));
        double rate = 0.0;
        if (!detail::parse_double(std::string_view(line).substr(comma + 1), rate))
            throw DataError(detail::concat(path, ":", lineno, ": bad rate"));
        rates.push_back(rate);
    }
    if (rates.empty()) throw DataError(path + ": no fx rows");
    return rates;
}

/// Converts native-currency prices to EUR by dividing each hour by its day's
/// native-per-EUR rate.
inline HourlySeries convert_currency(HourlySeries series, const std::vector<double>& fx) {
    const TradingCalendar& cal = *series.calendar;
    const std::size_t covered_days =
        series.values.empty() ? 0 : cal.day_of_time(series.values.size());
    if (fx.size() < covered_days)
        throw DataError(detail::concat("fx covers ", fx.size(), " days, series needs ",
                                       covered_days));
    for (std::size_t d = 0; d < covered_days; ++d)
        if (!(fx[d] > 0.0))
            throw DataError(detail::concat("non-positive fx rate on day ", d + 1));
    std::size_t t = 0;
    for (std::size_t d = 1; d <= covered_days; ++d) {
        const std::size_t H = std::size_t(cal.hours_in_day(d));
        for (std::size_t i = 0; i < H && t < series.values.size(); ++i, ++t)
            series.values[t] /= fx[d - 1];
    }
    return series;
}

}  // namespace dayahead
