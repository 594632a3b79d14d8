#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dayahead/error.hpp"

namespace dayahead {

/// Formats a civil date as YYYY-MM-DD.
inline std::string format_date(std::chrono::year_month_day ymd) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()));
    return buf;
}

/// Parses a strict YYYY-MM-DD date. Throws DataError on anything else.
inline std::chrono::year_month_day parse_date(std::string_view s) {
    auto fail = [&] { throw DataError(detail::concat("invalid date '", s, "', expected YYYY-MM-DD")); };
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') fail();
    auto num = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (s[i] < '0' || s[i] > '9') fail();
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    std::chrono::year_month_day ymd{std::chrono::year{num(0, 4)},
                                    std::chrono::month{unsigned(num(5, 2))},
                                    std::chrono::day{unsigned(num(8, 2))}};
    if (!ymd.ok()) fail();
    return ymd;
}

/// How the out-of-sample hours are grouped for partitioned error tables.
struct PartitionScheme {
    enum class Kind { monthly, daily, annual };

    Kind kind = Kind::monthly;
    std::size_t group_count = 0;      // annual only
    std::size_t range_first_day = 1;  // annual only: 1-based day index of the labeled range
    std::size_t range_day_count = 0;  // annual only

    static PartitionScheme monthly() { return {Kind::monthly, 12, 1, 0}; }
    static PartitionScheme daily() { return {Kind::daily, 7, 1, 0}; }

    /// Annual scheme splitting [first_day, first_day+day_count) into `groups`
    /// contiguous equal-length day blocks; remainder days fall into the last block.
    static PartitionScheme annual(std::size_t groups, std::size_t first_day, std::size_t day_count) {
        if (groups == 0) throw DataError("annual partition needs at least one group");
        if (day_count < groups)
            throw DataError(detail::concat("annual partition: ", day_count,
                                           " days cannot fill ", groups, " groups"));
        return {Kind::annual, groups, first_day, day_count};
    }

    /// All labels the scheme can produce, in reporting order.
    std::vector<std::string> labels() const {
        static constexpr const char* kMonths[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                  "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
        static constexpr const char* kWeekdays[] = {"Mon", "Tue", "Wed", "Thu",
                                                    "Fri", "Sat", "Sun"};
        std::vector<std::string> out;
        switch (kind) {
            case Kind::monthly:
                out.assign(std::begin(kMonths), std::end(kMonths));
                break;
            case Kind::daily:
                out.assign(std::begin(kWeekdays), std::end(kWeekdays));
                break;
            case Kind::annual:
                for (std::size_t g = 1; g <= group_count; ++g)
                    out.push_back("G" + std::to_string(g));
                break;
        }
        return out;
    }

    std::size_t label_count() const {
        switch (kind) {
            case Kind::monthly: return 12;
            case Kind::daily: return 7;
            case Kind::annual: return group_count;
        }
        return 0;
    }
};

/// Hour/day bookkeeping for hourly series whose days have 23, 24 or 25 hours.
///
/// Days and hours are both 1-based: day d covers the hour indices
/// [first_hour_of_day(d), first_hour_of_day(d) + hours_in_day(d) - 1].
/// Immutable after construction; concurrent reads are safe.
class TradingCalendar {
public:
    TradingCalendar(std::chrono::year_month_day first_day, std::vector<int> day_lengths)
        : first_day_(first_day) {
        if (day_lengths.empty()) throw DataError("calendar needs at least one day");
        if (!first_day.ok()) throw DataError("calendar first day is not a valid date");
        day_lengths_.reserve(day_lengths.size());
        offsets_.reserve(day_lengths.size() + 1);
        offsets_.push_back(0);
        for (std::size_t i = 0; i < day_lengths.size(); ++i) {
            const int h = day_lengths[i];
            if (h < 23 || h > 25)
                throw DataError(detail::concat("day ", i + 1, " has ", h,
                                               " hours, expected 23, 24 or 25"));
            day_lengths_.push_back(std::uint8_t(h));
            offsets_.push_back(offsets_.back() + std::uint64_t(h));
        }
    }

    /// All-24h calendar, the common case in tests and tools.
    static TradingCalendar regular(std::chrono::year_month_day first_day, std::size_t days) {
        return TradingCalendar(first_day, std::vector<int>(days, 24));
    }

    /// Sub-calendar of `count` days starting at day `first` (1-based). Dates
    /// and day lengths carry over, so date-derived labels stay consistent
    /// with the original.
    TradingCalendar slice(std::size_t first, std::size_t count) const {
        check_day(first);
        if (count == 0 || first + count - 1 > day_count())
            throw DataError(detail::concat("slice of ", count, " days from day ", first,
                                           " exceeds the ", day_count(), "-day calendar"));
        std::vector<int> lengths(count);
        for (std::size_t i = 0; i < count; ++i) lengths[i] = hours_in_day(first + i);
        return TradingCalendar(date_of_day(first), std::move(lengths));
    }

    std::size_t day_count() const { return day_lengths_.size(); }
    std::size_t total_hours() const { return std::size_t(offsets_.back()); }
    std::chrono::year_month_day first_day() const { return first_day_; }

    /// H(d): traded hours of day d.
    int hours_in_day(std::size_t d) const {
        check_day(d);
        return int(day_lengths_[d - 1]);
    }

    /// M(d): hour index starting day d, so M(1) = 1.
    std::size_t first_hour_of_day(std::size_t d) const {
        check_day(d);
        return std::size_t(offsets_[d - 1]) + 1;
    }

    /// The day containing hour t.
    std::size_t day_of_time(std::size_t t) const {
        check_hour(t);
        auto it = std::upper_bound(offsets_.begin(), offsets_.end(), std::uint64_t(t - 1));
        return std::size_t(it - offsets_.begin());
    }

    /// 1-based position of hour t within its day (1..H).
    std::size_t hour_of_day(std::size_t t) const {
        const std::size_t d = day_of_time(t);
        return t - first_hour_of_day(d) + 1;
    }

    std::chrono::year_month_day date_of_day(std::size_t d) const {
        check_day(d);
        using namespace std::chrono;
        return year_month_day{sys_days{first_day_} + days{long(d) - 1}};
    }

    std::chrono::weekday weekday_of_day(std::size_t d) const {
        check_day(d);
        using namespace std::chrono;
        return weekday{sys_days{first_day_} + days{long(d) - 1}};
    }

    /// Deterministic group label for hour t under the given scheme.
    std::string partition_label(std::size_t t, const PartitionScheme& scheme) const {
        static constexpr const char* kMonths[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                  "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
        static constexpr const char* kWeekdays[] = {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};
        const std::size_t d = day_of_time(t);
        switch (scheme.kind) {
            case PartitionScheme::Kind::monthly:
                return kMonths[unsigned(date_of_day(d).month()) - 1];
            case PartitionScheme::Kind::daily:
                return kWeekdays[weekday_of_day(d).iso_encoding() - 1];
            case PartitionScheme::Kind::annual: {
                if (d < scheme.range_first_day ||
                    d >= scheme.range_first_day + scheme.range_day_count)
                    throw std::out_of_range(detail::concat(
                        "day ", d, " outside the annual partition range [", scheme.range_first_day,
                        ", ", scheme.range_first_day + scheme.range_day_count - 1, "]"));
                const std::size_t block = scheme.range_day_count / scheme.group_count;
                std::size_t g = (d - scheme.range_first_day) / block + 1;
                g = std::min(g, scheme.group_count);  // remainder days stay in the last block
                return "G" + std::to_string(g);
            }
        }
        throw DataError("unknown partition kind");
    }

    /// Reads the one-line-per-day sidecar format `YYYY-MM-DD,H`.
    static TradingCalendar from_csv(std::istream& in) {
        std::string line;
        std::vector<int> lengths;
        bool have_first = false;
        std::chrono::year_month_day first{};
        std::size_t lineno = 0;
        using namespace std::chrono;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos)
                throw DataError(detail::concat("calendar line ", lineno, ": missing comma"));
            const auto date = parse_date(std::string_view(line).substr(0, comma));
            int hours = 0;
            try {
                std::size_t used = 0;
                hours = std::stoi(line.substr(comma + 1), &used);
                if (used != line.size() - comma - 1) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw DataError(detail::concat("calendar line ", lineno, ": bad hour count '",
                                               line.substr(comma + 1), "'"));
            }
            if (!have_first) {
                first = date;
                have_first = true;
            } else {
                const auto expected =
                    year_month_day{sys_days{first} + days{long(lengths.size())}};
                if (date != expected)
                    throw DataError(detail::concat("calendar line ", lineno, ": expected date ",
                                                   format_date(expected), ", got ",
                                                   format_date(date)));
            }
            lengths.push_back(hours);
        }
        if (!have_first) throw DataError("calendar file is empty");
        return TradingCalendar(first, std::move(lengths));
    }

    static TradingCalendar from_csv_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open calendar file: " + path);
        return from_csv(in);
    }

    void to_csv(std::ostream& out) const {
        for (std::size_t d = 1; d <= day_count(); ++d)
            out << format_date(date_of_day(d)) << ',' << hours_in_day(d) << '\n';
    }

    bool operator==(const TradingCalendar& other) const {
        return first_day_ == other.first_day_ && day_lengths_ == other.day_lengths_;
    }

private:
    void check_day(std::size_t d) const {
        if (d < 1 || d > day_lengths_.size())
            throw std::out_of_range(detail::concat("day index ", d, " outside [1, ",
                                                   day_lengths_.size(), "]"));
    }
    void check_hour(std::size_t t) const {
        if (t < 1 || t > total_hours())
            throw std::out_of_range(detail::concat("hour index ", t, " outside [1, ",
                                                   total_hours(), "]"));
    }

    std::chrono::year_month_day first_day_;
    std::vector<std::uint8_t> day_lengths_;
    std::vector<std::uint64_t> offsets_;  // offsets_[d] = hours strictly before day d+1
};

}  // namespace dayahead
