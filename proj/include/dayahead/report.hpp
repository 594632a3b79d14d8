#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dayahead/backtest.hpp"
#include "dayahead/dm.hpp"
#include "dayahead/error.hpp"
#include "dayahead/ingest.hpp"

namespace dayahead {

namespace detail {

/// Shortest representation that parses back to the same double; keeps text
/// outputs byte-stable and lossless.
inline void csv_number(std::ostream& out, double v) {
    if (std::isnan(v)) {
        out << "NA";
        return;
    }
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
}

}  // namespace detail

/// JSON mirror of the metric report plus the study parameters that produced
/// it. Field order is fixed, and every float serializes shortest-round-trip,
/// so equal inputs give byte-identical documents.
inline nlohmann::ordered_json report_to_json(const MetricReport& report,
                                             const StudyConfig& config, const ErrorMatrix& em) {
    nlohmann::ordered_json doc;
    doc["study"] = {
        {"in_sample_days", config.in_sample_days},
        {"rolls", config.rolls},
        {"bootstrap_replicates", config.bootstrap_replicates},
        {"seed", config.seed},
        {"refit_stride", config.refit_stride},
        {"total_out_of_sample_hours", report.total_hours},
    };
    if (em.calendar) {
        doc["study"]["first_forecast_date"] = format_date(em.calendar->date_of_day(em.first_day));
        doc["study"]["last_forecast_date"] =
            format_date(em.calendar->date_of_day(em.first_day + report.rolls - 1));
    }
    doc["hour_counts"] = report.hour_counts;

    doc["models"] = nlohmann::ordered_json::array();
    for (const ModelMetrics& m : report.models) {
        nlohmann::ordered_json jm;
        jm["name"] = m.name;
        jm["p_max"] = m.spec.effective_p_max();
        jm["mae"] = m.mae;
        jm["mae_sd"] = m.mae_sd;
        jm["mae_best"] = m.mae_best;
        jm["mae_within_2sd_of_best"] = m.mae_within_2sd;
        jm["rmse"] = m.rmse;
        jm["rmse_sd"] = m.rmse_sd;
        jm["rmse_best"] = m.rmse_best;
        jm["rmse_within_2sd_of_best"] = m.rmse_within_2sd;
        jm["mae_by_hour"] = m.mae_by_hour;
        jm["rmse_by_hour"] = m.rmse_by_hour;
        jm["order_min"] = m.min_order;
        jm["order_median"] = m.median_order;
        jm["order_max"] = m.max_order;
        doc["models"].push_back(std::move(jm));
    }

    doc["partitions"] = nlohmann::ordered_json::object();
    for (const PartitionTable& table : report.partitions) {
        nlohmann::ordered_json jt = nlohmann::ordered_json::array();
        for (std::size_t m = 0; m < table.per_model.size(); ++m) {
            nlohmann::ordered_json cells = nlohmann::ordered_json::array();
            for (const PartitionCell& cell : table.per_model[m])
                cells.push_back({{"label", cell.label}, {"mae", cell.mae}, {"count", cell.count}});
            jt.push_back({{"model", report.models[m].name}, {"cells", std::move(cells)}});
        }
        doc["partitions"][table.name] = std::move(jt);
    }
    return doc;
}

/// One row per model and metric: long format for spreadsheet pivoting.
inline void write_metrics_csv(std::ostream& out, const MetricReport& report) {
    out << "model,metric,value,bootstrap_sd,best,within_2sd_of_best\n";
    for (const ModelMetrics& m : report.models) {
        out << m.name << ",mae,";
        detail::csv_number(out, m.mae);
        out << ',';
        detail::csv_number(out, m.mae_sd);
        out << ',' << (m.mae_best ? 1 : 0) << ',' << (m.mae_within_2sd ? 1 : 0) << '\n';
        out << m.name << ",rmse,";
        detail::csv_number(out, m.rmse);
        out << ',';
        detail::csv_number(out, m.rmse_sd);
        out << ',' << (m.rmse_best ? 1 : 0) << ',' << (m.rmse_within_2sd ? 1 : 0) << '\n';
    }
}

inline void write_hourly_csv(std::ostream& out, const MetricReport& report) {
    out << "model,hour,count,mae,rmse\n";
    for (const ModelMetrics& m : report.models) {
        for (std::size_t h = 0; h < report.hour_counts.size(); ++h) {
            if (report.hour_counts[h] == 0) continue;
            out << m.name << ',' << (h + 1) << ',' << report.hour_counts[h] << ',';
            detail::csv_number(out, m.mae_by_hour[h]);
            out << ',';
            detail::csv_number(out, m.rmse_by_hour[h]);
            out << '\n';
        }
    }
}

inline void write_partition_csv(std::ostream& out, const MetricReport& report,
                                const PartitionTable& table) {
    out << "model,label,count,mae\n";
    for (std::size_t m = 0; m < table.per_model.size(); ++m)
        for (const PartitionCell& cell : table.per_model[m]) {
            out << report.models[m].name << ',' << cell.label << ',' << cell.count << ',';
            detail::csv_number(out, cell.mae);
            out << '\n';
        }
}

/// Full-precision error export, one row per forecast hour, one column per
/// model. Everything downstream (DM tests included) is recomputable from it.
inline void write_errors_csv(std::ostream& out, const ErrorMatrix& em) {
    out << "roll,day,date,hour,position";
    for (const std::string& name : em.model_names) out << ',' << name;
    out << '\n';
    for (std::size_t r = 1; r <= em.roll_count(); ++r) {
        const std::size_t day = em.day_of_roll(r);
        const std::string date =
            em.calendar ? format_date(em.calendar->date_of_day(day)) : std::string("NA");
        const std::size_t base = em.roll_offsets[r - 1];
        for (std::size_t c = base; c < em.roll_offsets[r]; ++c) {
            out << r << ',' << day << ',' << date << ',' << em.hour_of_column(c) << ','
                << (c - base + 1);
            for (const auto& row : em.errors) {
                out << ',';
                detail::csv_number(out, row[c]);
            }
            out << '\n';
        }
    }
}

/// Rebuilds the error matrix from write_errors_csv output. The calendar is
/// not reconstructed; the result supports error-indexed computations (DM,
/// point and hourly metrics) but not calendar partitions.
inline ErrorMatrix read_errors_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open errors file: " + path);
    ErrorMatrix em;
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty errors file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::size_t field = 0, start = 0;
        while (start <= line.size()) {
            std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) comma = line.size();
            const std::string name = line.substr(start, comma - start);
            if (field >= 5) em.model_names.push_back(name);
            ++field;
            start = comma + 1;
        }
        if (em.model_names.empty())
            throw DataError(path + ": header carries no model columns");
    }
    em.errors.resize(em.model_names.size());
    std::size_t lineno = 1;
    std::size_t last_roll = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) comma = line.size();
            fields.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        if (fields.size() != 5 + em.model_names.size())
            throw DataError(detail::concat(path, ":", lineno, ": expected ",
                                           5 + em.model_names.size(), " fields, got ",
                                           fields.size()));
        std::uint64_t roll = 0, day = 0, hour = 0;
        const auto parse_count = [&](const std::string& text, std::uint64_t& v) {
            const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
            if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
                throw DataError(detail::concat(path, ":", lineno, ": bad count '", text, "'"));
        };
        parse_count(fields[0], roll);
        parse_count(fields[1], day);
        parse_count(fields[3], hour);
        if (roll != last_roll) {
            if (roll != last_roll + 1)
                throw DataError(detail::concat(path, ":", lineno, ": roll ", roll,
                                               " does not follow roll ", last_roll));
            if (last_roll == 0) {
                em.first_day = std::size_t(day);
                em.first_hour = std::size_t(hour);
                em.roll_offsets.push_back(0);
            }
            em.roll_offsets.push_back(em.roll_offsets.back());
            last_roll = roll;
        }
        ++em.roll_offsets.back();
        for (std::size_t m = 0; m < em.model_names.size(); ++m) {
            const std::string& text = fields[5 + m];
            double v = 0.0;
            if (text == "NA") {
                v = std::numeric_limits<double>::quiet_NaN();
            } else if (!detail::parse_double(text, v)) {
                throw DataError(detail::concat(path, ":", lineno, ": bad error value '", text,
                                               "'"));
            }
            em.errors[m].push_back(v);
        }
    }
    if (em.roll_offsets.empty()) throw DataError(path + ": no data rows");
    return em;
}

inline void write_dm_csv(std::ostream& out, std::span<const DmResult> results) {
    out << "model_a,model_b,hour,statistic,long_run_variance,order,length,threshold,"
           "significant,degenerate\n";
    for (const DmResult& result : results)
        for (const DmEntry& entry : result.hours) {
            out << result.model_a << ',' << result.model_b << ',' << entry.hour << ',';
            detail::csv_number(out, entry.statistic);
            out << ',';
            detail::csv_number(out, entry.long_run_variance);
            out << ',' << entry.order << ',' << entry.length << ',';
            detail::csv_number(out, entry.threshold);
            out << ',' << (entry.significant ? 1 : 0) << ',' << (entry.degenerate ? 1 : 0)
                << '\n';
        }
}

}  // namespace dayahead
