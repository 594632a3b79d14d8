// Batch driver: synthetic data generation, rolling-origin backtests, and
// pairwise forecast comparison tests. Every run writes a manifest with
// SHA-256 digests of its config, inputs, and outputs so results can be
// traced back to exactly what produced them.

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dayahead/backtest.hpp"
#include "dayahead/config.hpp"
#include "dayahead/dm.hpp"
#include "dayahead/report.hpp"
#include "dayahead/synth.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace dayahead;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file for digest: " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw NumericError("SHA-256 context initialisation failed");
    }
    char buf[65536];
    while (in.read(buf, sizeof buf), in.gcount() > 0)
        EVP_DigestUpdate(ctx, buf, std::size_t(in.gcount()));
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out = "sha256:";
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

std::string iso_utc(std::chrono::system_clock::time_point tp) {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

/// The files a command promises to produce. Collisions are rejected up front
/// (unless forced), and everything written so far is removed if the run dies
/// before commit(), so an output directory is never left half-populated.
class OutputSet {
public:
    OutputSet(fs::path dir, bool force) : dir_(std::move(dir)), force_(force) {}

    ~OutputSet() {
        if (committed_) return;
        for (const fs::path& p : written_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }

    void reserve(const std::vector<std::string>& names) {
        fs::create_directories(dir_);
        for (const std::string& name : names) {
            if (!force_ && fs::exists(dir_ / name))
                throw DataError("output already exists (pass --force to overwrite): " +
                                (dir_ / name).string());
        }
        names_ = names;
    }

    template <class Fn>
    void write(const std::string& name, Fn&& body) {
        const fs::path p = dir_ / name;
        {
            std::ofstream out(p, std::ios::binary | std::ios::trunc);
            if (!out) throw DataError("cannot create output file: " + p.string());
            body(out);
            out.flush();
            if (!out) throw DataError("write failed: " + p.string());
        }
        written_.push_back(p);
    }

    /// Digests of everything written so far, keyed by file name.
    std::map<std::string, std::string> digests() const {
        std::map<std::string, std::string> out;
        for (const fs::path& p : written_) out[p.filename().string()] = sha256_file(p);
        return out;
    }

    void commit() { committed_ = true; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    bool force_ = false;
    bool committed_ = false;
    std::vector<std::string> names_;
    std::vector<fs::path> written_;
};

struct ManifestInfo {
    std::string command;
    std::string config_path;  // empty when the command ran on defaults
    std::map<std::string, std::string> input_digests;
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::size_t jobs = 0;  // 0 = not applicable
    std::chrono::system_clock::time_point started;
};

void write_manifest(OutputSet& outputs, const ManifestInfo& info) {
    const auto finished = std::chrono::system_clock::now();
    nlohmann::ordered_json doc;
    doc["tool"] = "dayahead";
    doc["version"] = kVersion;
    doc["command"] = info.command;
    if (info.has_seed) doc["seed"] = info.seed;
    if (info.jobs > 0) doc["jobs"] = info.jobs;
    if (!info.config_path.empty()) {
        doc["config"] = {{"path", info.config_path}, {"digest", sha256_file(info.config_path)}};
    }
    doc["inputs"] = nlohmann::ordered_json::object();
    for (const auto& [name, digest] : info.input_digests) doc["inputs"][name] = digest;
    doc["outputs"] = nlohmann::ordered_json::object();
    for (const auto& [name, digest] : outputs.digests()) doc["outputs"][name] = digest;
    doc["started_at"] = iso_utc(info.started);
    doc["finished_at"] = iso_utc(finished);
    doc["wall_seconds"] =
        std::chrono::duration<double>(finished - info.started).count();
    outputs.write("manifest.json", [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
    outputs.commit();
}

/// Paths inside a config file are taken relative to the config file itself,
/// not the working directory the tool happened to run from.
std::string resolve_path(const std::string& config_path, const std::string& value) {
    const fs::path p(value);
    if (p.is_absolute() || config_path.empty()) return value;
    return (fs::path(config_path).parent_path() / p).string();
}

void reject_unused_keys(const Config& cfg) {
    const auto unused = cfg.unused_keys();
    if (unused.empty()) return;
    std::string msg = cfg.origin() + ": unrecognised config keys:";
    for (const std::string& k : unused) msg += " " + k;
    throw DataError(msg);
}

// ---------------------------------------------------------------------------
// synth

int cmd_synth(const std::string& config_path, const std::string& out_dir, bool force,
              std::optional<std::uint64_t> seed_override) {
    ManifestInfo info;
    info.command = "synth";
    info.config_path = config_path;
    info.started = std::chrono::system_clock::now();

    SynthConfig sc;
    if (!config_path.empty()) {
        const Config cfg = Config::from_file(config_path);
        sc.days = cfg.get_size("synth.days", sc.days);
        sc.first_day = parse_date(cfg.get_string("synth.first_day", "2017-01-02"));
        sc.base_level = cfg.get_double("synth.base_level", sc.base_level);
        sc.daily_amplitude = cfg.get_double("synth.daily_amplitude", sc.daily_amplitude);
        sc.weekly_amplitude = cfg.get_double("synth.weekly_amplitude", sc.weekly_amplitude);
        sc.exaa_ar = cfg.get_double_list("synth.exaa_ar", sc.exaa_ar);
        sc.exaa_sigma = cfg.get_double("synth.exaa_sigma", sc.exaa_sigma);
        sc.spread_phi = cfg.get_double("synth.spread_phi", sc.spread_phi);
        sc.spread_sigma = cfg.get_double("synth.spread_sigma", sc.spread_sigma);
        sc.idio_sigma = cfg.get_double("synth.idio_sigma", sc.idio_sigma);
        sc.student_t_df = unsigned(cfg.get_u64("synth.student_t_df", sc.student_t_df));
        sc.short_days = cfg.get_size_list("synth.short_days", sc.short_days);
        sc.long_days = cfg.get_size_list("synth.long_days", sc.long_days);
        sc.seed = cfg.get_u64("synth.seed", sc.seed);
        sc.exaa_id = cfg.get_string("synth.exaa_id", sc.exaa_id);
        sc.target_id = cfg.get_string("synth.target_id", sc.target_id);
        reject_unused_keys(cfg);
    }
    if (seed_override) {
        sc.seed = *seed_override;
        info.seed = *seed_override;
        info.has_seed = true;
    } else {
        info.seed = sc.seed;
        info.has_seed = true;
    }

    const SynthOutput data = generate(sc);
    const std::shared_ptr<const TradingCalendar> cal = data.pair.target.calendar;

    OutputSet outputs(out_dir, force);
    outputs.reserve({"calendar.csv", "exaa.csv", "target.csv", "spread.csv", "manifest.json"});
    outputs.write("calendar.csv", [&](std::ostream& out) { cal->to_csv(out); });
    outputs.write("exaa.csv", [&](std::ostream& out) { write_prices(out, data.pair.exaa); });
    outputs.write("target.csv", [&](std::ostream& out) { write_prices(out, data.pair.target); });
    const HourlySeries spread(cal, data.spread, sc.target_id + "-spread");
    outputs.write("spread.csv", [&](std::ostream& out) { write_prices(out, spread); });
    write_manifest(outputs, info);
    return 0;
}

// ---------------------------------------------------------------------------
// backtest

std::vector<ModelSpec> build_model_specs(const std::vector<std::string>& names,
                                         std::size_t ar_p_max, std::size_t var_p_max,
                                         bool delta_raw) {
    std::vector<ModelSpec> specs;
    for (const std::string& name : names) {
        ModelSpec spec = ModelSpec::of(model_kind_from_string(name));
        if (spec.is_bivariate())
            spec.p_max = var_p_max;
        else if (spec.is_autoregressive())
            spec.p_max = ar_p_max;
        if (spec.kind == ModelKind::delta_ar) spec.raw_delta = delta_raw;
        for (const ModelSpec& prior : specs)
            if (prior.kind == spec.kind)
                throw DataError("model listed twice: " + name);
        specs.push_back(spec);
    }
    return specs;
}

int cmd_backtest(const std::string& config_path, const std::string& out_dir, bool force,
                 std::optional<std::uint64_t> seed_override, std::size_t jobs) {
    ManifestInfo info;
    info.command = "backtest";
    info.config_path = config_path;
    info.jobs = jobs;
    info.started = std::chrono::system_clock::now();

    const Config cfg = Config::from_file(config_path);

    const std::string cal_path = resolve_path(config_path, cfg.require_string("data.calendar"));
    const std::string exaa_path = resolve_path(config_path, cfg.require_string("data.exaa"));
    const std::string target_path = resolve_path(config_path, cfg.require_string("data.target"));
    const std::string exaa_fx = cfg.get_string("data.exaa_fx", "");
    const std::string target_fx = cfg.get_string("data.target_fx", "");
    const bool impute = cfg.get_bool("data.impute", true);

    StudyConfig sc;
    sc.in_sample_days = cfg.get_size("study.in_sample_days", sc.in_sample_days);
    sc.rolls = cfg.get_size("study.rolls", sc.rolls);
    sc.bootstrap_replicates =
        cfg.get_size("study.bootstrap_replicates", sc.bootstrap_replicates);
    sc.seed = cfg.get_u64("study.seed", sc.seed);
    sc.refit_stride = cfg.get_size("study.refit_stride", sc.refit_stride);
    if (seed_override) sc.seed = *seed_override;
    info.seed = sc.seed;
    info.has_seed = true;

    std::vector<std::string> model_names{"naive", "ar", "naive_exaa", "var2d", "var2d_shifted",
                                         "delta_ar"};
    model_names = cfg.get_string_list("study.models", model_names);
    const std::size_t ar_p_max = cfg.get_size("models.ar_p_max", 0);
    const std::size_t var_p_max = cfg.get_size("models.var_p_max", 0);
    const bool delta_raw = cfg.get_bool("models.delta_raw", false);
    sc.models = build_model_specs(model_names, ar_p_max, var_p_max, delta_raw);

    // 0 picks one group per started year of the out-of-sample period.
    std::size_t annual_groups = cfg.get_size("partitions.annual_groups", 0);
    if (annual_groups == 0) annual_groups = (sc.rolls + 364) / 365;
    reject_unused_keys(cfg);

    auto calendar = std::make_shared<const TradingCalendar>(
        TradingCalendar::from_csv_file(cal_path));
    info.input_digests["calendar"] = sha256_file(cal_path);
    info.input_digests["exaa"] = sha256_file(exaa_path);
    info.input_digests["target"] = sha256_file(target_path);

    HourlySeries exaa = load_prices(exaa_path, "exaa", calendar);
    HourlySeries target = load_prices(target_path, "target", calendar);
    if (!exaa_fx.empty()) {
        const std::string p = resolve_path(config_path, exaa_fx);
        info.input_digests["exaa_fx"] = sha256_file(p);
        exaa = convert_currency(std::move(exaa), load_fx(p, *calendar));
    }
    if (!target_fx.empty()) {
        const std::string p = resolve_path(config_path, target_fx);
        info.input_digests["target_fx"] = sha256_file(p);
        target = convert_currency(std::move(target), load_fx(p, *calendar));
    }
    if (impute) {
        exaa = impute_weekly(std::move(exaa));
        target = impute_weekly(std::move(target));
    }
    const MarketPair pair(std::move(exaa), std::move(target));

    const ErrorMatrix em = run_study(pair, sc, jobs);

    const std::vector<std::pair<std::string, PartitionScheme>> schemes = {
        {"monthly", PartitionScheme::monthly()},
        {"daily", PartitionScheme::daily()},
        {"annual", PartitionScheme::annual(annual_groups, sc.in_sample_days + 1, sc.rolls)},
    };
    const MetricReport report =
        compute_metrics(em, sc.bootstrap_replicates, sc.seed, schemes, jobs);

    OutputSet outputs(out_dir, force);
    outputs.reserve({"report.json", "metrics.csv", "hourly.csv", "partition_monthly.csv",
                     "partition_daily.csv", "partition_annual.csv", "errors.csv",
                     "manifest.json"});
    const nlohmann::ordered_json doc = report_to_json(report, sc, em);
    outputs.write("report.json", [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
    outputs.write("metrics.csv", [&](std::ostream& out) { write_metrics_csv(out, report); });
    outputs.write("hourly.csv", [&](std::ostream& out) { write_hourly_csv(out, report); });
    for (std::size_t i = 0; i < schemes.size(); ++i)
        outputs.write("partition_" + schemes[i].first + ".csv", [&](std::ostream& out) {
            write_partition_csv(out, report, report.partitions[i]);
        });
    outputs.write("errors.csv", [&](std::ostream& out) { write_errors_csv(out, em); });
    write_manifest(outputs, info);
    return 0;
}

// ---------------------------------------------------------------------------
// dm

std::size_t model_index(const ErrorMatrix& em, const std::string& name) {
    for (std::size_t m = 0; m < em.model_names.size(); ++m)
        if (em.model_names[m] == name) return m;
    std::string msg = "model '" + name + "' not present in the errors file; available:";
    for (const std::string& n : em.model_names) msg += " " + n;
    throw DataError(msg);
}

int cmd_dm(const std::string& config_path, const std::string& out_dir, bool force,
           const std::string& errors_flag) {
    ManifestInfo info;
    info.command = "dm";
    info.config_path = config_path;
    info.started = std::chrono::system_clock::now();

    std::string errors_path = errors_flag;
    std::string baseline = "ar";
    std::vector<std::string> pair_specs;
    DmConfig dc;
    if (!config_path.empty()) {
        const Config cfg = Config::from_file(config_path);
        if (errors_path.empty())
            errors_path = resolve_path(config_path, cfg.get_string("dm.errors", ""));
        else
            cfg.get_string("dm.errors", "");  // flag wins, key still counts as consumed
        baseline = cfg.get_string("dm.baseline", baseline);
        pair_specs = cfg.get_string_list("dm.pairs", {});
        dc.power = cfg.get_double("dm.power", dc.power);
        dc.q_max = cfg.get_size("dm.q_max", dc.q_max);
        dc.min_length = cfg.get_size("dm.min_length", dc.min_length);
        dc.threshold = cfg.get_double("dm.threshold", dc.threshold);
        reject_unused_keys(cfg);
    }
    if (errors_path.empty())
        throw DataError("no errors file: pass --errors or set dm.errors in the config");

    const ErrorMatrix em = read_errors_csv(errors_path);
    info.input_digests["errors"] = sha256_file(errors_path);

    // Each pair a:b asks whether b improves on a, so the default puts the
    // baseline first and every other model second.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (pair_specs.empty()) {
        const std::size_t base = model_index(em, baseline);
        for (std::size_t m = 0; m < em.model_names.size(); ++m)
            if (m != base) pairs.emplace_back(base, m);
        if (pairs.empty())
            throw DataError("errors file holds only the baseline model; nothing to compare");
    } else {
        for (const std::string& spec : pair_specs) {
            const auto colon = spec.find(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 == spec.size())
                throw DataError("malformed pair '" + spec + "'; expected a:b");
            pairs.emplace_back(model_index(em, spec.substr(0, colon)),
                               model_index(em, spec.substr(colon + 1)));
        }
    }

    std::vector<DmResult> results;
    results.reserve(pairs.size());
    for (const auto& [a, b] : pairs) results.push_back(run_dm(em, a, b, dc));

    OutputSet outputs(out_dir, force);
    outputs.reserve({"dm.csv", "manifest.json"});
    outputs.write("dm.csv", [&](std::ostream& out) { write_dm_csv(out, results); });
    write_manifest(outputs, info);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Day-ahead electricity price forecasting toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path, out_dir, errors_flag;
    bool force = false;
    std::size_t jobs = 1;
    std::uint64_t seed_value = 0;

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic market pair");
    synth->add_option("--config", config_path, "Config file ([synth] section)")
        ->check(CLI::ExistingFile);
    synth->add_option("--out", out_dir, "Output directory")->required();
    CLI::Option* synth_seed = synth->add_option("--seed", seed_value, "Override the config seed");
    synth->add_flag("--force", force, "Overwrite existing outputs");

    CLI::App* backtest = app.add_subcommand("backtest", "Run the rolling-origin study");
    backtest->add_option("--config", config_path, "Config file ([data]/[study] sections)")
        ->required()
        ->check(CLI::ExistingFile);
    backtest->add_option("--out", out_dir, "Output directory")->required();
    CLI::Option* backtest_seed =
        backtest->add_option("--seed", seed_value, "Override the config seed");
    backtest->add_option("--jobs", jobs, "Worker threads (results do not depend on this)")
        ->check(CLI::PositiveNumber);
    backtest->add_flag("--force", force, "Overwrite existing outputs");

    CLI::App* dm = app.add_subcommand("dm", "Forecast comparison tests on an errors export");
    dm->add_option("--config", config_path, "Config file ([dm] section)")
        ->check(CLI::ExistingFile);
    dm->add_option("--errors", errors_flag, "errors.csv from a backtest run")
        ->check(CLI::ExistingFile);
    dm->add_option("--out", out_dir, "Output directory")->required();
    dm->add_flag("--force", force, "Overwrite existing outputs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            std::optional<std::uint64_t> seed;
            if (synth_seed->count() > 0) seed = seed_value;
            return cmd_synth(config_path, out_dir, force, seed);
        }
        if (backtest->parsed()) {
            std::optional<std::uint64_t> seed;
            if (backtest_seed->count() > 0) seed = seed_value;
            return cmd_backtest(config_path, out_dir, force, seed, jobs);
        }
        if (dm->parsed()) return cmd_dm(config_path, out_dir, force, errors_flag);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
