#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "dayahead/calendar.hpp"
#include "dayahead/estimation.hpp"
#include "dayahead/rng.hpp"
#include "dayahead/series.hpp"

namespace testutil {

inline std::shared_ptr<const dayahead::TradingCalendar> regular_calendar(
    std::chrono::year_month_day first, std::size_t days) {
    return std::make_shared<const dayahead::TradingCalendar>(
        dayahead::TradingCalendar::regular(first, days));
}

inline std::shared_ptr<const dayahead::TradingCalendar> calendar_with_lengths(
    std::chrono::year_month_day first, std::vector<int> lengths) {
    return std::make_shared<const dayahead::TradingCalendar>(
        dayahead::TradingCalendar(first, std::move(lengths)));
}

constexpr std::chrono::year_month_day kMonday2018{std::chrono::year{2018}, std::chrono::month{1},
                                                  std::chrono::day{1}};

/// AR(p) sample path with standard-normal innovations scaled by sigma.
inline std::vector<double> simulate_ar(const std::vector<double>& phi, double sigma,
                                       std::size_t n, std::uint64_t seed,
                                       std::size_t burn = 1000) {
    dayahead::Rng rng(seed);
    std::vector<double> lags(phi.size(), 0.0);
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t t = 0; t < burn + n; ++t) {
        double x = sigma * rng.normal();
        for (std::size_t j = 0; j < phi.size(); ++j) x += phi[j] * lags[j];
        if (!lags.empty()) {
            for (std::size_t j = lags.size(); j-- > 1;) lags[j] = lags[j - 1];
            lags[0] = x;
        }
        if (t >= burn) out.push_back(x);
    }
    return out;
}

/// VAR(1) sample path, innovations N(0, I) premultiplied by chol-like scale.
inline std::pair<std::vector<double>, std::vector<double>> simulate_var1(
    const dayahead::Mat2& A, double sigma, std::size_t n, std::uint64_t seed,
    std::size_t burn = 1000) {
    dayahead::Rng rng(seed);
    dayahead::Vec2 x{0.0, 0.0};
    std::vector<double> xs, ys;
    xs.reserve(n);
    ys.reserve(n);
    for (std::size_t t = 0; t < burn + n; ++t) {
        const dayahead::Vec2 eps{sigma * rng.normal(), sigma * rng.normal()};
        x = A * x + eps;
        if (t >= burn) {
            xs.push_back(x.x);
            ys.push_back(x.y);
        }
    }
    return {std::move(xs), std::move(ys)};
}

/// Exact autocovariances gamma(0..max_lag) of a stationary AR(1).
inline std::vector<double> ar1_gamma(double phi, double sigma2, std::size_t max_lag) {
    std::vector<double> g(max_lag + 1);
    g[0] = sigma2 / (1.0 - phi * phi);
    for (std::size_t k = 1; k <= max_lag; ++k) g[k] = phi * g[k - 1];
    return g;
}

/// Exact autocovariances of a stationary AR(2) from the Yule-Walker moments.
inline std::vector<double> ar2_gamma(double phi1, double phi2, double sigma2,
                                     std::size_t max_lag) {
    const double g0 = sigma2 * (1.0 - phi2) /
                      ((1.0 + phi2) * ((1.0 - phi2) * (1.0 - phi2) - phi1 * phi1));
    std::vector<double> g(max_lag + 1);
    g[0] = g0;
    if (max_lag >= 1) g[1] = phi1 * g0 / (1.0 - phi2);
    for (std::size_t k = 2; k <= max_lag; ++k) g[k] = phi1 * g[k - 1] + phi2 * g[k - 2];
    return g;
}

/// Exact cross-covariances of a stationary VAR(1) with innovation covariance
/// Sigma: Gamma(0) solves the fixed point Gamma = A Gamma A' + Sigma, then
/// Gamma(k) = A Gamma(k-1).
inline std::vector<dayahead::Mat2> var1_gamma(const dayahead::Mat2& A,
                                              const dayahead::Mat2& Sigma,
                                              std::size_t max_lag) {
    dayahead::Mat2 g0{1.0, 0.0, 0.0, 1.0};
    for (int it = 0; it < 20000; ++it) {
        const dayahead::Mat2 next = A * g0 * A.transpose() + Sigma;
        const double diff = std::abs(next.a - g0.a) + std::abs(next.b - g0.b) +
                            std::abs(next.c - g0.c) + std::abs(next.d - g0.d);
        g0 = next;
        if (diff < 1e-15) break;
    }
    std::vector<dayahead::Mat2> g(max_lag + 1);
    g[0] = g0;
    for (std::size_t k = 1; k <= max_lag; ++k) g[k] = A * g[k - 1];
    return g;
}

inline double mean_abs(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return v.empty() ? 0.0 : s / double(v.size());
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("dayahead-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

    std::string file(const std::string& name, const std::string& content) const {
        const std::string p = (path_ / name).string();
        write_file(p, content);
        return p;
    }

    std::string sub(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

#ifdef DAYAHEAD_CLI_PATH
struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr interleaved
};

inline CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(DAYAHEAD_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    CliResult result;
    if (!pipe) return result;
    char buf[4096];
    std::size_t got = 0;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) result.output.append(buf, got);
    const int status = pclose(pipe);
    result.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    return result;
}
#endif

}  // namespace testutil
