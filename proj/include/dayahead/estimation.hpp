#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "dayahead/detail/fft.hpp"
#include "dayahead/error.hpp"

namespace dayahead {

// ---------------------------------------------------------------------------
// Small fixed-size linear algebra for the bivariate recursions.

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
};

struct Mat2 {
    // Row-major: [a b; c d].
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    double det() const { return a * d - b * c; }
    Mat2 transpose() const { return {a, c, b, d}; }

    Mat2 inverse() const {
        const double dt = det();
        if (!(std::abs(dt) > 0.0) || !std::isfinite(dt))
            throw NumericError("singular 2x2 matrix in recursion");
        const double s = 1.0 / dt;
        return {d * s, -b * s, -c * s, a * s};
    }

    friend Mat2 operator+(Mat2 p, Mat2 q) { return {p.a + q.a, p.b + q.b, p.c + q.c, p.d + q.d}; }
    friend Mat2 operator-(Mat2 p, Mat2 q) { return {p.a - q.a, p.b - q.b, p.c - q.c, p.d - q.d}; }
    friend Mat2 operator*(Mat2 p, Mat2 q) {
        return {p.a * q.a + p.b * q.c, p.a * q.b + p.b * q.d,
                p.c * q.a + p.d * q.c, p.c * q.b + p.d * q.d};
    }
    friend Vec2 operator*(Mat2 p, Vec2 v) {
        return {p.a * v.x + p.b * v.y, p.c * v.x + p.d * v.y};
    }
    friend Mat2 operator*(double s, Mat2 p) { return {s * p.a, s * p.b, s * p.c, s * p.d}; }
};

/// Symmetric positive definite test for covariance updates (symmetric input
/// assumed; uses the leading-minor criterion).
inline bool is_positive_definite(const Mat2& m) {
    return m.a > 0.0 && m.det() > 0.0;
}

inline Mat2 symmetrize(const Mat2& m) {
    const double off = 0.5 * (m.b + m.c);
    return {m.a, off, off, m.d};
}

// ---------------------------------------------------------------------------
// Sample autocovariances. All estimates divide by the full sample size n
// (not n - k), which keeps the implied Toeplitz covariance matrix positive
// semidefinite and therefore every Yule-Walker fit stationary.

enum class AutocovMethod {
    automatic,  ///< FFT for large lag counts, direct sums otherwise
    direct,
    fft,
};

struct Autocovariance {
    std::vector<double> gamma;  ///< gamma[k] for k = 0..max_lag
    std::size_t sample_size = 0;
    double mean = 0.0;  ///< sample mean removed before the products

    std::size_t max_lag() const { return gamma.empty() ? 0 : gamma.size() - 1; }
};

/// Cross-covariance matrices Gamma(k) = (1/n) sum_t X_{t+k} X_t' for the
/// demeaned pair X_t = (a_t, b_t)'. Gamma(-k) = Gamma(k)'.
struct CrossCovariance {
    std::vector<Mat2> gamma;  ///< Gamma(k) for k = 0..max_lag
    std::size_t sample_size = 0;
    Vec2 mean{};

    std::size_t max_lag() const { return gamma.empty() ? 0 : gamma.size() - 1; }

    Mat2 at(long k) const {
        const Mat2& g = gamma.at(std::size_t(k < 0 ? -k : k));
        return k < 0 ? g.transpose() : g;
    }
};

namespace detail {

inline bool use_fft(AutocovMethod method, std::size_t n, std::size_t max_lag) {
    switch (method) {
        case AutocovMethod::direct: return false;
        case AutocovMethod::fft: return true;
        case AutocovMethod::automatic: break;
    }
    return max_lag >= 64 && n >= 512;
}

inline double mean_of(std::span<const double> y) {
    double s = 0.0;
    for (double v : y) s += v;
    return s / double(y.size());
}

/// Lagged product sums sum_t u[t+k] v[t] for k = 0..max_lag via one circular
/// correlation (Wiener-Khinchin). When `both_directions` is set the result
/// also carries sum_t v[t+k] u[t] in `reverse`.
struct LaggedCorrelation {
    std::vector<double> forward;
    std::vector<double> reverse;
};

inline LaggedCorrelation fft_lagged_products(std::span<const double> u,
                                             std::span<const double> v,
                                             std::size_t max_lag, bool both_directions) {
    const std::size_t n = u.size();
    const std::size_t nfft = next_pow2(n + max_lag + 1);
    std::vector<std::complex<double>> fu(nfft), fv(nfft);
    for (std::size_t t = 0; t < n; ++t) {
        fu[t] = u[t];
        fv[t] = v[t];
    }
    fft_inplace(fu, false);
    fft_inplace(fv, false);
    for (std::size_t i = 0; i < nfft; ++i) fu[i] *= std::conj(fv[i]);
    fft_inplace(fu, true);

    LaggedCorrelation out;
    out.forward.resize(max_lag + 1);
    for (std::size_t k = 0; k <= max_lag; ++k) out.forward[k] = fu[k].real();
    if (both_directions) {
        out.reverse.resize(max_lag + 1);
        out.reverse[0] = out.forward[0];
        for (std::size_t k = 1; k <= max_lag; ++k) out.reverse[k] = fu[nfft - k].real();
    }
    return out;
}

}  // namespace detail

inline Autocovariance sample_autocovariance(std::span<const double> y, std::size_t max_lag,
                                            AutocovMethod method = AutocovMethod::automatic) {
    const std::size_t n = y.size();
    if (n == 0) throw DataError("autocovariance of an empty series");
    if (max_lag >= n)
        throw DataError(detail::concat("autocovariance lag ", max_lag,
                                       " requires more than ", max_lag, " observations, got ", n));
    Autocovariance out;
    out.sample_size = n;
    out.mean = detail::mean_of(y);
    std::vector<double> z(n);
    for (std::size_t t = 0; t < n; ++t) z[t] = y[t] - out.mean;

    out.gamma.resize(max_lag + 1);
    if (detail::use_fft(method, n, max_lag)) {
        auto prod = detail::fft_lagged_products(z, z, max_lag, false);
        for (std::size_t k = 0; k <= max_lag; ++k) out.gamma[k] = prod.forward[k] / double(n);
    } else {
        for (std::size_t k = 0; k <= max_lag; ++k) {
            double s = 0.0;
            for (std::size_t t = 0; t + k < n; ++t) s += z[t + k] * z[t];
            out.gamma[k] = s / double(n);
        }
    }
    return out;
}

inline CrossCovariance sample_cross_covariance(std::span<const double> a,
                                               std::span<const double> b, std::size_t max_lag,
                                               AutocovMethod method = AutocovMethod::automatic) {
    const std::size_t n = a.size();
    if (n == 0) throw DataError("cross-covariance of an empty series");
    if (b.size() != n)
        throw DataError(detail::concat("cross-covariance needs equal lengths, got ", a.size(),
                                       " and ", b.size()));
    if (max_lag >= n)
        throw DataError(detail::concat("cross-covariance lag ", max_lag,
                                       " requires more than ", max_lag, " observations, got ", n));
    CrossCovariance out;
    out.sample_size = n;
    out.mean = {detail::mean_of(a), detail::mean_of(b)};
    std::vector<double> za(n), zb(n);
    for (std::size_t t = 0; t < n; ++t) {
        za[t] = a[t] - out.mean.x;
        zb[t] = b[t] - out.mean.y;
    }

    out.gamma.resize(max_lag + 1);
    if (detail::use_fft(method, n, max_lag)) {
        auto paa = detail::fft_lagged_products(za, za, max_lag, false);
        auto pbb = detail::fft_lagged_products(zb, zb, max_lag, false);
        auto pab = detail::fft_lagged_products(za, zb, max_lag, true);
        for (std::size_t k = 0; k <= max_lag; ++k) {
            out.gamma[k] = {paa.forward[k] / double(n), pab.forward[k] / double(n),
                            pab.reverse[k] / double(n), pbb.forward[k] / double(n)};
        }
    } else {
        for (std::size_t k = 0; k <= max_lag; ++k) {
            double saa = 0.0, sab = 0.0, sba = 0.0, sbb = 0.0;
            for (std::size_t t = 0; t + k < n; ++t) {
                saa += za[t + k] * za[t];
                sab += za[t + k] * zb[t];
                sba += zb[t + k] * za[t];
                sbb += zb[t + k] * zb[t];
            }
            out.gamma[k] = {saa / double(n), sab / double(n), sba / double(n), sbb / double(n)};
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Univariate Yule-Walker via Levinson-Durbin.

struct ArFit {
    double mean = 0.0;
    std::vector<double> coeffs;  ///< phi_1..phi_p
    double sigma2 = 0.0;         ///< innovation variance at the fitted order
    double aic = 0.0;
    std::size_t sample_size = 0;

    std::size_t order() const { return coeffs.size(); }
};

struct LevinsonResult {
    std::vector<double> coeffs;      ///< coefficients at the requested order
    double sigma2 = 0.0;             ///< innovation variance at that order
    std::vector<double> sigma2_path; ///< sigma2_path[m-1] = variance after order m
    std::vector<double> reflection;  ///< reflection[m-1] = kappa_m
};

/// Reflection-coefficient magnitudes are kept strictly below one; a violation
/// means the autocovariance sequence was numerically degenerate and the fit
/// would not be stationary, so it is reported instead of patched over.
inline constexpr double kReflectionMargin = 1e-12;

inline LevinsonResult levinson_durbin(const Autocovariance& acov, std::size_t order) {
    if (order > acov.max_lag())
        throw DataError(detail::concat("Yule-Walker order ", order, " exceeds available lag ",
                                       acov.max_lag()));
    const std::vector<double>& g = acov.gamma;
    if (!(g[0] > 0.0))
        throw NumericError("zero variance series, autoregression undefined");

    LevinsonResult res;
    res.sigma2 = g[0];
    res.sigma2_path.reserve(order);
    res.reflection.reserve(order);
    std::vector<double>& phi = res.coeffs;
    std::vector<double> prev;
    phi.reserve(order);
    prev.reserve(order);

    for (std::size_t m = 1; m <= order; ++m) {
        double num = g[m];
        for (std::size_t j = 1; j < m; ++j) num -= phi[j - 1] * g[m - j];
        const double kappa = num / res.sigma2;
        if (!std::isfinite(kappa) || std::abs(kappa) >= 1.0 - kReflectionMargin)
            throw NumericError(detail::concat(
                "degenerate autocovariance at order ", m,
                ": reflection coefficient ", kappa, " leaves the stationary region"));
        prev = phi;
        phi.push_back(0.0);
        for (std::size_t j = 1; j < m; ++j) phi[j - 1] = prev[j - 1] - kappa * prev[m - j - 1];
        phi[m - 1] = kappa;
        res.sigma2 *= (1.0 - kappa * kappa);
        if (!(res.sigma2 > 0.0))
            throw NumericError(detail::concat("innovation variance collapsed at order ", m));
        res.reflection.push_back(kappa);
        res.sigma2_path.push_back(res.sigma2);
    }
    return res;
}

inline double ar_aic(std::size_t n, double sigma2, std::size_t order) {
    return double(n) * std::log(sigma2) + 2.0 * double(order + 1);
}

inline ArFit fit_ar(const Autocovariance& acov, std::size_t order) {
    LevinsonResult lev = levinson_durbin(acov, order);
    ArFit fit;
    fit.mean = acov.mean;
    fit.coeffs = std::move(lev.coeffs);
    fit.sigma2 = lev.sigma2;
    fit.aic = ar_aic(acov.sample_size, fit.sigma2, order);
    fit.sample_size = acov.sample_size;
    return fit;
}

inline ArFit fit_ar(std::span<const double> y, std::size_t order,
                    AutocovMethod method = AutocovMethod::automatic) {
    return fit_ar(sample_autocovariance(y, order, method), order);
}

/// Scans orders 1..max_order (or 0..max_order when `allow_zero`) and keeps the
/// smallest AIC; ties resolve to the smaller order. The order-zero candidate
/// is the plain mean model with sigma2 = gamma(0).
inline ArFit fit_ar_aic(const Autocovariance& acov, std::size_t max_order,
                        bool allow_zero = false) {
    if (max_order == 0 && !allow_zero)
        throw DataError("order scan needs max_order >= 1");
    std::size_t best_order = 0;
    double best_aic = allow_zero ? ar_aic(acov.sample_size, acov.gamma[0], 0)
                                 : std::numeric_limits<double>::infinity();
    if (max_order > 0) {
        LevinsonResult lev = levinson_durbin(acov, max_order);
        for (std::size_t m = 1; m <= max_order; ++m) {
            const double aic = ar_aic(acov.sample_size, lev.sigma2_path[m - 1], m);
            if (aic < best_aic) {
                best_aic = aic;
                best_order = m;
            }
        }
    }
    if (best_order == 0) {
        ArFit fit;
        fit.mean = acov.mean;
        fit.sigma2 = acov.gamma[0];
        fit.aic = best_aic;
        fit.sample_size = acov.sample_size;
        return fit;
    }
    return fit_ar(acov, best_order);
}

inline ArFit fit_ar_aic(std::span<const double> y, std::size_t max_order,
                        AutocovMethod method = AutocovMethod::automatic,
                        bool allow_zero = false) {
    return fit_ar_aic(sample_autocovariance(y, max_order, method), max_order, allow_zero);
}

/// Schur-Cohn stationarity test through the inverse Levinson step-down: an AR
/// polynomial is stable iff every implied reflection coefficient has
/// magnitude below one.
inline bool ar_is_stationary(std::span<const double> phi) {
    std::vector<double> a(phi.begin(), phi.end());
    for (std::size_t m = a.size(); m >= 1; --m) {
        const double k = a[m - 1];
        if (!std::isfinite(k) || std::abs(k) >= 1.0) return false;
        const double denom = 1.0 - k * k;
        std::vector<double> next(m - 1);
        for (std::size_t j = 1; j < m; ++j)
            next[j - 1] = (a[j - 1] + k * a[m - j - 1]) / denom;
        a = std::move(next);
    }
    return true;
}

// ---------------------------------------------------------------------------
// Bivariate Yule-Walker via the Whittle multichannel recursion.

struct VarFit {
    Vec2 mean{};
    std::vector<Mat2> coeffs;  ///< Phi_1..Phi_p
    Mat2 sigma{};              ///< innovation covariance at the fitted order
    double aic = 0.0;
    std::size_t sample_size = 0;

    std::size_t order() const { return coeffs.size(); }
};

struct WhittleResult {
    std::vector<Mat2> coeffs;        ///< forward coefficients at the requested order
    Mat2 sigma{};                    ///< forward innovation covariance
    std::vector<double> logdet_path; ///< logdet_path[m-1] = log det of sigma after order m
};

inline WhittleResult whittle(const CrossCovariance& ccov, std::size_t order) {
    if (order > ccov.max_lag())
        throw DataError(detail::concat("Yule-Walker order ", order, " exceeds available lag ",
                                       ccov.max_lag()));
    const Mat2 g0 = symmetrize(ccov.gamma[0]);
    if (!is_positive_definite(g0))
        throw NumericError("contemporaneous covariance is not positive definite");

    WhittleResult res;
    res.logdet_path.reserve(order);
    Mat2 v = g0;  // forward innovation covariance
    Mat2 u = g0;  // backward innovation covariance
    std::vector<Mat2> fwd, bwd, fwd_prev, bwd_prev;
    fwd.reserve(order);
    bwd.reserve(order);

    for (std::size_t m = 1; m <= order; ++m) {
        Mat2 delta = ccov.gamma[m];
        for (std::size_t j = 1; j < m; ++j) delta = delta - fwd[j - 1] * ccov.gamma[m - j];
        const Mat2 am = delta * u.inverse();
        const Mat2 bm = delta.transpose() * v.inverse();

        fwd_prev = fwd;
        bwd_prev = bwd;
        fwd.push_back({});
        bwd.push_back({});
        for (std::size_t j = 1; j < m; ++j) {
            fwd[j - 1] = fwd_prev[j - 1] - am * bwd_prev[m - j - 1];
            bwd[j - 1] = bwd_prev[j - 1] - bm * fwd_prev[m - j - 1];
        }
        fwd[m - 1] = am;
        bwd[m - 1] = bm;

        const Mat2 v_old = v;
        const Mat2 u_old = u;
        v = symmetrize(v_old - am * u_old * am.transpose());
        u = symmetrize(u_old - bm * v_old * bm.transpose());
        if (!is_positive_definite(v) || !is_positive_definite(u))
            throw NumericError(detail::concat(
                "innovation covariance lost positive definiteness at order ", m));
        res.logdet_path.push_back(std::log(v.det()));
    }
    res.coeffs = std::move(fwd);
    res.sigma = v;
    return res;
}

/// Bivariate AIC with 4p matrix entries plus the two mean parameters.
inline double var_aic(std::size_t n, double logdet_sigma, std::size_t order) {
    return double(n) * logdet_sigma + 2.0 * (4.0 * double(order) + 2.0);
}

inline VarFit fit_var(const CrossCovariance& ccov, std::size_t order) {
    WhittleResult wh = whittle(ccov, order);
    VarFit fit;
    fit.mean = ccov.mean;
    fit.coeffs = std::move(wh.coeffs);
    fit.sigma = wh.sigma;
    fit.aic = var_aic(ccov.sample_size, std::log(fit.sigma.det()), order);
    fit.sample_size = ccov.sample_size;
    return fit;
}

/// Order scan mirroring the univariate one: smallest AIC wins, ties resolve
/// to the smaller order, and the scan starts at order one.
inline VarFit fit_var_aic(const CrossCovariance& ccov, std::size_t max_order) {
    if (max_order == 0) throw DataError("order scan needs max_order >= 1");
    WhittleResult wh = whittle(ccov, max_order);
    std::size_t best_order = 1;
    double best_aic = var_aic(ccov.sample_size, wh.logdet_path[0], 1);
    for (std::size_t m = 2; m <= max_order; ++m) {
        const double aic = var_aic(ccov.sample_size, wh.logdet_path[m - 1], m);
        if (aic < best_aic) {
            best_aic = aic;
            best_order = m;
        }
    }
    if (best_order == max_order) {
        VarFit fit;
        fit.mean = ccov.mean;
        fit.coeffs = std::move(wh.coeffs);
        fit.sigma = wh.sigma;
        fit.aic = best_aic;
        fit.sample_size = ccov.sample_size;
        return fit;
    }
    return fit_var(ccov, best_order);
}

inline VarFit fit_var_aic(std::span<const double> a, std::span<const double> b,
                          std::size_t max_order,
                          AutocovMethod method = AutocovMethod::automatic) {
    return fit_var_aic(sample_cross_covariance(a, b, max_order, method), max_order);
}

}  // namespace dayahead
