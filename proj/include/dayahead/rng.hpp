#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string_view>

namespace dayahead {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view s) {
    // FNV-1a, then one splitmix round to spread the low bits.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h);
}

}  // namespace detail

/// Deterministic random stream. All draws are implemented on top of raw
/// mt19937_64 output rather than the <random> distribution adaptors, whose
/// algorithms the standard leaves implementation defined; this keeps byte
/// identical results across compilers and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform01() { return double(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on {0, 1, ..., bound - 1} via multiply-shift. The bias is of
    /// order bound / 2^64, far below anything observable at the draw counts
    /// used here.
    std::uint64_t uniform_below(std::uint64_t bound) {
        return std::uint64_t((static_cast<unsigned __int128>(engine_()) * bound) >> 64);
    }

    /// Standard normal via Box-Muller; the paired draw is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = double((engine_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Student-t with integer df > 2, rescaled to unit variance so that a
    /// caller-supplied scale always means standard deviation.
    double student_t(unsigned df) {
        if (df <= 2) throw std::invalid_argument("student_t requires df > 2");
        const double z = normal();
        double chi2 = 0.0;
        for (unsigned i = 0; i < df; ++i) {
            const double g = normal();
            chi2 += g * g;
        }
        const double t = z / std::sqrt(chi2 / double(df));
        return t * std::sqrt(double(df - 2) / double(df));
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Derives an independent substream seed from a master seed and a list of
/// tags (purpose string, replicate index, ...). Same inputs give the same
/// stream regardless of what other streams were derived before it, which is
/// what makes parallel schedules reproducible.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                 std::uint64_t index = 0) {
    std::uint64_t h = detail::splitmix64(master);
    h = detail::splitmix64(h ^ detail::hash_tag(purpose));
    h = detail::splitmix64(h ^ index);
    return h;
}

inline Rng derive_stream(std::uint64_t master, std::string_view purpose,
                         std::uint64_t index = 0) {
    return Rng(derive_seed(master, purpose, index));
}

}  // namespace dayahead
