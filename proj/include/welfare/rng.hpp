#ifndef WELFARE_RNG_HPP
#define WELFARE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "welfare/errors.hpp"
#include "welfare/math.hpp"

namespace welfare {

namespace detail {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_key(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return splitmix64_next(h);
}

} // namespace detail

// Counter-style generator with O(1) construction.  A substream is fully
// determined by its key, so per-(group, draw) streams reproduce the same
// variates no matter how the enclosing loops are scheduled or parallelized.
class SubstreamRng {
  public:
    explicit SubstreamRng(std::uint64_t key) : state_(key), cached_(false), cache_(0.0) {}

    // Derives a substream key from a scenario seed and up to three indices
    // (typically group, draw, and a component tag).
    static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                    std::uint64_t c = 0) {
        std::uint64_t h = seed;
        h = detail::mix_key(h, 0x5b4cf5b7u);
        h = detail::mix_key(h, a);
        h = detail::mix_key(h, b);
        h = detail::mix_key(h, c);
        return h;
    }

    std::uint64_t next_u64() { return detail::splitmix64_next(state_); }

    // Uniform draw on the open interval (0, 1).
    double uniform01() {
        double u = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
        return u;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller; the second variate of each pair is
    // cached so every uniform is consumed deterministically.
    double normal() {
        if (cached_) {
            cached_ = false;
            return cache_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 2.0 * pi_const * u2;
        cache_ = r * std::sin(t);
        cached_ = true;
        return r * std::cos(t);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Standard Gumbel (location 0, scale 1), mean euler_gamma.
    double gumbel() { return -std::log(-std::log(uniform01())); }

  private:
    std::uint64_t state_;
    bool cached_;
    double cache_;
};

enum class NoiseFamily { PointMass, Gumbel, Normal, Uniform, TruncatedNormal };

// One marginal noise distribution.  Field use by family:
//   PointMass:       value = location
//   Gumbel:          location, scale
//   Normal:          mean = location, sd = scale
//   Uniform:         support [lower, upper]
//   TruncatedNormal: normal(location, scale) restricted to [lower, upper]
struct NoiseSpec {
    NoiseFamily family = NoiseFamily::PointMass;
    double location = 0.0;
    double scale = 1.0;
    double lower = 0.0;
    double upper = 0.0;

    static NoiseSpec point_mass(double v) { return {NoiseFamily::PointMass, v, 0.0, 0.0, 0.0}; }
    static NoiseSpec gumbel(double loc = 0.0, double sc = 1.0) {
        return {NoiseFamily::Gumbel, loc, sc, 0.0, 0.0};
    }
    static NoiseSpec normal(double mean = 0.0, double sd = 1.0) {
        return {NoiseFamily::Normal, mean, sd, 0.0, 0.0};
    }
    static NoiseSpec uniform(double lo, double hi) {
        return {NoiseFamily::Uniform, 0.0, 1.0, lo, hi};
    }
    static NoiseSpec truncated_normal(double mean, double sd, double lo, double hi) {
        return {NoiseFamily::TruncatedNormal, mean, sd, lo, hi};
    }

    void validate() const {
        switch (family) {
            case NoiseFamily::PointMass:
                break;
            case NoiseFamily::Gumbel:
            case NoiseFamily::Normal:
                if (!(scale > 0.0)) throw BadConfig("noise scale must be positive");
                break;
            case NoiseFamily::Uniform:
                if (!(lower < upper)) throw BadConfig("uniform noise needs lower < upper");
                break;
            case NoiseFamily::TruncatedNormal:
                if (!(scale > 0.0)) throw BadConfig("noise scale must be positive");
                if (!(lower < upper)) throw BadConfig("truncated normal needs lower < upper");
                break;
        }
    }

    double sample(SubstreamRng& rng) const {
        switch (family) {
            case NoiseFamily::PointMass:
                return location;
            case NoiseFamily::Gumbel:
                return location + scale * rng.gumbel();
            case NoiseFamily::Normal:
                return location + scale * rng.normal();
            case NoiseFamily::Uniform:
                return rng.uniform(lower, upper);
            case NoiseFamily::TruncatedNormal: {
                double flo = normal_cdf((lower - location) / scale);
                double fhi = normal_cdf((upper - location) / scale);
                double u = flo + (fhi - flo) * rng.uniform01();
                u = std::min(std::max(u, 1e-15), 1.0 - 1e-15);
                return location + scale * normal_quantile(u);
            }
        }
        return location;
    }

    double mean() const {
        switch (family) {
            case NoiseFamily::PointMass:
                return location;
            case NoiseFamily::Gumbel:
                return location + scale * euler_gamma;
            case NoiseFamily::Normal:
                return location;
            case NoiseFamily::Uniform:
                return 0.5 * (lower + upper);
            case NoiseFamily::TruncatedNormal: {
                double a = (lower - location) / scale;
                double b = (upper - location) / scale;
                double mass = normal_cdf(b) - normal_cdf(a);
                return location + scale * (normal_pdf(a) - normal_pdf(b)) / mass;
            }
        }
        return location;
    }

    // True when the support is bounded; range() is then its total width.
    bool bounded() const {
        return family == NoiseFamily::PointMass || family == NoiseFamily::Uniform ||
               family == NoiseFamily::TruncatedNormal;
    }

    double range() const {
        switch (family) {
            case NoiseFamily::PointMass:
                return 0.0;
            case NoiseFamily::Uniform:
            case NoiseFamily::TruncatedNormal:
                return upper - lower;
            default:
                return std::numeric_limits<double>::infinity();
        }
    }
};

} // namespace welfare

#endif
