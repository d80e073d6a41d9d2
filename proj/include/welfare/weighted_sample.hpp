#ifndef WELFARE_WEIGHTED_SAMPLE_HPP
#define WELFARE_WEIGHTED_SAMPLE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "welfare/errors.hpp"

namespace welfare {

// Tail probability level for lower-tail functionals, restricted to (0, 1].
class BetaLevel {
  public:
    explicit BetaLevel(double b) : value_(b) {
        if (!(b > 0.0 && b <= 1.0)) {
            throw InvalidLevel("beta level must lie in (0, 1], got " + std::to_string(b));
        }
    }
    double value() const { return value_; }

  private:
    double value_;
};

// Tail probability level for upper-tail functionals, restricted to [0, 1).
class AlphaLevel {
  public:
    explicit AlphaLevel(double a) : value_(a) {
        if (!(a >= 0.0 && a < 1.0)) {
            throw InvalidLevel("alpha level must lie in [0, 1), got " + std::to_string(a));
        }
    }
    double value() const { return value_; }

  private:
    double value_;
};

/*!
 * Finite distribution given by sample points and probability weights.
 *
 * Canonical form maintained as a class invariant: values sorted ascending
 * (ties preserved, never merged), weights strictly positive and normalized
 * to total mass one, cumulative weights precomputed with the final entry
 * clamped to exactly one.
 */
class WeightedSample {
  public:
    // Equal-weighted sample.
    static WeightedSample from_values(std::vector<double> values) {
        std::vector<double> w(values.size(), 1.0);
        return WeightedSample(std::move(values), std::move(w));
    }

    static WeightedSample from_weighted(std::vector<double> values, std::vector<double> weights) {
        return WeightedSample(std::move(values), std::move(weights));
    }

    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& cumulative_weights() const { return cum_; }

    double min() const { return values_.front(); }
    double max() const { return values_.back(); }

    // Total mass at or below z.
    double cdf(double z) const {
        if (!std::isfinite(z)) throw NonFiniteValue("cdf argument must be finite");
        auto it = std::upper_bound(values_.begin(), values_.end(), z);
        if (it == values_.begin()) return 0.0;
        return cum_[static_cast<std::size_t>(it - values_.begin()) - 1];
    }

    // Generalized inverse CDF: the smallest sample value whose cumulative
    // weight reaches beta, so cdf(quantile(beta)) >= beta always holds.
    double quantile(BetaLevel beta) const {
        double b = std::min(beta.value(), cum_.back());
        auto it = std::lower_bound(cum_.begin(), cum_.end(), b);
        return values_[static_cast<std::size_t>(it - cum_.begin())];
    }

    double mean() const {
        double m = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i) m += weights_[i] * values_[i];
        return m;
    }

    // Population variance under the normalized weights.
    double variance() const {
        double m = mean();
        double v = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i) {
            double d = values_[i] - m;
            v += weights_[i] * d * d;
        }
        return v;
    }

    // Distribution of -Z; used by upper-tail identities.
    WeightedSample negated() const {
        std::vector<double> v(values_.rbegin(), values_.rend());
        for (double& x : v) x = -x;
        std::vector<double> w(weights_.rbegin(), weights_.rend());
        return WeightedSample(std::move(v), std::move(w), already_canonical_tag{});
    }

  private:
    struct already_canonical_tag {};

    WeightedSample(std::vector<double> v, std::vector<double> w, already_canonical_tag)
        : values_(std::move(v)), weights_(std::move(w)) {
        rebuild_cumulative();
    }

    WeightedSample(std::vector<double> v, std::vector<double> w) {
        if (v.empty()) throw EmptySample("sample needs at least one point");
        if (v.size() != w.size()) {
            throw LengthMismatch("values and weights differ in length: " +
                                 std::to_string(v.size()) + " vs " + std::to_string(w.size()));
        }
        double total = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!std::isfinite(v[i])) {
                throw NonFiniteValue("sample value at index " + std::to_string(i) +
                                     " is not finite");
            }
            if (!std::isfinite(w[i]) || !(w[i] > 0.0)) {
                throw NonPositiveWeight("weight at index " + std::to_string(i) +
                                        " must be finite and positive");
            }
            total += w[i];
        }
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        values_.reserve(v.size());
        weights_.reserve(v.size());
        for (std::size_t idx : order) {
            values_.push_back(v[idx]);
            weights_.push_back(w[idx] / total);
        }
        rebuild_cumulative();
    }

    void rebuild_cumulative() {
        cum_.resize(values_.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            acc += weights_[i];
            cum_[i] = acc;
        }
        cum_.back() = 1.0;
    }

    std::vector<double> values_;
    std::vector<double> weights_;
    std::vector<double> cum_;
};

// Convenience constructor: equal weights when none are given.
inline WeightedSample make_sample(std::vector<double> values) {
    return WeightedSample::from_values(std::move(values));
}

inline WeightedSample make_sample(std::vector<double> values, std::vector<double> weights) {
    return WeightedSample::from_weighted(std::move(values), std::move(weights));
}

} // namespace welfare

#endif
