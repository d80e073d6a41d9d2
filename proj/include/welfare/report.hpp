#ifndef WELFARE_REPORT_HPP
#define WELFARE_REPORT_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "welfare/superquantile.hpp"

namespace welfare {

// One bound comparison at one tail level.  Slacks are oriented so that a
// satisfied bound gives slack >= 0; an equality check sets two_sided and
// its slack is the signed difference.
struct BoundRecord {
    std::string check;
    double level = 0.0;
    Tail tail = Tail::Lower;
    double lhs = 0.0;
    std::vector<double> rhs;
    std::vector<double> slack;
    double mc_standard_error = 0.0;
    bool two_sided = false;
    bool violated = false;
};

struct BoundReport {
    std::vector<BoundRecord> records;
    std::vector<std::string> warnings;

    bool any_violated() const {
        for (const auto& r : records) {
            if (r.violated) return true;
        }
        return false;
    }

    void append(const BoundReport& other) {
        records.insert(records.end(), other.records.begin(), other.records.end());
        warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
    }
};

namespace detail {

// Monte Carlo noise plus a small absolute floor, so exact-equality checks
// are not flagged over pure roundoff.
inline double violation_margin(double se, double scale, double n_se = 3.0) {
    return n_se * se + 1e-9 * (1.0 + std::abs(scale));
}

} // namespace detail

inline BoundRecord make_bound_record(std::string check, double level, Tail tail, double lhs,
                                     std::vector<double> rhs, double se) {
    BoundRecord rec;
    rec.check = std::move(check);
    rec.level = level;
    rec.tail = tail;
    rec.lhs = lhs;
    rec.rhs = std::move(rhs);
    rec.mc_standard_error = se;
    rec.slack.reserve(rec.rhs.size());
    double margin = detail::violation_margin(se, lhs);
    for (double r : rec.rhs) {
        double s = tail == Tail::Lower ? r - lhs : lhs - r;
        rec.slack.push_back(s);
        if (s < -margin) rec.violated = true;
    }
    return rec;
}

inline BoundRecord make_equality_record(std::string check, double level, Tail tail, double lhs,
                                        double rhs, double se, double n_se = 3.0) {
    BoundRecord rec;
    rec.check = std::move(check);
    rec.level = level;
    rec.tail = tail;
    rec.lhs = lhs;
    rec.rhs = {rhs};
    rec.slack = {rhs - lhs};
    rec.mc_standard_error = se;
    rec.two_sided = true;
    rec.violated = std::abs(rhs - lhs) > detail::violation_margin(se, lhs, n_se);
    return rec;
}

} // namespace welfare

#endif
