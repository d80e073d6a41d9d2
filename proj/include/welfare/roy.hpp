#ifndef WELFARE_ROY_HPP
#define WELFARE_ROY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "welfare/errors.hpp"
#include "welfare/math.hpp"
#include "welfare/mc_stats.hpp"
#include "welfare/parallel.hpp"
#include "welfare/report.hpp"
#include "welfare/rng.hpp"
#include "welfare/superquantile.hpp"

namespace welfare {

// One (x, z) cell: its population share, the outcome levels mu0/mu1 keyed
// by x, and the cost level muC keyed by z.
struct RoyGroup {
    double prob = 0.0;
    double mu0 = 0.0;
    double mu1 = 0.0;
    double muC = 0.0;
};

// Joint-normal disturbances (nu0, nu1, nuC).
struct JointNormalErrors {
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    std::array<std::array<double, 3>, 3> cov{};
};

// Independent disturbances, each point mass, normal, or uniform.
struct IndependentErrors {
    NoiseSpec nu0;
    NoiseSpec nu1;
    NoiseSpec nuC;
};

struct RoyErrorSpec {
    bool joint = true;
    JointNormalErrors jn;
    IndependentErrors ind;

    static RoyErrorSpec joint_normal(JointNormalErrors e) {
        RoyErrorSpec s;
        s.joint = true;
        s.jn = e;
        return s;
    }
    static RoyErrorSpec independent(IndependentErrors e) {
        RoyErrorSpec s;
        s.joint = false;
        s.ind = e;
        return s;
    }
};

/*!
 * Two-sector selection model with costs.  In cell (x, z) the gains are
 * V_j = mu_j + nu_j, the cost is C = muC + nuC, the net surplus is
 * W = (V1 - V0) - C = mu_w - eps_w with eps_w = nu0 - nu1 + nuC, and
 * treatment is taken when the surplus is nonnegative.  The rank
 * U_W = F(eps_w) is uniform whenever F is continuous and strictly
 * increasing; point-mass disturbances are allowed for exactness checks but
 * concentrate the rank at one value.
 */
struct RoyScenario {
    std::vector<RoyGroup> groups;
    RoyErrorSpec errors;

    double mu_w(std::size_t g) const {
        return groups[g].mu1 - groups[g].mu0 - groups[g].muC;
    }

    std::vector<double> normalized_probs() const {
        double total = 0.0;
        for (const auto& g : groups) total += g.prob;
        std::vector<double> p;
        p.reserve(groups.size());
        for (const auto& g : groups) p.push_back(g.prob / total);
        return p;
    }

    void validate() const {
        if (groups.empty()) throw InvalidScenario("need at least one cell");
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const auto& grp = groups[g];
            if (!(grp.prob > 0.0) || !std::isfinite(grp.prob)) {
                throw InvalidScenario("cell " + std::to_string(g) +
                                      " needs a positive, finite probability");
            }
            if (!std::isfinite(grp.mu0) || !std::isfinite(grp.mu1) || !std::isfinite(grp.muC)) {
                throw InvalidScenario("cell " + std::to_string(g) + " has non-finite levels");
            }
        }
        if (!errors.joint) {
            for (const NoiseSpec* ns : {&errors.ind.nu0, &errors.ind.nu1, &errors.ind.nuC}) {
                ns->validate();
                if (ns->family == NoiseFamily::Gumbel ||
                    ns->family == NoiseFamily::TruncatedNormal) {
                    throw BadConfig("independent disturbances must be point mass, normal, "
                                    "or uniform");
                }
            }
        }
    }
};

namespace detail {

inline constexpr std::uint64_t roy_stream = 0xb011;

// Unconditional means of (nu0, nu1, nuC); cell-level averages fold these
// into the mu levels.
inline std::array<double, 3> disturbance_means(const RoyErrorSpec& spec) {
    if (spec.joint) return spec.jn.mean;
    std::array<double, 3> m{};
    const NoiseSpec* comps[3] = {&spec.ind.nu0, &spec.ind.nu1, &spec.ind.nuC};
    for (int i = 0; i < 3; ++i) m[i] = comps[i]->mean();
    return m;
}

inline std::array<std::array<double, 3>, 3> cholesky3(
    const std::array<std::array<double, 3>, 3>& cov) {
    double scale = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            scale = std::max(scale, std::abs(cov[i][j]));
            if (std::abs(cov[i][j] - cov[j][i]) > 1e-12 * (1.0 + scale)) {
                throw BadConfig("covariance matrix must be symmetric");
            }
        }
    }
    std::array<std::array<double, 3>, 3> l{};
    for (int j = 0; j < 3; ++j) {
        double d = cov[j][j];
        for (int k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
        if (d < -1e-9 * (1.0 + scale)) {
            throw BadConfig("covariance matrix is not positive semidefinite");
        }
        l[j][j] = std::sqrt(std::max(d, 0.0));
        for (int i = j + 1; i < 3; ++i) {
            if (l[j][j] < 1e-12) {
                l[i][j] = 0.0;
                continue;
            }
            double acc = cov[i][j];
            for (int k = 0; k < j; ++k) acc -= l[i][k] * l[j][k];
            l[i][j] = acc / l[j][j];
        }
    }
    return l;
}

} // namespace detail

/*!
 * Distribution of the surplus disturbance eps_w = nu0 - nu1 + nuC.  Exact
 * normal when the disturbances are joint normal (or independent with no
 * uniform part); a point mass when the combination has zero variance;
 * otherwise the CDF is precomputed by convolving the normal part with each
 * uniform component on a fine grid.  The normal and point-mass forms also
 * carry the linear conditional means E[nuC | eps_w] and E[nu1 - nu0 | eps_w]
 * used for analytic marginal parameters.
 */
class EpsWDist {
  public:
    static EpsWDist build(const RoyErrorSpec& spec) {
        EpsWDist d;
        if (spec.joint) {
            d.init_joint_normal(spec.jn);
            return d;
        }
        const auto& ind = spec.ind;
        bool any_uniform = ind.nu0.family == NoiseFamily::Uniform ||
                           ind.nu1.family == NoiseFamily::Uniform ||
                           ind.nuC.family == NoiseFamily::Uniform;
        if (!any_uniform) {
            // Independent normals are a diagonal joint-normal spec.
            JointNormalErrors jn;
            const NoiseSpec* comps[3] = {&ind.nu0, &ind.nu1, &ind.nuC};
            for (int i = 0; i < 3; ++i) {
                jn.mean[i] = comps[i]->location;
                jn.cov[i][i] = comps[i]->family == NoiseFamily::Normal
                                   ? comps[i]->scale * comps[i]->scale
                                   : 0.0;
            }
            d.init_joint_normal(jn);
            return d;
        }
        d.init_convolved(ind);
        return d;
    }

    bool exact_normal() const { return normal_; }
    bool degenerate() const { return degenerate_; }
    bool has_analytic_conditionals() const { return normal_ || degenerate_; }
    double mean() const { return m_; }
    double sd() const { return s_; }

    double cdf(double e) const {
        if (degenerate_) return e >= m_ ? 1.0 : 0.0;
        if (normal_) return normal_cdf((e - m_) / s_);
        if (e <= grid_.front()) return 0.0;
        if (e >= grid_.back()) return 1.0;
        double t = (e - grid_.front()) / step_;
        std::size_t k = static_cast<std::size_t>(t);
        if (k + 1 >= cdf_.size()) return cdf_.back();
        double frac = t - static_cast<double>(k);
        return cdf_[k] + frac * (cdf_[k + 1] - cdf_[k]);
    }

    double quantile(double u) const {
        if (!(u > 0.0 && u < 1.0)) throw InvalidLevel("rank must lie in (0, 1)");
        if (degenerate_) return m_;
        if (normal_) return m_ + s_ * normal_quantile(u);
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.begin()) return grid_.front();
        if (it == cdf_.end()) return grid_.back();
        std::size_t k = static_cast<std::size_t>(it - cdf_.begin());
        double c1 = cdf_[k];
        double c0 = cdf_[k - 1];
        double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
        return grid_[k - 1] + frac * step_;
    }

    // E[nuC | eps_w = e], available on the joint-normal path.
    double cond_nu_c(double e) const {
        require_analytic();
        return icept_c_ + slope_c_ * e;
    }

    // E[nu1 - nu0 | eps_w = e], available on the joint-normal path.
    double cond_nu_gap(double e) const {
        require_analytic();
        return icept_gap_ + slope_gap_ * e;
    }

  private:
    void require_analytic() const {
        if (!normal_ && !degenerate_) {
            throw InvalidScenario("conditional disturbance means are analytic only for "
                                  "joint-normal or degenerate errors");
        }
    }

    void init_joint_normal(const JointNormalErrors& jn) {
        auto l = detail::cholesky3(jn.cov); // validates symmetry and PSD
        (void)l;
        const double a[3] = {1.0, -1.0, 1.0};
        m_ = 0.0;
        double var = 0.0;
        for (int i = 0; i < 3; ++i) {
            m_ += a[i] * jn.mean[i];
            for (int j = 0; j < 3; ++j) var += a[i] * a[j] * jn.cov[i][j];
        }
        if (var <= 0.0) {
            // Point-mass surplus disturbance: the rank is degenerate and the
            // conditional disturbance means reduce to unconditional ones.
            degenerate_ = true;
            s_ = 0.0;
            slope_c_ = 0.0;
            icept_c_ = jn.mean[2];
            slope_gap_ = 0.0;
            icept_gap_ = jn.mean[1] - jn.mean[0];
            return;
        }
        s_ = std::sqrt(var);
        normal_ = true;
        double cov_c = 0.0;
        double cov_gap = 0.0;
        for (int j = 0; j < 3; ++j) {
            cov_c += a[j] * jn.cov[2][j];
            cov_gap += a[j] * (jn.cov[1][j] - jn.cov[0][j]);
        }
        slope_c_ = cov_c / var;
        icept_c_ = jn.mean[2] - slope_c_ * m_;
        slope_gap_ = cov_gap / var;
        icept_gap_ = (jn.mean[1] - jn.mean[0]) - slope_gap_ * m_;
    }

    void init_convolved(const IndependentErrors& ind) {
        normal_ = false;
        double m0 = 0.0;
        double var0 = 0.0;
        std::vector<std::pair<double, double>> uniforms;
        const std::pair<double, const NoiseSpec*> comps[3] = {
            {1.0, &ind.nu0}, {-1.0, &ind.nu1}, {1.0, &ind.nuC}};
        for (const auto& [sign, ns] : comps) {
            switch (ns->family) {
                case NoiseFamily::PointMass:
                    m0 += sign * ns->location;
                    break;
                case NoiseFamily::Normal:
                    m0 += sign * ns->location;
                    var0 += ns->scale * ns->scale;
                    break;
                case NoiseFamily::Uniform: {
                    double lo = sign > 0.0 ? ns->lower : -ns->upper;
                    double hi = sign > 0.0 ? ns->upper : -ns->lower;
                    uniforms.emplace_back(lo, hi);
                    break;
                }
                default:
                    throw BadConfig("unsupported disturbance family");
            }
        }
        double s0 = std::sqrt(var0);
        double lo_pad = 0.0;
        double hi_pad = 0.0;
        double mean_shift = 0.0;
        for (auto [lo, hi] : uniforms) {
            lo_pad += std::min(lo, 0.0);
            hi_pad += std::max(hi, 0.0);
            mean_shift += 0.5 * (lo + hi);
        }
        const std::size_t n = (1u << 15) + 1;
        double lo_edge = m0 - 10.0 * s0 + lo_pad;
        double hi_edge = m0 + 10.0 * s0 + hi_pad;
        step_ = (hi_edge - lo_edge) / static_cast<double>(n - 1);
        grid_.resize(n);
        cdf_.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            grid_[k] = lo_edge + step_ * static_cast<double>(k);
            cdf_[k] = s0 > 0.0 ? normal_cdf((grid_[k] - m0) / s0)
                               : (grid_[k] >= m0 ? 1.0 : 0.0);
        }
        std::vector<double> integral(n);
        for (auto [lo, hi] : uniforms) {
            integral[0] = 0.0;
            for (std::size_t k = 1; k < n; ++k) {
                integral[k] = integral[k - 1] + 0.5 * step_ * (cdf_[k] + cdf_[k - 1]);
            }
            auto eval = [&](double y) {
                if (y <= grid_.front()) return 0.0;
                if (y >= grid_.back()) return integral[n - 1] + (y - grid_.back());
                double t = (y - grid_.front()) / step_;
                std::size_t k = static_cast<std::size_t>(t);
                double frac = t - static_cast<double>(k);
                return integral[k] + frac * (integral[k + 1] - integral[k]);
            };
            double width = hi - lo;
            std::vector<double> next(n);
            for (std::size_t k = 0; k < n; ++k) {
                double v = (eval(grid_[k] - lo) - eval(grid_[k] - hi)) / width;
                v = std::min(std::max(v, 0.0), 1.0);
                if (k > 0) v = std::max(v, next[k - 1]);
                next[k] = v;
            }
            cdf_.swap(next);
        }
        m_ = m0 + mean_shift;
        double var_u = 0.0;
        for (auto [lo, hi] : uniforms) var_u += (hi - lo) * (hi - lo) / 12.0;
        s_ = std::sqrt(var0 + var_u);
    }

    bool normal_ = false;
    bool degenerate_ = false;
    double m_ = 0.0;
    double s_ = 1.0;
    double slope_c_ = 0.0;
    double icept_c_ = 0.0;
    double slope_gap_ = 0.0;
    double icept_gap_ = 0.0;
    double step_ = 1.0;
    std::vector<double> grid_;
    std::vector<double> cdf_;
};

// Per-cell Monte Carlo draws of gains, costs, surplus, treatment, and the
// surplus-disturbance rank.
struct RoyDraws {
    std::vector<std::vector<double>> b;      // gain V1 - V0
    std::vector<std::vector<double>> c;      // cost
    std::vector<std::vector<double>> w;      // surplus b - c, computed exactly as that
    std::vector<std::vector<double>> u_w;    // rank of eps_w
    std::vector<std::vector<double>> nu_c;   // cost disturbance
    std::vector<std::vector<double>> nu_gap; // nu1 - nu0
    std::vector<std::vector<char>> treated;  // w >= 0
    std::vector<double> cell_probs;
    std::size_t n_per_cell = 0;
    std::uint64_t seed = 0;
};

inline RoyDraws simulate_roy(const RoyScenario& sc, std::size_t n_per_cell, std::uint64_t seed,
                             int threads = 1) {
    sc.validate();
    if (n_per_cell == 0) throw BadConfig("n_per_cell must be positive");
    EpsWDist dist = EpsWDist::build(sc.errors);
    std::array<std::array<double, 3>, 3> chol{};
    if (sc.errors.joint) chol = detail::cholesky3(sc.errors.jn.cov);

    RoyDraws rd;
    rd.cell_probs = sc.normalized_probs();
    rd.n_per_cell = n_per_cell;
    rd.seed = seed;
    std::size_t g_n = sc.groups.size();
    for (auto* field : {&rd.b, &rd.c, &rd.w, &rd.u_w, &rd.nu_c, &rd.nu_gap}) {
        field->assign(g_n, std::vector<double>(n_per_cell));
    }
    rd.treated.assign(g_n, std::vector<char>(n_per_cell));

    for (std::size_t g = 0; g < g_n; ++g) {
        const auto& grp = sc.groups[g];
        parallel_for(n_per_cell, threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                SubstreamRng rng(SubstreamRng::derive_key(seed, detail::roy_stream, g, i));
                double nu0, nu1, nuc;
                if (sc.errors.joint) {
                    double e0 = rng.normal();
                    double e1 = rng.normal();
                    double e2 = rng.normal();
                    nu0 = sc.errors.jn.mean[0] + chol[0][0] * e0;
                    nu1 = sc.errors.jn.mean[1] + chol[1][0] * e0 + chol[1][1] * e1;
                    nuc = sc.errors.jn.mean[2] + chol[2][0] * e0 + chol[2][1] * e1 +
                          chol[2][2] * e2;
                } else {
                    nu0 = sc.errors.ind.nu0.sample(rng);
                    nu1 = sc.errors.ind.nu1.sample(rng);
                    nuc = sc.errors.ind.nuC.sample(rng);
                }
                double b = grp.mu1 - grp.mu0 + (nu1 - nu0);
                double c = grp.muC + nuc;
                double w = b - c;
                double eps_w = nu0 - nu1 + nuc;
                double u = dist.cdf(eps_w);
                rd.b[g][i] = b;
                rd.c[g][i] = c;
                rd.w[g][i] = w;
                rd.u_w[g][i] = std::min(std::max(u, 1e-15), 1.0 - 1e-15);
                rd.nu_c[g][i] = nuc;
                rd.nu_gap[g][i] = nu1 - nu0;
                rd.treated[g][i] = w >= 0.0 ? 1 : 0;
            }
        });
    }
    return rd;
}

namespace detail {

// Estimated conditional mean u -> E[value | U_W = u], either the exact
// joint-normal line or a narrow-band grid estimate from pooled draws
// (the disturbances are independent of the cell, so pooling is exact).
struct RankConditionalMean {
    std::function<double(double)> fn;
    double band_se = 0.0; // average per-point standard error, 0 when exact
};

inline RankConditionalMean band_conditional_mean(const std::vector<std::vector<double>>& values,
                                                 const std::vector<std::vector<double>>& ranks,
                                                 double half_width = 0.01,
                                                 std::size_t min_in_band = 500) {
    std::vector<double> v;
    std::vector<double> u;
    for (std::size_t g = 0; g < values.size(); ++g) {
        v.insert(v.end(), values[g].begin(), values[g].end());
        u.insert(u.end(), ranks[g].begin(), ranks[g].end());
    }
    const std::size_t points = 99;
    auto grid = std::make_shared<std::vector<double>>(points);
    auto means = std::make_shared<std::vector<double>>(points);
    double se_acc = 0.0;
    std::size_t worst = v.size();
    for (std::size_t k = 0; k < points; ++k) {
        double center = 0.01 * static_cast<double>(k + 1);
        (*grid)[k] = center;
        double acc = 0.0;
        double acc2 = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (std::abs(u[i] - center) <= half_width) {
                acc += v[i];
                acc2 += v[i] * v[i];
                ++n;
            }
        }
        worst = std::min(worst, n);
        if (n < min_in_band) {
            throw InvalidScenario("narrow-band conditioning has only " + std::to_string(n) +
                                  " draws near rank " + std::to_string(center) +
                                  "; increase n");
        }
        double m = acc / static_cast<double>(n);
        (*means)[k] = m;
        double var = std::max(acc2 / static_cast<double>(n) - m * m, 0.0);
        se_acc += std::sqrt(var / static_cast<double>(n));
    }
    RankConditionalMean out;
    out.band_se = se_acc / static_cast<double>(points);
    out.fn = [grid, means](double q) {
        if (q <= grid->front()) return means->front();
        if (q >= grid->back()) return means->back();
        double t = (q - grid->front()) / 0.01;
        std::size_t k = static_cast<std::size_t>(t);
        if (k + 1 >= means->size()) return means->back();
        double frac = t - static_cast<double>(k);
        return (*means)[k] + frac * ((*means)[k + 1] - (*means)[k]);
    };
    return out;
}

// Conditional means of nu_c and nu1 - nu0 given the rank: analytic for
// joint-normal errors, otherwise narrow-band with draw top-up (the draws
// are re-simulated at doubled size until every band holds enough points).
struct RankShifts {
    RankConditionalMean c_shift;
    RankConditionalMean gap_shift;
};

inline RankShifts build_rank_shifts(const RoyScenario& sc, const RoyDraws& rd,
                                    const EpsWDist& dist) {
    RankShifts out;
    if (dist.has_analytic_conditionals()) {
        out.c_shift.fn = [&dist](double q) { return dist.cond_nu_c(dist.quantile(q)); };
        out.gap_shift.fn = [&dist](double q) { return dist.cond_nu_gap(dist.quantile(q)); };
        return out;
    }
    std::size_t n = rd.n_per_cell;
    const RoyDraws* use = &rd;
    RoyDraws enlarged;
    for (int attempt = 0; attempt < 7; ++attempt) {
        try {
            out.c_shift = band_conditional_mean(use->nu_c, use->u_w);
            out.gap_shift = band_conditional_mean(use->nu_gap, use->u_w);
            return out;
        } catch (const InvalidScenario&) {
            if (attempt == 6) throw;
            n *= 2;
            enlarged = simulate_roy(sc, n, rd.seed);
            use = &enlarged;
        }
    }
    return out; // unreachable
}

} // namespace detail

// Identified cell parameters: population means (ATE), treated means (TT),
// and rank-conditional means (MTE) on a rank grid.
struct RoyCellParams {
    double b_ate = 0.0, c_ate = 0.0, w_ate = 0.0;
    double b_tt = 0.0, c_tt = 0.0, w_tt = 0.0;
    std::size_t n_treated = 0;
    std::vector<double> b_mte, c_mte, w_mte;
};

struct RoyParameters {
    std::vector<double> u_grid;
    std::vector<RoyCellParams> cells;
    bool analytic_mte = false;
};

inline RoyParameters compute_parameters(const RoyScenario& sc, const RoyDraws& rd,
                                        const std::vector<double>& u_grid) {
    sc.validate();
    for (double u : u_grid) {
        if (!(u > 0.0 && u < 1.0)) throw InvalidLevel("rank grid must lie inside (0, 1)");
    }
    EpsWDist dist = EpsWDist::build(sc.errors);
    detail::RankShifts shifts = detail::build_rank_shifts(sc, rd, dist);
    std::array<double, 3> nm = detail::disturbance_means(sc.errors);

    RoyParameters out;
    out.u_grid = u_grid;
    out.analytic_mte = dist.has_analytic_conditionals();
    out.cells.resize(sc.groups.size());
    for (std::size_t g = 0; g < sc.groups.size(); ++g) {
        RoyCellParams& cp = out.cells[g];
        const auto& grp = sc.groups[g];
        cp.b_ate = grp.mu1 - grp.mu0 + (nm[1] - nm[0]);
        cp.c_ate = grp.muC + nm[2];
        cp.w_ate = cp.b_ate - cp.c_ate;
        double bs = 0.0, cs = 0.0, ws = 0.0;
        std::size_t n_t = 0;
        for (std::size_t i = 0; i < rd.n_per_cell; ++i) {
            if (!rd.treated[g][i]) continue;
            bs += rd.b[g][i];
            cs += rd.c[g][i];
            ws += rd.w[g][i];
            ++n_t;
        }
        if (n_t == 0) {
            throw EmptyTreatedCell("cell " + std::to_string(g) +
                                   " has no treated draws; raise n or adjust the scenario");
        }
        cp.n_treated = n_t;
        cp.b_tt = bs / static_cast<double>(n_t);
        cp.c_tt = cs / static_cast<double>(n_t);
        cp.w_tt = ws / static_cast<double>(n_t);
        cp.b_mte.reserve(u_grid.size());
        cp.c_mte.reserve(u_grid.size());
        cp.w_mte.reserve(u_grid.size());
        for (double u : u_grid) {
            cp.b_mte.push_back(grp.mu1 - grp.mu0 + shifts.gap_shift.fn(u));
            cp.c_mte.push_back(grp.muC + shifts.c_shift.fn(u));
            cp.w_mte.push_back(sc.mu_w(g) - dist.quantile(u));
        }
    }
    return out;
}

// Lower tail bounds on the surplus: pooled draws against the cell-mean
// aggregate and against the per-draw rank-conditional surplus.
inline BoundReport check_prop5(const RoyScenario& sc, const RoyDraws& rd,
                               const std::vector<double>& betas) {
    sc.validate();
    EpsWDist dist = EpsWDist::build(sc.errors);
    WeightedSample pooled = pooled_sample(rd.w, rd.cell_probs);
    std::vector<double> ate_vals;
    ate_vals.reserve(sc.groups.size());
    for (std::size_t g = 0; g < sc.groups.size(); ++g) {
        ate_vals.push_back(sc.mu_w(g) - dist.mean());
    }
    WeightedSample ate_sample = WeightedSample::from_weighted(ate_vals, rd.cell_probs);

    std::vector<std::vector<double>> mte_draws(sc.groups.size());
    for (std::size_t g = 0; g < sc.groups.size(); ++g) {
        mte_draws[g].resize(rd.n_per_cell);
        double mw = sc.mu_w(g);
        for (std::size_t i = 0; i < rd.n_per_cell; ++i) {
            mte_draws[g][i] = mw - dist.quantile(rd.u_w[g][i]);
        }
    }
    WeightedSample mte_sample = pooled_sample(mte_draws, rd.cell_probs);

    BoundReport report;
    for (double beta : betas) {
        auto lhs = lower_superquantile(pooled, BetaLevel{beta});
        auto rhs1 = lower_superquantile(ate_sample, BetaLevel{beta});
        auto rhs2 = lower_superquantile(mte_sample, BetaLevel{beta});
        double se_lhs = grouped_lower_sq_se(rd.w, rd.cell_probs, lhs.lambda_star, beta);
        double se_rhs2 = grouped_lower_sq_se(mte_draws, rd.cell_probs, rhs2.lambda_star, beta);
        report.records.push_back(make_bound_record("surplus_tail_le_cell_mean_tail", beta,
                                                   Tail::Lower, lhs.value, {rhs1.value},
                                                   se_lhs));
        report.records.push_back(make_bound_record("surplus_tail_le_rank_conditional_tail",
                                                   beta, Tail::Lower, lhs.value, {rhs2.value},
                                                   combine_se(se_lhs, se_rhs2)));
    }
    return report;
}

// Upper tail bounds on the cost: pooled draws dominate both the cell-mean
// aggregate and the per-draw rank-conditional cost.
inline BoundReport check_prop6(const RoyScenario& sc, const RoyDraws& rd,
                               const std::vector<double>& alphas) {
    sc.validate();
    EpsWDist dist = EpsWDist::build(sc.errors);
    detail::RankShifts shifts = detail::build_rank_shifts(sc, rd, dist);
    WeightedSample pooled = pooled_sample(rd.c, rd.cell_probs);
    double mean_c = detail::disturbance_means(sc.errors)[2];
    std::vector<double> ate_vals;
    ate_vals.reserve(sc.groups.size());
    for (const auto& grp : sc.groups) ate_vals.push_back(grp.muC + mean_c);
    WeightedSample ate_sample = WeightedSample::from_weighted(ate_vals, rd.cell_probs);

    std::vector<std::vector<double>> mte_draws(sc.groups.size());
    for (std::size_t g = 0; g < sc.groups.size(); ++g) {
        mte_draws[g].resize(rd.n_per_cell);
        double muc = sc.groups[g].muC;
        for (std::size_t i = 0; i < rd.n_per_cell; ++i) {
            mte_draws[g][i] = muc + shifts.c_shift.fn(rd.u_w[g][i]);
        }
    }
    WeightedSample mte_sample = pooled_sample(mte_draws, rd.cell_probs);

    BoundReport report;
    for (double alpha : alphas) {
        auto lhs = upper_superquantile(pooled, AlphaLevel{alpha});
        auto rhs1 = upper_superquantile(ate_sample, AlphaLevel{alpha});
        auto rhs2 = upper_superquantile(mte_sample, AlphaLevel{alpha});
        double se_lhs = grouped_upper_sq_se(rd.c, rd.cell_probs, lhs.lambda_star, alpha);
        double se_rhs2 = grouped_upper_sq_se(mte_draws, rd.cell_probs, rhs2.lambda_star, alpha);
        report.records.push_back(make_bound_record("cost_tail_ge_cell_mean_tail", alpha,
                                                   Tail::Upper, lhs.value, {rhs1.value},
                                                   se_lhs));
        report.records.push_back(make_bound_record(
            "cost_tail_ge_rank_conditional_tail", alpha, Tail::Upper, lhs.value, {rhs2.value},
            combine_se(combine_se(se_lhs, se_rhs2), shifts.c_shift.band_se)));
    }
    return report;
}

// Treated-only bounds: among treated draws, the surplus superquantile is
// bounded by the treated-cell-mean aggregate (lower tail) and the cost
// superquantile dominates its treated-cell aggregate (upper tail).  Cell
// weights are population share times the empirical treated share; cells
// with no treated draws are dropped with a warning.
inline BoundReport check_theorem5(const RoyScenario& sc, const RoyDraws& rd,
                                  const std::vector<double>& betas,
                                  const std::vector<double>& alphas) {
    sc.validate();
    std::vector<std::vector<double>> w_t(sc.groups.size());
    std::vector<std::vector<double>> c_t(sc.groups.size());
    BoundReport report;
    std::vector<double> mass;
    std::vector<std::vector<double>> w_kept, c_kept;
    std::vector<double> w_tt, c_tt, w_tt_se, c_tt_se;
    for (std::size_t g = 0; g < sc.groups.size(); ++g) {
        for (std::size_t i = 0; i < rd.n_per_cell; ++i) {
            if (!rd.treated[g][i]) continue;
            w_t[g].push_back(rd.w[g][i]);
            c_t[g].push_back(rd.c[g][i]);
        }
        if (w_t[g].empty()) {
            report.warnings.push_back("cell " + std::to_string(g) +
                                      " has no treated draws and is dropped from the "
                                      "treated aggregation");
            continue;
        }
        double share = static_cast<double>(w_t[g].size()) / static_cast<double>(rd.n_per_cell);
        mass.push_back(rd.cell_probs[g] * share);
        w_kept.push_back(w_t[g]);
        c_kept.push_back(c_t[g]);
        w_tt.push_back(draw_mean(w_t[g]));
        c_tt.push_back(draw_mean(c_t[g]));
        w_tt_se.push_back(mean_standard_error(w_t[g]));
        c_tt_se.push_back(mean_standard_error(c_t[g]));
    }
    if (mass.empty()) throw NoTreatedDraws("no cell has any treated draw");

    WeightedSample w_pooled = pooled_sample(w_kept, mass);
    WeightedSample c_pooled = pooled_sample(c_kept, mass);
    WeightedSample w_agg = WeightedSample::from_weighted(w_tt, mass);
    WeightedSample c_agg = WeightedSample::from_weighted(c_tt, mass);

    for (double beta : betas) {
        auto lhs = lower_superquantile(w_pooled, BetaLevel{beta});
        auto rhs = lower_superquantile(w_agg, BetaLevel{beta});
        double se = combine_se(grouped_lower_sq_se(w_kept, mass, lhs.lambda_star, beta),
                               aggregate_lower_sq_se(w_tt, mass, w_tt_se, beta));
        report.records.push_back(make_bound_record("treated_surplus_tail_le_tt_cell_tail", beta,
                                                   Tail::Lower, lhs.value, {rhs.value}, se));
    }
    for (double alpha : alphas) {
        auto lhs = upper_superquantile(c_pooled, AlphaLevel{alpha});
        auto rhs = upper_superquantile(c_agg, AlphaLevel{alpha});
        double se = combine_se(grouped_upper_sq_se(c_kept, mass, lhs.lambda_star, alpha),
                               aggregate_upper_sq_se(c_tt, mass, c_tt_se, alpha));
        report.records.push_back(make_bound_record("treated_cost_tail_ge_tt_cell_tail", alpha,
                                                   Tail::Upper, lhs.value, {rhs.value}, se));
    }
    return report;
}

// Diagnostics: every cell's empirical treated share must match the analytic
// selection probability F(mu_w), and the pooled rank draws must be uniform
// across twenty equal bins.
inline BoundReport check_roy_diagnostics(const RoyScenario& sc, const RoyDraws& rd) {
    sc.validate();
    EpsWDist dist = EpsWDist::build(sc.errors);
    BoundReport report;
    double n = static_cast<double>(rd.n_per_cell);
    for (std::size_t g = 0; g < sc.groups.size(); ++g) {
        double want = dist.cdf(sc.mu_w(g));
        std::size_t n_t = 0;
        for (std::size_t i = 0; i < rd.n_per_cell; ++i) n_t += rd.treated[g][i] ? 1 : 0;
        double got = static_cast<double>(n_t) / n;
        double se = std::sqrt(std::max(want * (1.0 - want), 1e-12) / n);
        report.records.push_back(make_equality_record("treated_share_matches_selection_prob",
                                                      static_cast<double>(g), Tail::Lower, got,
                                                      want, se));
    }
    const int bins = 20;
    double omega2 = 0.0;
    for (std::size_t g = 0; g < rd.cell_probs.size(); ++g) {
        double per = rd.cell_probs[g] / n;
        omega2 += per * per * n;
    }
    for (int k = 0; k < bins; ++k) {
        double lo = static_cast<double>(k) / bins;
        double hi = static_cast<double>(k + 1) / bins;
        double share = 0.0;
        for (std::size_t g = 0; g < rd.u_w.size(); ++g) {
            double per = rd.cell_probs[g] / n;
            for (double u : rd.u_w[g]) {
                if (u >= lo && (u < hi || (k == bins - 1 && u <= hi))) share += per;
            }
        }
        double p = 1.0 / bins;
        double se = std::sqrt(omega2 * p * (1.0 - p));
        report.records.push_back(make_equality_record("rank_uniformity_bin",
                                                      0.5 * (lo + hi), Tail::Lower, share, p,
                                                      se, 5.0));
    }
    return report;
}

// Simulate-then-check convenience overloads.
inline RoyParameters compute_parameters(const RoyScenario& sc, std::size_t n_per_cell,
                                        const std::vector<double>& u_grid, std::uint64_t seed,
                                        int threads = 1) {
    return compute_parameters(sc, simulate_roy(sc, n_per_cell, seed, threads), u_grid);
}

inline BoundReport check_prop5(const RoyScenario& sc, const std::vector<double>& betas,
                               std::size_t n_per_cell, std::uint64_t seed, int threads = 1) {
    return check_prop5(sc, simulate_roy(sc, n_per_cell, seed, threads), betas);
}

inline BoundReport check_prop6(const RoyScenario& sc, const std::vector<double>& alphas,
                               std::size_t n_per_cell, std::uint64_t seed, int threads = 1) {
    return check_prop6(sc, simulate_roy(sc, n_per_cell, seed, threads), alphas);
}

inline BoundReport check_theorem5(const RoyScenario& sc, const std::vector<double>& betas,
                                  const std::vector<double>& alphas, std::size_t n_per_cell,
                                  std::uint64_t seed, int threads = 1) {
    return check_theorem5(sc, simulate_roy(sc, n_per_cell, seed, threads), betas, alphas);
}

} // namespace welfare

#endif
