#pragma once

// Rate of a path being a geodesic: minimise the sum of the perspective form
// of J over piecewise-linear weight profiles w along f, subject to
// w(b) - w(a) >= d((f(a), a); (f(b), b)) for every pair of grid times a < b.
//
// The objective is separable and convex in the increments of w and the
// feasible set is a polyhedron. The solver starts from the smallest feasible
// profile, runs projected subgradient steps (Dykstra sweeps over the pairwise
// half-spaces followed by an exact forward repair), then polishes by exact
// line searches along pairwise transfers of weight between increments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lpp/error.hpp"
#include "lpp/geometry.hpp"
#include "lpp/metrics.hpp"
#include "lpp/rate_model.hpp"
#include "lpp/rates.hpp"

namespace lpp {

struct GeodesicRateOptions {
    int subgradient_iterations = 300;
    int dykstra_sweeps = 4;
    int polish_sweeps = 500;
    double endpoint_tolerance = 1e-9;
};

struct GeodesicRateResult {
    double value = kInf;
    WeightProfile profile;            //!< minimiser; empty when value is +inf
    double certificate_gap = 0.0;     //!< R(f, w_min) - value, >= 0
    double w_min_value = kInf;        //!< R(f, w_min), an upper bound on value
    double constraint_modulus = 0.0;  //!< bound on violations between grid times
    double max_violation = 0.0;       //!< worst grid constraint violation of profile
    int segments = 0;
};

namespace detail {

class GeodesicProgram {
public:
    //! Grid: k uniform segments, refined by the knots of f so that each
    //! segment of the profile sees a straight piece of the path.
    GeodesicProgram(const RateModel& rm, const DirectedPath& f, int k) : rm_(rm) {
        const double s = f.start_time();
        const double t = f.end_time();
        std::vector<double> times;
        for (int i = 0; i <= k; ++i)
            times.push_back(i == k ? t : s + (t - s) * static_cast<double>(i) / static_cast<double>(k));
        for (const auto& knot : f.knots())
            times.push_back(knot.t);
        std::sort(times.begin(), times.end());
        const double merge = 1e-12 * std::max(1.0, t - s);
        times.erase(std::unique(times.begin(), times.end(), [&](double a, double b) { return b - a <= merge; }),
                    times.end());
        if (t - times.back() > 0.0)
            times.back() = t;
        k_ = static_cast<int>(times.size()) - 1;
        for (double r : times)
            pts_.push_back({f.position(r), r});
        demand_.assign(static_cast<std::size_t>((k_ + 1) * (k_ + 1)), 0.0);
        for (int a = 0; a <= k_; ++a)
            for (int b = a + 1; b <= k_; ++b)
                demand_[idx(a, b)] = rm.d({pts_[static_cast<std::size_t>(a)], pts_[static_cast<std::size_t>(b)]});
    }

    int k() const noexcept { return k_; }
    std::span<const SpaceTimePoint> points() const noexcept { return pts_; }
    double demand(int a, int b) const noexcept { return demand_[idx(a, b)]; }

    double phi(int i, double delta) const {
        const OrderedPair seg{pts_[static_cast<std::size_t>(i)], pts_[static_cast<std::size_t>(i + 1)]};
        return rm_.theta_point(delta, seg);
    }

    double objective(const std::vector<double>& inc) const {
        double total = 0.0;
        for (int i = 0; i < k_; ++i) {
            const double v = phi(i, inc[static_cast<std::size_t>(i)]);
            if (v == kInf)
                return kInf;
            total += v;
        }
        return total;
    }

    //! Smallest profile meeting every constraint: longest chain of demands.
    std::vector<double> minimal_increments() const {
        std::vector<double> W(static_cast<std::size_t>(k_ + 1), 0.0);
        for (int b = 1; b <= k_; ++b)
            for (int a = 0; a < b; ++a)
                W[static_cast<std::size_t>(b)] = std::max(W[static_cast<std::size_t>(b)], W[static_cast<std::size_t>(a)] + demand(a, b));
        return to_increments(W);
    }

    //! Raises cumulative values forward until every constraint holds.
    void repair(std::vector<double>& inc) const {
        std::vector<double> W = to_cumulative(inc);
        for (int b = 1; b <= k_; ++b)
            for (int a = 0; a < b; ++a)
                W[static_cast<std::size_t>(b)] = std::max(W[static_cast<std::size_t>(b)], W[static_cast<std::size_t>(a)] + demand(a, b));
        inc = to_increments(W);
    }

    double max_violation(const std::vector<double>& inc) const {
        const std::vector<double> W = to_cumulative(inc);
        double worst = -kInf;
        for (int a = 0; a <= k_; ++a)
            for (int b = a + 1; b <= k_; ++b)
                worst = std::max(worst, demand(a, b) - (W[static_cast<std::size_t>(b)] - W[static_cast<std::size_t>(a)]));
        return worst;
    }

    //! Slack matrix s(a, b) = W_b - W_a - D_ab.
    std::vector<double> slacks(const std::vector<double>& inc) const {
        const std::vector<double> W = to_cumulative(inc);
        std::vector<double> s(demand_.size(), kInf);
        for (int a = 0; a <= k_; ++a)
            for (int b = a + 1; b <= k_; ++b)
                s[idx(a, b)] = W[static_cast<std::size_t>(b)] - W[static_cast<std::size_t>(a)] - demand(a, b);
        return s;
    }

    std::size_t idx(int a, int b) const noexcept { return static_cast<std::size_t>(a * (k_ + 1) + b); }

    static std::vector<double> to_cumulative(const std::vector<double>& inc) {
        std::vector<double> W(inc.size() + 1, 0.0);
        for (std::size_t i = 0; i < inc.size(); ++i)
            W[i + 1] = W[i] + inc[i];
        return W;
    }

    static std::vector<double> to_increments(const std::vector<double>& W) {
        std::vector<double> inc(W.size() - 1);
        for (std::size_t i = 0; i + 1 < W.size(); ++i)
            inc[i] = W[i + 1] - W[i];
        return inc;
    }

private:
    const RateModel& rm_;
    int k_;
    std::vector<SpaceTimePoint> pts_;
    std::vector<double> demand_;
};

//! Minimiser of a convex g on [lo, hi] by golden-section search.
template <class G>
double golden_min(G&& g, double lo, double hi, int iterations = 80) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double gc = g(c), gd = g(d);
    for (int it = 0; it < iterations && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
        if (gc <= gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - invphi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + invphi * (b - a);
            gd = g(d);
        }
    }
    // Compare the bracket ends too: convex g may be minimised at an end.
    double best = 0.5 * (a + b);
    double gbest = g(best);
    for (double cand : {lo, hi}) {
        const double gv = g(cand);
        if (gv < gbest) {
            gbest = gv;
            best = cand;
        }
    }
    return best;
}

inline void subgradient_phase(const GeodesicProgram& prog, std::vector<double>& best_inc, double& best_val,
                              const GeodesicRateOptions& opt) {
    const int k = prog.k();
    std::vector<double> x = best_inc;
    double scale = 0.0;
    for (double v : x)
        scale += std::abs(v);
    scale = std::max(scale / k, 1e-12);
    std::vector<double> corr(static_cast<std::size_t>((k + 1) * (k + 1)), 0.0);
    std::vector<double> g(static_cast<std::size_t>(k));
    for (int it = 0; it < opt.subgradient_iterations; ++it) {
        double norm = 0.0;
        for (int i = 0; i < k; ++i) {
            const double v = x[static_cast<std::size_t>(i)];
            const double eps = 1e-7 * std::max(1.0, std::abs(v));
            const double lo = prog.phi(i, v);
            const double hi = prog.phi(i, v + eps);
            g[static_cast<std::size_t>(i)] = (lo == kInf || hi == kInf) ? 0.0 : (hi - lo) / eps;
            norm += g[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(i)];
        }
        if (norm <= 0.0)
            break;
        norm = std::sqrt(norm);
        const double step = 0.1 * scale / std::sqrt(static_cast<double>(it) + 1.0);
        for (int i = 0; i < k; ++i)
            x[static_cast<std::size_t>(i)] -= step * g[static_cast<std::size_t>(i)] / norm;
        // Dykstra sweeps over the half-spaces sum_{a <= i < b} x_i >= D_ab;
        // each correction is a multiple of the half-space normal.
        for (int sweep = 0; sweep < opt.dykstra_sweeps; ++sweep)
            for (int a = 0; a < k; ++a)
                for (int b = a + 1; b <= k; ++b) {
                    double& c = corr[prog.idx(a, b)];
                    double sum = 0.0;
                    for (int i = a; i < b; ++i)
                        sum += x[static_cast<std::size_t>(i)] + c;
                    const double shortfall = std::max(0.0, prog.demand(a, b) - sum);
                    const double shift = shortfall / static_cast<double>(b - a);
                    for (int i = a; i < b; ++i)
                        x[static_cast<std::size_t>(i)] += c + shift;
                    c = -shift;
                }
        std::vector<double> feasible = x;
        prog.repair(feasible);
        const double val = prog.objective(feasible);
        if (val < best_val) {
            best_val = val;
            best_inc = feasible;
        }
    }
}

inline void polish_phase(const GeodesicProgram& prog, std::vector<double>& inc, double& val,
                         const GeodesicRateOptions& opt) {
    const int k = prog.k();
    for (int sweep = 0; sweep < opt.polish_sweeps; ++sweep) {
        bool improved = false;
        for (int i = 0; i < k; ++i)
            for (int j = -1; j < k; ++j) {
                if (j == i)
                    continue;
                // Move delta into increment i, out of increment j (j = -1: out of nothing).
                const auto s = prog.slacks(inc);
                double lo = -kInf, hi = kInf;
                for (int a = 0; a < k; ++a)
                    for (int b = a + 1; b <= k; ++b) {
                        const bool has_i = a <= i && i < b;
                        const bool has_j = j >= 0 && a <= j && j < b;
                        const double sl = std::max(0.0, s[prog.idx(a, b)]);
                        if (has_i && !has_j)
                            lo = std::max(lo, -sl);
                        else if (has_j && !has_i)
                            hi = std::min(hi, sl);
                    }
                if (j < 0)
                    hi = 0.0; // raising an increment alone never lowers the objective
                if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
                    continue;
                const double xi = inc[static_cast<std::size_t>(i)];
                const double xj = j >= 0 ? inc[static_cast<std::size_t>(j)] : 0.0;
                auto pair_cost = [&](double delta) {
                    double c = prog.phi(i, xi + delta);
                    if (j >= 0)
                        c += prog.phi(j, xj - delta);
                    return c;
                };
                const double base = pair_cost(0.0);
                const double delta = golden_min(pair_cost, lo, hi);
                const double cost = pair_cost(delta);
                if (cost < base - 1e-15 * std::max(1.0, std::abs(val))) {
                    inc[static_cast<std::size_t>(i)] = xi + delta;
                    if (j >= 0)
                        inc[static_cast<std::size_t>(j)] = xj - delta;
                    val = prog.objective(inc);
                    improved = true;
                }
            }
        if (!improved)
            break;
    }
}

inline bool endpoints_match(const DirectedPath& f, const OrderedPair& u, double tol) {
    const SpaceTimePoint a = f.start();
    const SpaceTimePoint b = f.end();
    return std::abs(a.x - u.p.x) <= tol && std::abs(a.t - u.p.t) <= tol && std::abs(b.x - u.q.x) <= tol &&
           std::abs(b.t - u.q.t) <= tol;
}

} // namespace detail

//! Minimal rate over k-segment profiles making f a geodesic from u.p to u.q.
//! Endpoint mismatch or an unordered u gives +inf.
inline GeodesicRateResult solve_geodesic_rate(const RateModel& rm, const DirectedPath& f, const OrderedPair& u, int k,
                                              const GeodesicRateOptions& opt = {}) {
    if (k < 1)
        throw DomainError("solve_geodesic_rate: need at least one segment");
    GeodesicRateResult res;
    res.segments = k;
    if (!u.is_ordered() || !detail::endpoints_match(f, u, opt.endpoint_tolerance) || !(f.end_time() > f.start_time()))
        return res;
    const detail::GeodesicProgram prog(rm, f, k);
    res.segments = prog.k();
    std::vector<double> inc = prog.minimal_increments();
    double val = prog.objective(inc);
    res.w_min_value = val;
    if (val > 0.0) {
        detail::subgradient_phase(prog, inc, val, opt);
        detail::polish_phase(prog, inc, val, opt);
    }
    res.value = val;
    res.certificate_gap = res.w_min_value == kInf ? kInf : std::max(0.0, res.w_min_value - val);
    res.max_violation = prog.max_violation(inc);
    const auto pts = prog.points();
    const auto W = detail::GeodesicProgram::to_cumulative(inc);
    std::vector<WeightProfile::Knot> knots;
    for (std::size_t i = 0; i < pts.size(); ++i)
        knots.push_back({pts[i].t, W[i]});
    // Rounding can leave an increment at -1e-17 after transfers.
    for (std::size_t i = 1; i < knots.size(); ++i)
        knots[i].w = std::max(knots[i].w, knots[i - 1].w);
    res.profile = WeightProfile(std::move(knots));
    double rate_bound = rm.F(0.0);
    double widest = 0.0;
    for (std::size_t i = 0; i < inc.size(); ++i) {
        rate_bound = std::max(rate_bound, inc[i] / (pts[i + 1].t - pts[i].t));
        widest = std::max(widest, pts[i + 1].t - pts[i].t);
    }
    res.constraint_modulus = 2.0 * rate_bound * widest;
    return res;
}

//! As above for raw knots; knots that do not form a directed path give +inf.
inline GeodesicRateResult solve_geodesic_rate(const RateModel& rm, std::vector<PathKnot> knots, const OrderedPair& u,
                                              int k, const GeodesicRateOptions& opt = {}) {
    try {
        return solve_geodesic_rate(rm, DirectedPath(std::move(knots)), u, k, opt);
    } catch (const DomainError&) {
        GeodesicRateResult res;
        res.segments = k;
        return res;
    }
}

//! J(2t, F(0)): rate of the midpoint of the geodesic to (0, 1) sitting at x = t.
inline double corner_rate(const RateModel& rm, double t) {
    if (!(t > 0.0 && t < 0.5))
        throw DomainError("corner_rate: t must lie in (0, 1/2)");
    return rm.J(2.0 * t, rm.F(0.0));
}

//! Whether the straight line between f's end points has no larger path rate
//! under the same profile w.
inline bool straight_line_dominance(const RateModel& rm, const DirectedPath& f, const WeightProfile& w) {
    const DirectedPath line = DirectedPath::segment(f.start(), f.end());
    const double straight = path_rate(rm, line, w);
    const double other = path_rate(rm, f, w);
    if (other == kInf)
        return true;
    return straight <= other + 1e-12 * std::max(1.0, std::abs(other));
}

} // namespace lpp
