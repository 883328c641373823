#pragma once

// Planted network metrics and finite-grid checks of the metric axioms.
//
// A planted network is a family of pairwise disjoint directed paths, each
// carrying a nondecreasing continuous weight profile. Its metric is the
// longest-path value over chains that either ride a planted path (gaining
// the profile increment) or jump between ordered points (gaining d = t F(x/t)).
// Jumps may land anywhere, but since d is superadditive only the end points
// and points on planted paths matter, which turns evaluation into a longest
// path in a DAG over path points sampled every h in time.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lpp/error.hpp"
#include "lpp/geometry.hpp"
#include "lpp/rate_model.hpp"

namespace lpp {

//! Cumulative weight r -> w(r), piecewise linear and nondecreasing.
class WeightProfile {
public:
    struct Knot {
        double t;
        double w;
        friend bool operator==(const Knot&, const Knot&) = default;
    };

    WeightProfile() = default;

    explicit WeightProfile(std::vector<Knot> knots) : knots_(std::move(knots)) {
        if (knots_.size() < 2)
            throw DomainError("weight profile: needs at least two knots");
        for (std::size_t i = 0; i < knots_.size(); ++i) {
            if (!std::isfinite(knots_[i].t) || !std::isfinite(knots_[i].w))
                throw DomainError("weight profile: non-finite knot");
            if (i > 0 && !(knots_[i].t > knots_[i - 1].t))
                throw DomainError("weight profile: knot times must strictly increase");
            if (i > 0 && knots_[i].w < knots_[i - 1].w)
                throw DomainError("weight profile: weights must be nondecreasing");
        }
    }

    //! w(r) = rate * (r - s) on [s, t].
    static WeightProfile linear(double s, double t, double rate) {
        return WeightProfile({{s, 0.0}, {t, rate * (t - s)}});
    }

    std::span<const Knot> knots() const noexcept { return knots_; }
    double start_time() const noexcept { return knots_.front().t; }
    double end_time() const noexcept { return knots_.back().t; }

    double value(double r) const {
        if (r < start_time() || r > end_time())
            throw DomainError("weight profile: time outside the profile's domain");
        auto it = std::lower_bound(knots_.begin(), knots_.end(), r, [](const Knot& k, double v) { return k.t < v; });
        if (it->t == r)
            return it->w;
        const Knot& hi = *it;
        const Knot& lo = *(it - 1);
        return lo.w + (r - lo.t) / (hi.t - lo.t) * (hi.w - lo.w);
    }

    double increment(double s, double t) const { return value(t) - value(s); }

    //! Largest slope of any segment.
    double max_rate() const noexcept {
        double m = 0.0;
        for (std::size_t i = 1; i < knots_.size(); ++i)
            m = std::max(m, (knots_[i].w - knots_[i - 1].w) / (knots_[i].t - knots_[i - 1].t));
        return m;
    }

private:
    std::vector<Knot> knots_;
};

struct Planting {
    DirectedPath path;
    WeightProfile profile;
};

//! Points (x, t) are considered on a path when within this distance of it.
inline constexpr double kOnPathTolerance = 1e-9;

namespace detail {

//! Cone order with slack for rounding, so light-like pairs of grid points
//! built as lo + k h stay ordered.
inline bool leq(SpaceTimePoint p, SpaceTimePoint q) noexcept {
    return std::abs(q.x - p.x) <= q.t - p.t + 1e-12;
}

} // namespace detail

class PlantedNetworkMetric {
public:
    PlantedNetworkMetric(std::vector<Planting> plantings, RateModel model, double h)
        : plantings_(std::move(plantings)), model_(std::move(model)), h_(h) {
        if (!(h_ > 0.0))
            throw DomainError("planted network: resolution h must be positive");
        for (const auto& p : plantings_) {
            if (std::abs(p.path.start_time() - p.profile.start_time()) > 1e-12 ||
                std::abs(p.path.end_time() - p.profile.end_time()) > 1e-12)
                throw DomainError("planted network: profile domain differs from its path's domain");
            if (p.path.size() < 2)
                throw DomainError("planted network: paths need a positive duration");
        }
        check_disjoint();
        build_nodes();
    }

    std::span<const Planting> plantings() const noexcept { return plantings_; }
    const RateModel& model() const noexcept { return model_; }
    double resolution() const noexcept { return h_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }

    //! Index of the planted path through point a, if any.
    std::optional<std::size_t> path_through(SpaceTimePoint a) const {
        for (std::size_t i = 0; i < plantings_.size(); ++i) {
            const auto& f = plantings_[i].path;
            if (f.covers(a.t) && std::abs(f.position(a.t) - a.x) <= kOnPathTolerance)
                return i;
        }
        return std::nullopt;
    }

    //! Profile increment when one planted path passes through both end points, else 0.
    double e0(const OrderedPair& u) const {
        if (!(u.q.t >= u.p.t))
            return 0.0;
        const auto a = path_through(u.p);
        if (!a)
            return 0.0;
        const auto b = path_through(u.q);
        if (!b || *a != *b)
            return 0.0;
        return plantings_[*a].profile.increment(u.p.t, u.q.t);
    }

    //! Metric value of u; 0 when u is not ordered.
    double evaluate(const OrderedPair& u) const {
        if (!detail::leq(u.p, u.q))
            return 0.0;
        const Endpoint p = classify(u.p);
        const Endpoint q = classify(u.q);
        double best = edge(p, q);
        std::vector<double> reach(nodes_.size(), -kInf);
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            const Node& b = nodes_[k];
            if (!detail::leq(u.p, b.pt) || !detail::leq(b.pt, u.q))
                continue;
            double v = edge(p, b);
            for (std::size_t a = 0; a < k; ++a) {
                if (reach[a] == -kInf || !detail::leq(nodes_[a].pt, b.pt))
                    continue;
                v = std::max(v, reach[a] + weights_[a * nodes_.size() + k]);
            }
            reach[k] = v;
            best = std::max(best, v + edge(b, q));
        }
        return best;
    }

    //! Values e(p, q) for a fixed p and many q, sharing one forward pass.
    std::vector<double> evaluate_from(SpaceTimePoint p_point, std::span<const SpaceTimePoint> qs) const {
        const Endpoint p = classify(p_point);
        std::vector<double> reach(nodes_.size(), -kInf);
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            const Node& b = nodes_[k];
            if (!detail::leq(p_point, b.pt))
                continue;
            double v = edge(p, b);
            for (std::size_t a = 0; a < k; ++a) {
                if (reach[a] == -kInf || !detail::leq(nodes_[a].pt, b.pt))
                    continue;
                v = std::max(v, reach[a] + weights_[a * nodes_.size() + k]);
            }
            reach[k] = v;
        }
        std::vector<double> out(qs.size(), 0.0);
        for (std::size_t j = 0; j < qs.size(); ++j) {
            if (!detail::leq(p_point, qs[j]))
                continue;
            const Endpoint q = classify(qs[j]);
            double best = edge(p, q);
            for (std::size_t k = 0; k < nodes_.size(); ++k)
                if (reach[k] != -kInf && detail::leq(nodes_[k].pt, qs[j]))
                    best = std::max(best, reach[k] + edge(nodes_[k], q));
            out[j] = best;
        }
        return out;
    }

    //! max over plantings of max(F, profile rate); scale of first-order grid errors.
    double lipschitz_scale() const {
        double s = std::max(model_.F(0.0), model_.distribution().mean());
        for (const auto& p : plantings_)
            s = std::max(s, p.profile.max_rate());
        return s;
    }

private:
    static constexpr std::size_t kNoPath = static_cast<std::size_t>(-1);

    struct Node {
        SpaceTimePoint pt;
        std::size_t path;
    };
    using Endpoint = Node;

    Endpoint classify(SpaceTimePoint a) const {
        const auto i = path_through(a);
        return {a, i ? *i : kNoPath};
    }

    double edge(const Endpoint& a, const Endpoint& b) const {
        if (!detail::leq(a.pt, b.pt))
            return -kInf;
        const OrderedPair u{a.pt, b.pt};
        double v = model_.d(u);
        if (a.path != kNoPath && a.path == b.path)
            v = std::max(v, plantings_[a.path].profile.increment(a.pt.t, b.pt.t));
        return v;
    }

    void check_disjoint() const {
        const double step = h_ / 4.0;
        for (std::size_t i = 0; i < plantings_.size(); ++i)
            for (std::size_t j = i + 1; j < plantings_.size(); ++j) {
                const auto& f = plantings_[i].path;
                const auto& g = plantings_[j].path;
                const double lo = std::max(f.start_time(), g.start_time());
                const double hi = std::min(f.end_time(), g.end_time());
                if (lo > hi)
                    continue;
                const auto count = static_cast<long>(std::ceil((hi - lo) / step));
                for (long k = 0; k <= count; ++k) {
                    const double r = k == count ? hi : lo + static_cast<double>(k) * step;
                    if (std::abs(f.position(r) - g.position(r)) < h_ / 2.0)
                        throw DomainError("planted network: paths " + std::to_string(i) + " and " +
                                          std::to_string(j) + " come closer than h/2 at time " +
                                          std::to_string(r));
                }
            }
    }

    void build_nodes() {
        for (std::size_t i = 0; i < plantings_.size(); ++i) {
            const auto& pl = plantings_[i];
            std::vector<double> times;
            const double s = pl.path.start_time();
            const double t = pl.path.end_time();
            for (long k = 0;; ++k) {
                const double r = s + static_cast<double>(k) * h_;
                if (r >= t)
                    break;
                times.push_back(r);
            }
            times.push_back(t);
            for (const auto& k : pl.path.knots())
                times.push_back(k.t);
            for (const auto& k : pl.profile.knots())
                times.push_back(k.t);
            std::sort(times.begin(), times.end());
            times.erase(std::unique(times.begin(), times.end()), times.end());
            for (double r : times)
                nodes_.push_back({{pl.path.position(r), r}, i});
        }
        std::stable_sort(nodes_.begin(), nodes_.end(), [](const Node& a, const Node& b) { return a.pt.t < b.pt.t; });
        const std::size_t n = nodes_.size();
        weights_.assign(n * n, -kInf);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b)
                weights_[a * n + b] = edge(nodes_[a], nodes_[b]);
    }

    std::vector<Planting> plantings_;
    RateModel model_;
    double h_;
    std::vector<Node> nodes_;     // sorted by time
    std::vector<double> weights_; // node-to-node edge weights
};

// -- grid functions ----------------------------------------------------------

//! Compact box of space-time points sampled with spacing h in both x and t.
struct GridBox {
    double x_lo, x_hi, t_lo, t_hi;
};

//! Values e(P, Q) for all pairs of grid points of a box; 0 on unordered pairs.
class GridFunction {
public:
    GridFunction(GridBox box, double h) : box_(box), h_(h) {
        if (!(h > 0.0))
            throw DomainError("grid function: spacing must be positive");
        if (!(box.x_hi >= box.x_lo && box.t_hi >= box.t_lo))
            throw DomainError("grid function: empty box");
        nx_ = static_cast<long>(std::llround((box.x_hi - box.x_lo) / h)) + 1;
        nt_ = static_cast<long>(std::llround((box.t_hi - box.t_lo) / h)) + 1;
        values_.assign(static_cast<std::size_t>(size() * size()), 0.0);
    }

    //! Samples fn(u) on every ordered pair of grid points.
    template <class Fn>
    static GridFunction sample(GridBox box, double h, Fn&& fn) {
        GridFunction g(box, h);
        for (long a = 0; a < g.size(); ++a)
            for (long b = 0; b < g.size(); ++b) {
                if (g.ordered(a, b))
                    g.at(a, b) = fn(OrderedPair{g.point(a), g.point(b)});
            }
        return g;
    }

    static GridFunction from_metric(const PlantedNetworkMetric& m, GridBox box, double h) {
        GridFunction g(box, h);
        std::vector<SpaceTimePoint> pts(static_cast<std::size_t>(g.size()));
        for (long a = 0; a < g.size(); ++a)
            pts[static_cast<std::size_t>(a)] = g.point(a);
        for (long a = 0; a < g.size(); ++a) {
            const auto row = m.evaluate_from(pts[static_cast<std::size_t>(a)], pts);
            std::copy(row.begin(), row.end(), g.values_.begin() + a * g.size());
        }
        return g;
    }

    GridBox box() const noexcept { return box_; }
    double spacing() const noexcept { return h_; }
    long nx() const noexcept { return nx_; }
    long nt() const noexcept { return nt_; }
    long size() const noexcept { return nx_ * nt_; }

    long index(long ix, long it) const noexcept { return it * nx_ + ix; }
    SpaceTimePoint point(long k) const noexcept {
        return {box_.x_lo + static_cast<double>(k % nx_) * h_, box_.t_lo + static_cast<double>(k / nx_) * h_};
    }
    long ix(long k) const noexcept { return k % nx_; }
    long it(long k) const noexcept { return k / nx_; }

    double& at(long p, long q) noexcept { return values_[static_cast<std::size_t>(p * size() + q)]; }
    double at(long p, long q) const noexcept { return values_[static_cast<std::size_t>(p * size() + q)]; }

    //! Grid index ordering, valid on the integer lattice of the grid.
    bool ordered(long p, long q) const noexcept {
        return std::abs(ix(q) - ix(p)) <= it(q) - it(p);
    }

    bool same_grid(const GridFunction& o) const noexcept {
        const double tol = 1e-12 * std::max(1.0, h_);
        return nx_ == o.nx_ && nt_ == o.nt_ && std::abs(h_ - o.h_) <= tol && std::abs(box_.x_lo - o.box_.x_lo) <= tol &&
               std::abs(box_.t_lo - o.box_.t_lo) <= tol;
    }

    std::span<const double> values() const noexcept { return values_; }

private:
    GridBox box_;
    double h_;
    long nx_ = 0;
    long nt_ = 0;
    std::vector<double> values_;
};

namespace detail {

//! Offset grid points r + (-h, h) and r + (h, h), when inside the grid.
inline int boundary_offsets(const GridFunction& g, long r, long out[2]) {
    int n = 0;
    if (g.it(r) + 1 < g.nt()) {
        if (g.ix(r) > 0)
            out[n++] = g.index(g.ix(r) - 1, g.it(r) + 1);
        if (g.ix(r) + 1 < g.nx())
            out[n++] = g.index(g.ix(r) + 1, g.it(r) + 1);
    }
    return n;
}

} // namespace detail

//! max over grid triples p <= r <= q and offsets r+ of e(p, r) + e(r+, q) - e(p, q).
//! Returns -inf when the grid holds no admissible triple.
inline double check_triangle(const GridFunction& g) {
    double worst = -kInf;
    const long n = g.size();
    for (long p = 0; p < n; ++p)
        for (long r = 0; r < n; ++r) {
            if (!g.ordered(p, r))
                continue;
            long off[2];
            const int no = detail::boundary_offsets(g, r, off);
            for (long q = 0; q < n; ++q) {
                if (!g.ordered(r, q))
                    continue;
                for (int k = 0; k < no; ++k)
                    worst = std::max(worst, g.at(p, r) + g.at(off[k], q) - g.at(p, q));
            }
        }
    return worst;
}

//! max over ordered grid pairs (p, q) and grid times strictly between of
//! |e(p, q) - max_z [e(p, (z, r)) + e((z, r)+, q)]|, z ranging over grid
//! points at time r in [p, q].
inline double check_composition(const GridFunction& g) {
    double worst = 0.0;
    const long n = g.size();
    for (long p = 0; p < n; ++p)
        for (long q = 0; q < n; ++q) {
            if (!g.ordered(p, q) || g.it(q) - g.it(p) < 2)
                continue;
            for (long t = g.it(p) + 1; t < g.it(q); ++t) {
                double best = -kInf;
                for (long x = 0; x < g.nx(); ++x) {
                    const long z = g.index(x, t);
                    if (!g.ordered(p, z) || !g.ordered(z, q))
                        continue;
                    long off[2];
                    const int no = detail::boundary_offsets(g, z, off);
                    for (int k = 0; k < no; ++k)
                        best = std::max(best, g.at(p, z) + g.at(off[k], q));
                }
                if (best != -kInf)
                    worst = std::max(worst, std::abs(g.at(p, q) - best));
            }
        }
    return worst;
}

inline double check_triangle(const PlantedNetworkMetric& m, GridBox box, double h) {
    return check_triangle(GridFunction::from_metric(m, box, h));
}

inline double check_composition(const PlantedNetworkMetric& m, GridBox box, double h) {
    return check_composition(GridFunction::from_metric(m, box, h));
}

//! Hausdorff distance between the hypographs {(u, v) : 0 <= v <= min(e(u), v_max)}
//! over ordered grid pairs u, with distance max(d1(u - u'), |v - v'|).
inline double hypo_distance(const GridFunction& a, const GridFunction& b, double v_max = kInf) {
    if (!a.same_grid(b))
        throw DomainError("hypo_distance: grid functions are sampled on different grids");
    const long n = a.size();
    const double h = a.spacing();
    // One direction: sup over u of the distance from (u, a(u)) to hypo(b).
    auto directed = [&](const GridFunction& f, const GridFunction& g) {
        double worst = 0.0;
        for (long p = 0; p < n; ++p)
            for (long q = 0; q < n; ++q) {
                if (!f.ordered(p, q))
                    continue;
                const double v = std::min(f.at(p, q), v_max);
                double best = std::max(0.0, v - std::min(g.at(p, q), v_max));
                if (best <= worst)
                    continue; // cannot raise the sup
                // Scan rings of growing d1 radius k*h until they cannot help.
                for (long k = 1; static_cast<double>(k) * h < best; ++k) {
                    const double ring = static_cast<double>(k) * h;
                    for (long dpx = -k; dpx <= k; ++dpx)
                        for (long dpt = -(k - std::abs(dpx)); dpt <= k - std::abs(dpx); ++dpt)
                            for (long dqx = -k; dqx <= k; ++dqx)
                                for (long dqt = -(k - std::abs(dqx)); dqt <= k - std::abs(dqx); ++dqt) {
                                    if (std::abs(dpx) + std::abs(dpt) != k && std::abs(dqx) + std::abs(dqt) != k)
                                        continue;
                                    const long px = f.ix(p) + dpx, pt = f.it(p) + dpt;
                                    const long qx = f.ix(q) + dqx, qt = f.it(q) + dqt;
                                    if (px < 0 || qx < 0 || pt < 0 || qt < 0 || px >= f.nx() || qx >= f.nx() ||
                                        pt >= f.nt() || qt >= f.nt())
                                        continue;
                                    const long p2 = f.index(px, pt), q2 = f.index(qx, qt);
                                    if (!g.ordered(p2, q2))
                                        continue;
                                    best = std::min(best, std::max(ring, v - std::min(g.at(p2, q2), v_max)));
                                }
                    if (best <= worst)
                        break;
                }
                worst = std::max(worst, best);
            }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

} // namespace lpp
