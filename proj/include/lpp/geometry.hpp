#pragma once

// Space-time coordinates, the cone order, order intervals and directed
// piecewise-linear paths.
//
// A lattice vertex (a, b) is identified with the space-time point
// (x, t) = (b - a, b + a). In these coordinates the upright directions span
// the cone {|x| <= t}, and p <= q means q lies in the cone translated to p.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lpp/error.hpp"

namespace lpp {

struct SpaceTimePoint {
    double x = 0.0; //!< space
    double t = 0.0; //!< time

    friend bool operator==(const SpaceTimePoint&, const SpaceTimePoint&) = default;
};

//! Lattice-frame coordinates (a, b) of a space-time point.
struct PlanarPoint {
    double a = 0.0;
    double b = 0.0;

    friend bool operator==(const PlanarPoint&, const PlanarPoint&) = default;
};

inline SpaceTimePoint rotate(long i, long j) noexcept {
    return {static_cast<double>(j - i), static_cast<double>(j + i)};
}

inline SpaceTimePoint rotate(PlanarPoint v) noexcept { return {v.b - v.a, v.b + v.a}; }

inline PlanarPoint unrotate(SpaceTimePoint p) noexcept {
    return {(p.t - p.x) / 2.0, (p.t + p.x) / 2.0};
}

//! True iff q lies in the upward cone of p, i.e. |q.x - p.x| <= q.t - p.t.
inline bool cone_contains(SpaceTimePoint p, SpaceTimePoint q) noexcept {
    return std::abs(q.x - p.x) <= q.t - p.t;
}

//! A pair (p; q). Operations that need q in the cone of p check it via
//! is_ordered(); make_ordered_pair() validates eagerly.
struct OrderedPair {
    SpaceTimePoint p;
    SpaceTimePoint q;

    bool is_ordered() const noexcept { return cone_contains(p, q); }
    double duration() const noexcept { return q.t - p.t; }
    double displacement() const noexcept { return q.x - p.x; }

    friend bool operator==(const OrderedPair&, const OrderedPair&) = default;
};

inline OrderedPair make_ordered_pair(SpaceTimePoint p, SpaceTimePoint q) {
    if (!std::isfinite(p.x) || !std::isfinite(p.t) || !std::isfinite(q.x) || !std::isfinite(q.t))
        throw DomainError("ordered pair: non-finite coordinate");
    if (!cone_contains(p, q))
        throw DomainError("ordered pair: q is not in the cone of p");
    return {p, q};
}

//! Order interval [p, q] in lattice-frame coordinates. Because the cone is
//! the first quadrant of the (a, b) frame, the interval is an axis aligned
//! rectangle; emptiness of an intersection of two such intervals is then
//! exactly the feasibility of the four half-plane constraints per interval.
struct OrderBox {
    double a_lo, a_hi, b_lo, b_hi;
};

inline OrderBox order_box(const OrderedPair& u) noexcept {
    const PlanarPoint lo = unrotate(u.p);
    const PlanarPoint hi = unrotate(u.q);
    return {lo.a, hi.a, lo.b, hi.b};
}

//! True iff r lies in the order interval [p, q].
inline bool interval_contains(const OrderedPair& u, SpaceTimePoint r) noexcept {
    return cone_contains(u.p, r) && cone_contains(r, u.q);
}

//! True iff there is no r with p_i <= r <= q_i for both pairs.
inline bool disjoint(const OrderedPair& u1, const OrderedPair& u2) noexcept {
    const OrderBox b1 = order_box(u1);
    const OrderBox b2 = order_box(u2);
    const bool a_overlap = std::max(b1.a_lo, b2.a_lo) <= std::min(b1.a_hi, b2.a_hi);
    const bool b_overlap = std::max(b1.b_lo, b2.b_lo) <= std::min(b1.b_hi, b2.b_hi);
    return !(a_overlap && b_overlap);
}

//! max(|x| + |s|, |y| + |t|) for u = (x, s; y, t).
inline double d1_norm(const OrderedPair& u) noexcept {
    return std::max(std::abs(u.p.x) + std::abs(u.p.t), std::abs(u.q.x) + std::abs(u.q.t));
}

//! Knot of a piecewise-linear path: position `x` at time `t`.
struct PathKnot {
    double t;
    double x;

    friend bool operator==(const PathKnot&, const PathKnot&) = default;
};

//! A directed (1-Lipschitz) piecewise-linear path r -> x(r) on [t_0, t_k].
class DirectedPath {
public:
    DirectedPath() = default;

    explicit DirectedPath(std::vector<PathKnot> knots) : knots_(std::move(knots)) {
        if (knots_.empty())
            throw DomainError("directed path: no knots");
        for (const auto& k : knots_)
            if (!std::isfinite(k.t) || !std::isfinite(k.x))
                throw DomainError("directed path: non-finite knot");
        for (std::size_t i = 1; i < knots_.size(); ++i) {
            const double dt = knots_[i].t - knots_[i - 1].t;
            if (!(dt > 0.0))
                throw DomainError("directed path: knot times must strictly increase");
            // Small slack absorbs rounding in constructed boundary-slope paths.
            if (std::abs(knots_[i].x - knots_[i - 1].x) > dt * (1.0 + 1e-12))
                throw DomainError("directed path: segment steeper than the light cone");
        }
    }

    //! Straight segment from p to q.
    static DirectedPath segment(SpaceTimePoint p, SpaceTimePoint q) {
        return DirectedPath({{p.t, p.x}, {q.t, q.x}});
    }

    std::span<const PathKnot> knots() const noexcept { return knots_; }
    std::size_t size() const noexcept { return knots_.size(); }
    double start_time() const noexcept { return knots_.front().t; }
    double end_time() const noexcept { return knots_.back().t; }
    SpaceTimePoint start() const noexcept { return {knots_.front().x, knots_.front().t}; }
    SpaceTimePoint end() const noexcept { return {knots_.back().x, knots_.back().t}; }

    bool covers(double r) const noexcept { return r >= start_time() && r <= end_time(); }

    double position(double r) const {
        if (!covers(r))
            throw DomainError("directed path: time outside the path's domain");
        if (knots_.size() == 1)
            return knots_.front().x;
        auto it = std::lower_bound(knots_.begin(), knots_.end(), r,
                                   [](const PathKnot& k, double v) { return k.t < v; });
        if (it->t == r)
            return it->x;
        const PathKnot& hi = *it;
        const PathKnot& lo = *(it - 1);
        const double s = (r - lo.t) / (hi.t - lo.t);
        return lo.x + s * (hi.x - lo.x);
    }

    SpaceTimePoint point(double r) const { return {position(r), r}; }

private:
    std::vector<PathKnot> knots_;
};

inline double path_position(const DirectedPath& f, double r) { return f.position(r); }

} // namespace lpp
