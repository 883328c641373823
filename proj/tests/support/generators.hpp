#pragma once

// Hand-rolled random generators and brute-force oracles shared by the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "lpp/geometry.hpp"
#include "lpp/passage.hpp"
#include "lpp/rng.hpp"
#include "lpp/weights.hpp"

namespace lpp::testing {

inline double uniform(Engine& eng, double lo, double hi) { return lo + (hi - lo) * uniform01(eng); }

inline long uniform_int(Engine& eng, long lo, long hi) {
    return lo + static_cast<long>(uniform01(eng) * static_cast<double>(hi - lo + 1));
}

inline SpaceTimePoint random_point(Engine& eng, double span = 2.0) {
    return {uniform(eng, -span, span), uniform(eng, -span, span)};
}

//! A point uniformly placed in the cone of p, at most `dt` later.
inline SpaceTimePoint random_later(Engine& eng, SpaceTimePoint p, double dt) {
    const double t = p.t + uniform(eng, 0.0, dt);
    const double dx = (t - p.t) * uniform(eng, -1.0, 1.0);
    return {p.x + dx, t};
}

inline OrderedPair random_pair(Engine& eng, double span = 2.0) {
    const SpaceTimePoint p = random_point(eng, span);
    return {p, random_later(eng, p, span)};
}

//! Directed path on [s, t] with `k` random segments, slopes in [-max_slope, max_slope].
inline DirectedPath random_path(Engine& eng, double s, double t, int k, double x0 = 0.0, double max_slope = 1.0) {
    std::vector<double> times{s, t};
    for (int i = 1; i < k; ++i)
        times.push_back(uniform(eng, s, t));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::vector<PathKnot> knots{{times[0], x0}};
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double dt = times[i] - times[i - 1];
        knots.push_back({times[i], knots.back().x + dt * uniform(eng, -max_slope, max_slope)});
    }
    return DirectedPath(std::move(knots));
}

inline LatticeWeights random_weights(Engine& eng, const WeightDistribution& dist, long n) {
    std::vector<double> v(static_cast<std::size_t>(n * n));
    for (auto& x : v)
        x = dist.sample(eng);
    return LatticeWeights(n, std::move(v), 0, dist);
}

//! Calls visit(path) for every upright path from u to v.
inline void for_each_upright_path(Vertex u, Vertex v, const std::function<void(const std::vector<Vertex>&)>& visit) {
    std::vector<Vertex> cur{u};
    std::function<void()> rec = [&] {
        const Vertex last = cur.back();
        if (last == v) {
            visit(cur);
            return;
        }
        if (last.i < v.i) {
            cur.push_back({last.i + 1, last.j});
            rec();
            cur.pop_back();
        }
        if (last.j < v.j) {
            cur.push_back({last.i, last.j + 1});
            rec();
            cur.pop_back();
        }
    };
    rec();
}

inline double brute_force_passage(const LatticeWeights& w, Vertex u, Vertex v) {
    double best = -kInf;
    for_each_upright_path(u, v, [&](const std::vector<Vertex>& p) {
        double s = 0.0;
        for (const auto& x : p)
            s += w(x.i, x.j);
        best = std::max(best, s);
    });
    return best;
}

//! Longest chain in the coordinatewise order by subset enumeration.
inline long brute_force_chain(const std::vector<PlanarPoint>& pts, PlanarPoint u, PlanarPoint v) {
    const std::size_t k = pts.size();
    long best = 0;
    for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
        std::vector<PlanarPoint> sel;
        for (std::size_t i = 0; i < k; ++i)
            if (mask & (1u << i))
                sel.push_back(pts[i]);
        bool ok = true;
        for (const auto& p : sel)
            ok = ok && p.a >= u.a && p.b >= u.b && p.a <= v.a && p.b <= v.b;
        std::sort(sel.begin(), sel.end(), [](auto l, auto r) { return l.a < r.a || (l.a == r.a && l.b < r.b); });
        for (std::size_t i = 1; ok && i < sel.size(); ++i)
            ok = sel[i - 1].a <= sel[i].a && sel[i - 1].b <= sel[i].b;
        if (ok)
            best = std::max(best, static_cast<long>(sel.size()));
    }
    return best;
}

} // namespace lpp::testing
