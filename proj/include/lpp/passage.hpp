#pragma once

// Last passage times on the lattice: row-sweep dynamic programming,
// rightmost geodesics, rescaled passage times, exhaustive small-lattice tail
// probabilities, Poisson last passage and the directed polymer partition
// function.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "lpp/error.hpp"
#include "lpp/geometry.hpp"
#include "lpp/rng.hpp"
#include "lpp/weights.hpp"

namespace lpp {

struct Vertex {
    long i = 0;
    long j = 0;

    friend bool operator==(const Vertex&, const Vertex&) = default;
};

inline bool vertex_leq(Vertex u, Vertex v) noexcept { return u.i <= v.i && u.j <= v.j; }

inline SpaceTimePoint rotate(Vertex v) noexcept { return rotate(v.i, v.j); }

//! Compensated running sum. The same sequence of add() calls always yields
//! the same bits, which is what lets a backtracked path reproduce the DP
//! value exactly.
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double v) noexcept {
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    KahanSum plus(double v) const noexcept {
        KahanSum k = *this;
        k.add(v);
        return k;
    }
};

//! Upright lattice path: each step increments exactly one coordinate.
class LatticePath {
public:
    LatticePath() = default;
    explicit LatticePath(std::vector<Vertex> vertices) : vertices_(std::move(vertices)) {
        for (std::size_t k = 1; k < vertices_.size(); ++k) {
            const long di = vertices_[k].i - vertices_[k - 1].i;
            const long dj = vertices_[k].j - vertices_[k - 1].j;
            if (!((di == 1 && dj == 0) || (di == 0 && dj == 1)))
                throw DomainError("lattice path: steps must be +e1 or +e2");
        }
    }

    std::span<const Vertex> vertices() const noexcept { return vertices_; }
    std::size_t size() const noexcept { return vertices_.size(); }
    bool empty() const noexcept { return vertices_.empty(); }
    const Vertex& front() const { return vertices_.front(); }
    const Vertex& back() const { return vertices_.back(); }

private:
    std::vector<Vertex> vertices_;
};

namespace detail {

inline void check_in_lattice(const LatticeWeights& w, Vertex v) {
    if (v.i < 0 || v.j < 0 || v.i >= w.n() || v.j >= w.n())
        throw DomainError("vertex outside the sampled lattice");
}

} // namespace detail

//! Passage time over the rectangle [0, rows) x [0, cols) from (0,0) to
//! (rows-1, cols-1) where row i is produced on demand by `fill_row(i, span)`.
//! O(cols) memory; the weights never need to be stored.
template <class FillRow>
double passage_time_streamed(long rows, long cols, FillRow&& fill_row) {
    std::vector<KahanSum> prev(static_cast<std::size_t>(cols));
    std::vector<KahanSum> cur(static_cast<std::size_t>(cols));
    std::vector<double> row(static_cast<std::size_t>(cols));
    for (long i = 0; i < rows; ++i) {
        fill_row(i, std::span<double>(row));
        for (long j = 0; j < cols; ++j) {
            KahanSum best;
            if (i > 0 && j > 0)
                best = prev[j].sum >= cur[j - 1].sum ? prev[j] : cur[j - 1];
            else if (i > 0)
                best = prev[j];
            else if (j > 0)
                best = cur[j - 1];
            cur[j] = best.plus(row[j]);
        }
        std::swap(prev, cur);
    }
    return prev[static_cast<std::size_t>(cols - 1)].sum;
}

//! Maximal weight of an upright path from u to v, both endpoints included.
//! Returns 0 when u is not coordinatewise below v.
inline double passage_time(const LatticeWeights& w, Vertex u, Vertex v) {
    if (!vertex_leq(u, v))
        return 0.0;
    detail::check_in_lattice(w, u);
    detail::check_in_lattice(w, v);
    return passage_time_streamed(v.i - u.i + 1, v.j - u.j + 1, [&](long r, std::span<double> row) {
        for (std::size_t c = 0; c < row.size(); ++c)
            row[c] = w(u.i + r, u.j + static_cast<long>(c));
    });
}

namespace detail {

// Snap values within rounding of an integer before ceil/floor so that
// n * (t - x) / 2 = 2.9999999999 still lands on 3.
inline long snap_ceil(double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? static_cast<long>(r) : static_cast<long>(std::ceil(v));
}
inline long snap_floor(double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? static_cast<long>(r) : static_cast<long>(std::floor(v));
}

} // namespace detail

//! Lattice corners (ceil(n p), floor(n q)) of a space-time pair, in the (a, b) frame.
struct LatticeCorners {
    Vertex start;
    Vertex end;
    bool ordered;
};

inline LatticeCorners lattice_corners(double n, const OrderedPair& u) {
    const PlanarPoint p = unrotate(u.p);
    const PlanarPoint q = unrotate(u.q);
    LatticeCorners c;
    c.start = {detail::snap_ceil(n * p.a), detail::snap_ceil(n * p.b)};
    c.end = {detail::snap_floor(n * q.a), detail::snap_floor(n * q.b)};
    c.ordered = vertex_leq(c.start, c.end);
    return c;
}

//! T(n p, n q) / n with start corner ceiled and end corner floored.
inline double rescaled_passage(const LatticeWeights& w, double n, const OrderedPair& u) {
    if (!(n > 0.0))
        throw DomainError("rescaled_passage: n must be positive");
    const LatticeCorners c = lattice_corners(n, u);
    if (!c.ordered)
        return 0.0;
    detail::check_in_lattice(w, c.start);
    detail::check_in_lattice(w, c.end);
    return passage_time(w, c.start, c.end) / n;
}

//! Rightmost geodesic from (0,0) to (rows-1, cols-1) of the weights produced
//! row by row. Ties prefer the predecessor (i-1, j), whose rotated x is larger.
//! Stores one direction byte per vertex. Returns the path and its weight.
template <class FillRow>
std::pair<LatticePath, double> geodesic_streamed(long rows, long cols, FillRow&& fill_row) {
    std::vector<KahanSum> prev(static_cast<std::size_t>(cols));
    std::vector<KahanSum> cur(static_cast<std::size_t>(cols));
    std::vector<double> row(static_cast<std::size_t>(cols));
    // 1: came from (i-1, j); 2: came from (i, j-1).
    std::vector<std::uint8_t> dir(static_cast<std::size_t>(rows * cols), 0);
    for (long i = 0; i < rows; ++i) {
        fill_row(i, std::span<double>(row));
        for (long j = 0; j < cols; ++j) {
            KahanSum best;
            std::uint8_t d = 0;
            if (i > 0 && j > 0) {
                if (prev[j].sum >= cur[j - 1].sum) {
                    best = prev[j];
                    d = 1;
                } else {
                    best = cur[j - 1];
                    d = 2;
                }
            } else if (i > 0) {
                best = prev[j];
                d = 1;
            } else if (j > 0) {
                best = cur[j - 1];
                d = 2;
            }
            cur[j] = best.plus(row[j]);
            dir[static_cast<std::size_t>(i * cols + j)] = d;
        }
        std::swap(prev, cur);
    }
    std::vector<Vertex> verts;
    verts.reserve(static_cast<std::size_t>(rows + cols - 1));
    long i = rows - 1;
    long j = cols - 1;
    verts.push_back({i, j});
    while (i > 0 || j > 0) {
        if (dir[static_cast<std::size_t>(i * cols + j)] == 1)
            --i;
        else
            --j;
        verts.push_back({i, j});
    }
    std::reverse(verts.begin(), verts.end());
    return {LatticePath(std::move(verts)), prev[static_cast<std::size_t>(cols - 1)].sum};
}

inline LatticePath geodesic(const LatticeWeights& w, Vertex u, Vertex v) {
    if (!vertex_leq(u, v))
        throw DomainError("geodesic: endpoints are not ordered");
    detail::check_in_lattice(w, u);
    detail::check_in_lattice(w, v);
    auto [rel, value] = geodesic_streamed(v.i - u.i + 1, v.j - u.j + 1, [&](long r, std::span<double> row) {
        for (std::size_t c = 0; c < row.size(); ++c)
            row[c] = w(u.i + r, u.j + static_cast<long>(c));
    });
    std::vector<Vertex> verts;
    verts.reserve(rel.size());
    for (const Vertex& x : rel.vertices())
        verts.push_back({x.i + u.i, x.j + u.j});
    return LatticePath(std::move(verts));
}

//! Weight of a lattice path, accumulated start to end exactly as the DP does.
inline double path_weight(const LatticeWeights& w, const LatticePath& path) {
    KahanSum k;
    for (const Vertex& v : path.vertices())
        k.add(w(v.i, v.j));
    return k.sum;
}

//! Rotated x-coordinate of the path at time start + fraction * duration,
//! interpolated linearly between consecutive anti-diagonals.
inline double transversal(const LatticePath& g, double fraction) {
    if (g.empty())
        throw DomainError("transversal: empty path");
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw DomainError("transversal: fraction must lie in [0, 1]");
    const auto verts = g.vertices();
    const double total = static_cast<double>(verts.size() - 1);
    const double pos = fraction * total;
    const auto k = static_cast<std::size_t>(std::floor(pos));
    if (k + 1 >= verts.size())
        return rotate(verts.back()).x;
    const double s = pos - static_cast<double>(k);
    const double x0 = rotate(verts[k]).x;
    const double x1 = rotate(verts[k + 1]).x;
    return x0 + s * (x1 - x0);
}

//! Exact P(T >= x) for the corner-to-corner passage time of a side x side
//! lattice with i.i.d. finite-support weights, by full enumeration.
inline double exact_tail(const WeightDistribution& dist, int side, double x,
                         double max_configurations = 1e8) {
    if (!dist.finite_support())
        throw DomainError("exact_tail: distribution must have finite support");
    if (side < 1)
        throw DomainError("exact_tail: side must be at least 1");
    if (x <= dist.min_support() * (2 * side - 1))
        return 1.0;
    const auto values = dist.support();
    const auto masses = dist.masses();
    const auto m = values.size();
    const int cells = side * side;
    const double configs = std::pow(static_cast<double>(m), cells);
    if (configs > max_configurations)
        throw CapacityError("exact_tail: " + std::to_string(configs) + " configurations exceed the budget");

    std::vector<std::size_t> digit(static_cast<std::size_t>(cells), 0);
    std::vector<double> g(static_cast<std::size_t>(cells));
    double tail = 0.0;
    for (;;) {
        double prob = 1.0;
        for (int c = 0; c < cells; ++c)
            prob *= masses[digit[c]];
        if (prob > 0.0) {
            for (int i = 0; i < side; ++i)
                for (int j = 0; j < side; ++j) {
                    double best = 0.0;
                    if (i > 0)
                        best = g[(i - 1) * side + j];
                    if (j > 0)
                        best = std::max(best, g[i * side + j - 1]);
                    g[i * side + j] = best + values[digit[i * side + j]];
                }
            if (g[cells - 1] >= x)
                tail += prob;
        }
        int c = 0;
        while (c < cells && ++digit[c] == m) {
            digit[c] = 0;
            ++c;
        }
        if (c == cells)
            break;
    }
    return std::min(1.0, tail);
}

// -- Poisson last passage ---------------------------------------------------

struct PointCloud {
    std::vector<PlanarPoint> points;
    double intensity = 1.0;
    std::uint64_t seed = 0;
    PlanarPoint lo{0.0, 0.0};
    PlanarPoint hi{0.0, 0.0};
};

//! Poisson process of the given intensity on the rectangle [lo, hi]: a-coordinates
//! are the arrival times of a rate intensity*(hi.b - lo.b) process, b is uniform.
inline PointCloud sample_point_cloud(PlanarPoint lo, PlanarPoint hi, double intensity, std::uint64_t seed) {
    if (!(hi.a > lo.a && hi.b > lo.b))
        throw DomainError("point cloud: empty rectangle");
    if (!(intensity > 0.0))
        throw DomainError("point cloud: intensity must be positive");
    PointCloud cloud{{}, intensity, seed, lo, hi};
    Engine eng = make_engine(seed, 0);
    const double height = hi.b - lo.b;
    const double line_rate = intensity * height;
    double a = lo.a;
    for (;;) {
        a += -std::log1p(-uniform01(eng)) / line_rate;
        if (a > hi.a)
            break;
        cloud.points.push_back({a, lo.b + height * uniform01(eng)});
    }
    return cloud;
}

//! Longest chain of cloud points in the coordinatewise order inside [u, v],
//! by patience sorting on b after sorting by (a, b). O(k log k).
inline long poisson_passage(const PointCloud& cloud, PlanarPoint u, PlanarPoint v) {
    if (!(u.a <= v.a && u.b <= v.b))
        return 0;
    std::vector<PlanarPoint> pts;
    for (const auto& p : cloud.points)
        if (p.a >= u.a && p.a <= v.a && p.b >= u.b && p.b <= v.b)
            pts.push_back(p);
    std::sort(pts.begin(), pts.end(), [](const PlanarPoint& l, const PlanarPoint& r) {
        return l.a < r.a || (l.a == r.a && l.b < r.b);
    });
    std::vector<double> tails; // tails[k]: smallest last b of a chain of length k+1
    for (const auto& p : pts) {
        auto it = std::upper_bound(tails.begin(), tails.end(), p.b);
        if (it == tails.end())
            tails.push_back(p.b);
        else
            *it = p.b;
    }
    return static_cast<long>(tails.size());
}

// -- Directed polymer ------------------------------------------------------

namespace detail {

inline double log_add(double x, double y) noexcept {
    if (x == -kInf)
        return y;
    if (y == -kInf)
        return x;
    const double m = std::max(x, y);
    return m + std::log1p(std::exp(-std::abs(x - y)));
}

//! log Z from u to every vertex of the rectangle [u, v] (row-major, relative).
inline std::vector<double> polymer_forward(const LatticeWeights& w, Vertex u, Vertex v, double beta) {
    const long rows = v.i - u.i + 1;
    const long cols = v.j - u.j + 1;
    std::vector<double> z(static_cast<std::size_t>(rows * cols), -kInf);
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) {
            double acc = (i == 0 && j == 0) ? 0.0 : -kInf;
            if (i > 0)
                acc = log_add(acc, z[(i - 1) * cols + j]);
            if (j > 0)
                acc = log_add(acc, z[i * cols + j - 1]);
            z[i * cols + j] = acc + beta * w(u.i + i, u.j + j);
        }
    return z;
}

//! log Z from every vertex of [u, v] to v.
inline std::vector<double> polymer_backward(const LatticeWeights& w, Vertex u, Vertex v, double beta) {
    const long rows = v.i - u.i + 1;
    const long cols = v.j - u.j + 1;
    std::vector<double> z(static_cast<std::size_t>(rows * cols), -kInf);
    for (long i = rows - 1; i >= 0; --i)
        for (long j = cols - 1; j >= 0; --j) {
            double acc = (i == rows - 1 && j == cols - 1) ? 0.0 : -kInf;
            if (i + 1 < rows)
                acc = log_add(acc, z[(i + 1) * cols + j]);
            if (j + 1 < cols)
                acc = log_add(acc, z[i * cols + j + 1]);
            z[i * cols + j] = acc + beta * w(u.i + i, u.j + j);
        }
    return z;
}

} // namespace detail

//! log of the sum over upright paths u -> v of exp(beta * path weight).
inline double polymer_log_partition(const LatticeWeights& w, Vertex u, Vertex v, double beta = 1.0) {
    if (!vertex_leq(u, v))
        throw DomainError("polymer_log_partition: endpoints are not ordered");
    detail::check_in_lattice(w, u);
    detail::check_in_lattice(w, v);
    const auto z = detail::polymer_forward(w, u, v, beta);
    return z.back();
}

//! Decomposition of log Z(u, v) across the anti-diagonal at rotated time
//! `slice` (u's time <= slice < v's time): every path crosses it at exactly one
//! vertex z and continues to z + e1 or z + e2.
struct PolymerSplit {
    double log_partition;  //!< log Z(u, v)
    double max_split;      //!< max_z log Z(u, z) + log Z(z+, v)
    long candidates;       //!< number of crossing vertices z
};

inline PolymerSplit polymer_split(const LatticeWeights& w, Vertex u, Vertex v, long slice, double beta = 1.0) {
    if (!vertex_leq(u, v))
        throw DomainError("polymer_split: endpoints are not ordered");
    if (slice < u.i + u.j || slice >= v.i + v.j)
        throw DomainError("polymer_split: slice must lie in [start time, end time)");
    detail::check_in_lattice(w, u);
    detail::check_in_lattice(w, v);
    const long cols = v.j - u.j + 1;
    const auto fwd = detail::polymer_forward(w, u, v, beta);
    const auto bwd = detail::polymer_backward(w, u, v, beta);
    PolymerSplit out{fwd.back(), -kInf, 0};
    for (long i = u.i; i <= v.i; ++i) {
        const long j = slice - i;
        if (j < u.j || j > v.j)
            continue;
        const long ri = i - u.i;
        const long rj = j - u.j;
        double plus = -kInf;
        if (i + 1 <= v.i)
            plus = detail::log_add(plus, bwd[(ri + 1) * cols + rj]);
        if (j + 1 <= v.j)
            plus = detail::log_add(plus, bwd[ri * cols + rj + 1]);
        out.max_split = std::max(out.max_split, fwd[ri * cols + rj] + plus);
        ++out.candidates;
    }
    return out;
}

} // namespace lpp
