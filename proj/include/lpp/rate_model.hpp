#pragma once

// Rate model of one weight distribution: shape function F, point-to-point
// upper-tail rate J and the Cramer rate I_c.
//
// F and J are held as sampled grids. On construction the grids are repaired
// so the structural properties hold exactly on the grid: F symmetric,
// concave and equal to the mean at the boundary directions; J zero below F,
// equal to I_c at |gamma| = 1, and convex along every grid line (rows,
// columns and, on uniform grids, both diagonals).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lpp/error.hpp"
#include "lpp/geometry.hpp"
#include "lpp/weights.hpp"

namespace lpp {

//! Samples F(gamma_k) on an increasing grid spanning [-1, 1].
struct ShapeTable {
    std::vector<double> gammas;
    std::vector<double> values;
};

//! Samples J(gamma_i, x_j) with values[i][j]; gammas span [-1, 1], xs start at 0.
struct RateTable {
    std::vector<double> gammas;
    std::vector<double> xs;
    std::vector<std::vector<double>> values;
};

//! Where a grid came from.
struct Provenance {
    std::string shape = "supplied";  //!< "supplied" or "estimated"
    std::string rate = "supplied";
};

inline std::vector<double> uniform_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo))
        throw DomainError("uniform_grid: need step > 0 and hi >= lo");
    const auto count = static_cast<long>(std::llround((hi - lo) / step));
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(count + 1));
    for (long k = 0; k <= count; ++k)
        g.push_back(k == count ? hi : lo + static_cast<double>(k) * step);
    return g;
}

inline ShapeTable tabulate_shape(const std::function<double(double)>& f, double step = 0.05) {
    ShapeTable t;
    t.gammas = uniform_grid(-1.0, 1.0, step);
    for (double g : t.gammas)
        t.values.push_back(f(g));
    return t;
}

inline RateTable tabulate_rate(const std::function<double(double, double)>& j, double x_max,
                               double gamma_step = 0.05, double x_step = 0.05) {
    RateTable t;
    t.gammas = uniform_grid(-1.0, 1.0, gamma_step);
    t.xs = uniform_grid(0.0, x_max, x_step);
    for (double g : t.gammas) {
        std::vector<double> row;
        for (double x : t.xs)
            row.push_back(j(g, x));
        t.values.push_back(std::move(row));
    }
    return t;
}

namespace detail {

inline bool is_uniform(const std::vector<double>& g) {
    if (g.size() < 3)
        return true;
    const double h = (g.back() - g.front()) / static_cast<double>(g.size() - 1);
    for (std::size_t k = 0; k < g.size(); ++k)
        if (std::abs(g[k] - (g.front() + static_cast<double>(k) * h)) > 1e-9 * std::max(1.0, std::abs(h)))
            return false;
    return true;
}

inline bool is_symmetric(const std::vector<double>& g) {
    for (std::size_t k = 0; k < g.size(); ++k)
        if (std::abs(g[k] + g[g.size() - 1 - k]) > 1e-9)
            return false;
    return true;
}

inline void check_grid(const std::vector<double>& g, const char* what) {
    if (g.size() < 2)
        throw ConfigError(std::string(what) + ": grid needs at least two points");
    for (std::size_t k = 1; k < g.size(); ++k)
        if (!(g[k] > g[k - 1]))
            throw ConfigError(std::string(what) + ": grid must be strictly increasing");
}

//! Bracketing cell k with g[k] <= v <= g[k+1] and the weight of g[k+1].
inline std::pair<std::size_t, double> locate(const std::vector<double>& g, double v) {
    if (v <= g.front())
        return {0, 0.0};
    if (v >= g.back())
        return {g.size() - 2, 1.0};
    const auto it = std::upper_bound(g.begin(), g.end(), v);
    const auto k = static_cast<std::size_t>(it - g.begin()) - 1;
    return {k, (v - g[k]) / (g[k + 1] - g[k])};
}

//! Greatest convex minorant of points (s_k, v_k), evaluated at the s_k.
inline std::vector<double> convex_minorant(const std::vector<double>& s, const std::vector<double>& v) {
    std::vector<std::size_t> hull;
    for (std::size_t k = 0; k < s.size(); ++k) {
        while (hull.size() >= 2) {
            const std::size_t a = hull[hull.size() - 2];
            const std::size_t b = hull.back();
            // drop b if it lies on or above the chord a -> k
            const double lhs = (v[b] - v[a]) * (s[k] - s[a]);
            const double rhs = (v[k] - v[a]) * (s[b] - s[a]);
            if (lhs >= rhs)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(k);
    }
    std::vector<double> out(s.size());
    std::size_t h = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        while (h + 1 < hull.size() && s[hull[h + 1]] < s[k])
            ++h;
        if (h + 1 >= hull.size() || s[hull[h]] == s[k]) {
            out[k] = v[hull[h]];
        } else {
            const std::size_t a = hull[h];
            const std::size_t b = hull[h + 1];
            out[k] = v[a] + (v[b] - v[a]) * (s[k] - s[a]) / (s[b] - s[a]);
        }
    }
    return out;
}

//! Weighted isotonic regression onto nonincreasing sequences (pool adjacent violators).
inline std::vector<double> decreasing_isotonic(const std::vector<double>& y, const std::vector<double>& w) {
    struct Block {
        double mean;
        double weight;
        std::size_t count;
    };
    std::vector<Block> blocks;
    for (std::size_t k = 0; k < y.size(); ++k) {
        blocks.push_back({y[k], w[k], 1});
        while (blocks.size() >= 2 && blocks[blocks.size() - 2].mean < blocks.back().mean) {
            Block b = blocks.back();
            blocks.pop_back();
            Block& a = blocks.back();
            const double tw = a.weight + b.weight;
            a.mean = (a.mean * a.weight + b.mean * b.weight) / tw;
            a.weight = tw;
            a.count += b.count;
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (const auto& b : blocks)
        out.insert(out.end(), b.count, b.mean);
    return out;
}

} // namespace detail

class RateModel {
public:
    RateModel(WeightDistribution dist, ShapeTable shape, RateTable rate, Provenance provenance = {})
        : dist_(std::move(dist)), shape_(std::move(shape)), rate_(std::move(rate)), provenance_(std::move(provenance)) {
        validate();
        repair_shape();
        repair_rate();
        build_vertices();
    }

    const WeightDistribution& distribution() const noexcept { return dist_; }
    const ShapeTable& shape_table() const noexcept { return shape_; }
    const RateTable& rate_table() const noexcept { return rate_; }
    const Provenance& provenance() const noexcept { return provenance_; }
    double x_cap() const noexcept { return rate_.xs.back(); }

    //! Shape function, linear between grid points.
    double F(double gamma) const {
        if (!(std::abs(gamma) <= 1.0 + 1e-12))
            throw DomainError("F: |gamma| must be at most 1");
        gamma = std::clamp(gamma, -1.0, 1.0);
        const auto [k, s] = detail::locate(shape_.gammas, gamma);
        return shape_.values[k] + s * (shape_.values[k + 1] - shape_.values[k]);
    }

    //! Upper-tail rate: zero at or below F, I_c on |gamma| = 1, +inf beyond
    //! the x cap. Rows are linear in x through the anchor (F(gamma_i), 0) and
    //! the grid samples above it. Between rows J is the convex hull of the two
    //! neighbouring rows, shifted so that its zero set ends exactly at F; this
    //! keeps J jointly convex and continuous across F.
    double J(double gamma, double x) const {
        if (!(std::abs(gamma) <= 1.0 + 1e-12))
            throw DomainError("J: |gamma| must be at most 1");
        gamma = std::clamp(gamma, -1.0, 1.0);
        const double f = F(gamma);
        if (x <= f)
            return 0.0;
        if (std::abs(gamma) == 1.0)
            return Ic(x);
        const auto [i, a] = detail::locate(rate_.gammas, gamma);
        if (a == 0.0)
            return row_value(i, x);
        if (a == 1.0)
            return row_value(i + 1, x);
        const double chord = (1.0 - a) * row_zero_[i] + a * row_zero_[i + 1];
        return hull_value(i, a, x - (f - chord));
    }

    //! True when J(gamma, x) is +inf only because x exceeds the grid cap.
    bool j_capped(double gamma, double x) const {
        return std::abs(gamma) < 1.0 && J(gamma, x) == kInf;
    }

    double Ic(double x) const { return cramer_rate(dist_, x); }

    //! d(u) = t F(x / t) for the displacement x and duration t of u; 0 when
    //! u is not ordered.
    double d(const OrderedPair& u) const {
        const double dt = u.duration();
        const double dx = u.displacement();
        if (dt <= 0.0 || std::abs(dx) > dt * (1.0 + 1e-12))
            return 0.0;
        return dt * F(std::clamp(dx / dt, -1.0, 1.0));
    }

    //! Perspective form J(displacement / t, value / t) t of a pair with duration t > 0.
    double theta_point(double value, const OrderedPair& u) const {
        const double dt = u.duration();
        if (!(dt > 0.0))
            throw DomainError("theta_point: the pair must have positive duration");
        const double m = u.displacement() / dt;
        if (std::abs(m) > 1.0 + 1e-12)
            throw DomainError("theta_point: the pair is not ordered");
        const double r = J(std::clamp(m, -1.0, 1.0), value / dt);
        return r == kInf ? kInf : r * dt;
    }

private:
    //! Row i at x, linear between the anchor (F(gamma_i), 0) and grid samples.
    double row_value(std::size_t i, double x) const {
        const double f = row_zero_[i];
        if (x <= f)
            return 0.0;
        if (x > x_cap())
            return kInf;
        const auto& X = rate_.xs;
        const auto& V = rate_.values[i];
        const auto [j, b] = detail::locate(X, x);
        (void)b;
        const double left_x = std::max(X[j], f);
        const double left_v = X[j] <= f ? 0.0 : V[j];
        if (X[j + 1] <= left_x)
            return V[j + 1];
        return left_v + (x - left_x) / (X[j + 1] - left_x) * (V[j + 1] - left_v);
    }

    //! Lower convex hull of rows i and i + 1 at weight a on row i + 1: the
    //! edges of both rows, scaled by their weights, merged by slope.
    double hull_value(std::size_t i, double a, double x) const {
        const auto& X0 = vx_[i];
        const auto& V0 = vv_[i];
        const auto& X1 = vx_[i + 1];
        const auto& V1 = vv_[i + 1];
        double remaining = x - ((1.0 - a) * X0[0] + a * X1[0]);
        const double eps = 1e-14 * std::max(1.0, std::abs(x));
        std::size_t p = 0, q = 0;
        double total = 0.0;
        while (remaining > eps) {
            const bool more0 = p + 1 < X0.size();
            const bool more1 = q + 1 < X1.size();
            if (!more0 && !more1)
                return kInf;
            const double s0 = more0 ? (V0[p + 1] - V0[p]) / (X0[p + 1] - X0[p]) : kInf;
            const double s1 = more1 ? (V1[q + 1] - V1[q]) / (X1[q + 1] - X1[q]) : kInf;
            double len, slope;
            if (s0 <= s1) {
                len = (1.0 - a) * (X0[p + 1] - X0[p]);
                slope = s0;
                ++p;
            } else {
                len = a * (X1[q + 1] - X1[q]);
                slope = s1;
                ++q;
            }
            const double take = std::min(len, remaining);
            total += slope * take;
            remaining -= take;
        }
        return total;
    }

    void build_vertices() {
        vx_.assign(rate_.gammas.size(), {});
        vv_.assign(rate_.gammas.size(), {});
        for (std::size_t i = 0; i < rate_.gammas.size(); ++i) {
            vx_[i].push_back(row_zero_[i]);
            vv_[i].push_back(0.0);
            for (std::size_t j = 0; j < rate_.xs.size(); ++j)
                if (rate_.xs[j] > row_zero_[i]) {
                    vx_[i].push_back(rate_.xs[j]);
                    vv_[i].push_back(rate_.values[i][j]);
                }
        }
    }

    void validate() const {
        detail::check_grid(shape_.gammas, "shape table");
        detail::check_grid(rate_.gammas, "rate table gammas");
        detail::check_grid(rate_.xs, "rate table xs");
        if (shape_.values.size() != shape_.gammas.size())
            throw ConfigError("shape table: value count does not match the grid");
        if (std::abs(shape_.gammas.front() + 1.0) > 1e-12 || std::abs(shape_.gammas.back() - 1.0) > 1e-12)
            throw ConfigError("shape table: grid must span [-1, 1]");
        if (std::abs(rate_.gammas.front() + 1.0) > 1e-12 || std::abs(rate_.gammas.back() - 1.0) > 1e-12)
            throw ConfigError("rate table: gamma grid must span [-1, 1]");
        if (rate_.xs.front() != 0.0)
            throw ConfigError("rate table: x grid must start at 0");
        if (rate_.values.size() != rate_.gammas.size())
            throw ConfigError("rate table: row count does not match the gamma grid");
        for (const auto& row : rate_.values) {
            if (row.size() != rate_.xs.size())
                throw ConfigError("rate table: column count does not match the x grid");
            for (double v : row)
                if (!std::isfinite(v) || v < 0.0)
                    throw ConfigError("rate table: values must be finite and non-negative");
        }
        for (double v : shape_.values)
            if (!std::isfinite(v) || v < 0.0)
                throw ConfigError("shape table: values must be finite and non-negative");
    }

    void repair_shape() {
        auto& g = shape_.gammas;
        auto& f = shape_.values;
        const std::size_t n = g.size();
        if (detail::is_symmetric(g)) {
            for (std::size_t k = 0; k < n / 2; ++k) {
                const double avg = 0.5 * (f[k] + f[n - 1 - k]);
                f[k] = f[n - 1 - k] = avg;
            }
        }
        const double mu = dist_.mean();
        f.front() = f.back() = mu;
        std::vector<double> slopes(n - 1), widths(n - 1);
        for (std::size_t k = 0; k + 1 < n; ++k) {
            widths[k] = g[k + 1] - g[k];
            slopes[k] = (f[k + 1] - f[k]) / widths[k];
        }
        slopes = detail::decreasing_isotonic(slopes, widths);
        for (std::size_t k = 0; k + 1 < n; ++k)
            f[k + 1] = f[k] + slopes[k] * widths[k];
        f.back() = mu; // absorbs rounding of the pooled slopes
    }

    void repair_rate() {
        auto& G = rate_.gammas;
        auto& X = rate_.xs;
        auto& V = rate_.values;
        const std::size_t ng = G.size();
        const std::size_t nx = X.size();
        row_zero_.clear();
        for (double g : G)
            row_zero_.push_back(F(g));
        if (detail::is_symmetric(G)) {
            for (std::size_t i = 0; i < ng / 2; ++i)
                for (std::size_t j = 0; j < nx; ++j) {
                    const double avg = 0.5 * (V[i][j] + V[ng - 1 - i][j]);
                    V[i][j] = V[ng - 1 - i][j] = avg;
                }
        }
        for (std::size_t i = 0; i < ng; ++i) {
            const bool boundary = i == 0 || i + 1 == ng;
            const double f = row_zero_[i];
            for (std::size_t j = 0; j < nx; ++j) {
                if (boundary)
                    V[i][j] = X[j] <= f ? 0.0 : Ic(X[j]);
                else if (X[j] <= f)
                    V[i][j] = 0.0;
            }
        }
        // Minorant passes only ever lower values, never below zero, and keep
        // the end points of every line, so the boundary rows and the zero
        // region survive. Iterating converges to the largest grid function
        // below the input that is convex along all passes.
        const bool diagonals = detail::is_uniform(G) && detail::is_uniform(X);
        std::vector<double> s, v;
        auto pass = [&](std::size_t i0, std::size_t j0, long di, long dj) -> double {
            s.clear();
            v.clear();
            std::vector<std::pair<std::size_t, std::size_t>> cells;
            long i = static_cast<long>(i0);
            long j = static_cast<long>(j0);
            while (i >= 0 && j >= 0 && i < static_cast<long>(ng) && j < static_cast<long>(nx)) {
                cells.emplace_back(i, j);
                s.push_back(static_cast<double>(cells.size() - 1));
                v.push_back(V[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
                i += di;
                j += dj;
            }
            if (cells.size() < 3)
                return 0.0;
            if (di == 0) {
                // Rows carry the anchor (F(gamma_i), 0) so that the row
                // interpolant used by J() is convex as well.
                for (std::size_t k = 0; k < cells.size(); ++k)
                    s[k] = X[cells[k].second];
                const double f = row_zero_[i0];
                const auto pos = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), f) - s.begin());
                if (pos > 0 && s[pos - 1] == f) {
                    v[pos - 1] = 0.0;
                } else {
                    s.insert(s.begin() + static_cast<long>(pos), f);
                    v.insert(v.begin() + static_cast<long>(pos), 0.0);
                    const auto m = detail::convex_minorant(s, v);
                    double change = 0.0;
                    for (std::size_t k = 0, c = 0; k < s.size(); ++k) {
                        if (k == pos)
                            continue;
                        change = std::max(change, v[k] - m[k]);
                        V[cells[c].first][cells[c].second] = std::max(0.0, m[k]);
                        ++c;
                    }
                    return change;
                }
            } else if (dj == 0) {
                for (std::size_t k = 0; k < cells.size(); ++k)
                    s[k] = G[cells[k].first];
            }
            const auto m = detail::convex_minorant(s, v);
            double change = 0.0;
            for (std::size_t k = 0; k < cells.size(); ++k) {
                change = std::max(change, v[k] - m[k]);
                V[cells[k].first][cells[k].second] = std::max(0.0, m[k]);
            }
            return change;
        };
        for (int sweep = 0; sweep < 500; ++sweep) {
            double change = 0.0;
            for (std::size_t j = 0; j < nx; ++j)
                change = std::max(change, pass(0, j, 1, 0));
            if (diagonals) {
                for (std::size_t j = 0; j < nx; ++j) {
                    change = std::max(change, pass(0, j, 1, 1));
                    change = std::max(change, pass(0, j, 1, -1));
                }
                for (std::size_t i = 1; i < ng; ++i) {
                    change = std::max(change, pass(i, 0, 1, 1));
                    change = std::max(change, pass(i, nx - 1, 1, -1));
                }
            }
            for (std::size_t i = 0; i < ng; ++i)
                change = std::max(change, pass(i, 0, 0, 1));
            if (change <= 1e-13)
                break;
        }
    }

    WeightDistribution dist_;
    ShapeTable shape_;
    RateTable rate_;
    Provenance provenance_;
    std::vector<double> row_zero_; // F at each rate-table gamma
    std::vector<std::vector<double>> vx_, vv_; // row vertices from the anchor up
};

} // namespace lpp
