#pragma once

// Monte Carlo estimation of passage-time tail probabilities.
//
// Upper tails log P(T_n >= x n) are estimated by counting hits or by
// importance sampling under an exponentially tilted law, reweighting each
// replica by its exact likelihood ratio. Two tilted laws are provided:
//
//   path      Pick an upright path uniformly at random and tilt the weights
//             on it. The proposal is a uniform mixture of per-path tilts, so
//             the likelihood ratio is binom(n, rows-1) e^{(n+1) Lambda(theta)}
//             divided by the polymer partition function at inverse
//             temperature theta, computed alongside the passage time.
//   corridor  Tilt every weight within kappa n of the straight line.
//
// Lower tails are estimated naively. Each replica draws from its own
// counter-derived substream and results are reduced in replica order, so
// estimates are bit-identical for any thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lpp/error.hpp"
#include "lpp/parallel.hpp"
#include "lpp/passage.hpp"
#include "lpp/rng.hpp"
#include "lpp/weights.hpp"

namespace lpp {

enum class TailMethod { naive, tilt, corridor };

inline std::string to_string(TailMethod m) {
    switch (m) {
    case TailMethod::naive: return "naive";
    case TailMethod::tilt: return "tilt";
    case TailMethod::corridor: return "corridor";
    }
    return "?";
}

inline TailMethod parse_tail_method(const std::string& s) {
    if (s == "naive")
        return TailMethod::naive;
    if (s == "tilt")
        return TailMethod::tilt;
    if (s == "corridor")
        return TailMethod::corridor;
    throw ConfigError("unknown tail method '" + s + "' (expected naive, tilt or corridor)");
}

struct TailEstimate {
    long n = 0;
    double threshold = 0.0;   //!< event threshold in rescaled units (x)
    double log_prob = 0.0;
    double std_error = 0.0;   //!< standard error of log_prob
    std::int64_t hits = 0;
    std::int64_t reps = 0;
    std::string method;
    std::uint64_t seed = 0;
    bool zero_hits = false;   //!< log_prob is a one-sided 95% upper bound
    bool degenerate = false;  //!< event decided without sampling
};

//! Lattice rectangle of T_n((0,0), (gamma, 1)): corners (0,0) and
//! (floor(n (1 - gamma) / 2), floor(n (1 + gamma) / 2)).
struct DirectionLattice {
    long rows;
    long cols;
};

inline DirectionLattice direction_lattice(long n, double gamma) {
    if (n < 1)
        throw DomainError("direction lattice: n must be at least 1");
    if (!(std::abs(gamma) <= 1.0))
        throw DomainError("direction lattice: |gamma| must be at most 1");
    const OrderedPair u{{0.0, 0.0}, {gamma, 1.0}};
    const LatticeCorners c = lattice_corners(static_cast<double>(n), u);
    return {c.end.i + 1, c.end.j + 1};
}

namespace detail {

//! One-sided 95% Clopper-Pearson upper bound on p after zero hits in `reps` trials.
inline double zero_hit_upper_bound(std::int64_t reps) {
    return -std::expm1(std::log(0.05) / static_cast<double>(reps));
}

inline TailEstimate count_estimate(long n, double x, std::int64_t hits, std::int64_t reps,
                                   const std::string& method, std::uint64_t seed) {
    TailEstimate e{n, x, 0.0, 0.0, hits, reps, method, seed, false, false};
    if (hits == 0) {
        e.zero_hits = true;
        e.log_prob = std::log(zero_hit_upper_bound(reps));
        e.std_error = kInf;
        return e;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(reps);
    e.log_prob = std::log(p);
    e.std_error = std::sqrt((1.0 - p) / static_cast<double>(hits));
    return e;
}

//! Reduces per-replica log likelihood ratios (-inf for misses).
inline TailEstimate weighted_estimate(long n, double x, std::span<const double> log_weight,
                                      std::span<const std::uint8_t> hit, const std::string& method,
                                      std::uint64_t seed) {
    const auto reps = static_cast<std::int64_t>(log_weight.size());
    TailEstimate e{n, x, 0.0, 0.0, 0, reps, method, seed, false, false};
    for (auto h : hit)
        e.hits += h;
    if (e.hits == 0) {
        // Nothing certifiable from the tilted law; P <= 1 is the honest bound.
        e.zero_hits = true;
        e.log_prob = 0.0;
        e.std_error = kInf;
        return e;
    }
    std::vector<double> twice(log_weight.size());
    for (std::size_t r = 0; r < log_weight.size(); ++r)
        twice[r] = 2.0 * log_weight[r];
    const double log_reps = std::log(static_cast<double>(reps));
    const double log_mean = log_sum_exp(log_weight) - log_reps;
    const double log_second = log_sum_exp(twice) - log_reps;
    // Relative variance of one replica, E[L^2] / E[L]^2 - 1; delta method for the log.
    const double rel_var = std::max(0.0, std::expm1(log_second - 2.0 * log_mean));
    e.log_prob = std::min(0.0, log_mean);
    e.std_error = std::sqrt(rel_var / static_cast<double>(reps));
    return e;
}

} // namespace detail

//! Tilted-estimator knobs. They only affect variance, never the mean.
struct TiltOptions {
    //! Tilt parameter. Default: for `tilt`, the tilted mean equals x (clamped
    //! into the support); for `corridor`, the tilted mean equals
    //! x n / |corridor| when that exceeds the mean, else no tilt.
    std::optional<double> theta;
    double corridor_half_width = 0.25;  //!< kappa, `corridor` only
};

//! Corridor membership per site, row-major over the direction lattice.
inline std::vector<std::uint8_t> tilt_corridor(DirectionLattice lat, double kappa, long n) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(lat.rows * lat.cols), 0);
    const double end_x = static_cast<double>((lat.cols - 1) - (lat.rows - 1));
    const double end_t = static_cast<double>((lat.cols - 1) + (lat.rows - 1));
    const double slope = end_t > 0 ? end_x / end_t : 0.0;
    const double half = kappa * static_cast<double>(n);
    for (long i = 0; i < lat.rows; ++i)
        for (long j = 0; j < lat.cols; ++j) {
            const double x = static_cast<double>(j - i);
            const double t = static_cast<double>(j + i);
            mask[static_cast<std::size_t>(i * lat.cols + j)] = std::abs(x - slope * t) <= half ? 1 : 0;
        }
    return mask;
}

//! Tilt parameter whose tilted mean is `target` (bisection on the
//! increasing map theta -> tilted mean).
inline double solve_tilt(const WeightDistribution& dist, double target) {
    const double mu = dist.mean();
    if (target == mu)
        return 0.0;
    if (target >= dist.max_support() || target <= dist.min_support())
        throw DomainError("solve_tilt: target mean outside the support");
    double lo = 0.0;
    double hi = 0.0;
    const double ab = dist.mgf_abscissa();
    if (target > mu) {
        hi = std::isfinite(ab) ? ab * (1.0 - 1e-12) : 1.0;
        while (!std::isfinite(ab) && dist.tilted_mean(hi) < target)
            hi *= 2.0;
    } else {
        lo = -1.0;
        while (dist.tilted_mean(lo) > target)
            lo *= 2.0;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (dist.tilted_mean(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace detail {

//! Tilt with tilted mean `target`, or 0 if target does not exceed the mean.
//! Targets past the support are pulled halfway between mean and maximum.
inline double upward_tilt(const WeightDistribution& dist, double target) {
    const double mu = dist.mean();
    if (!(target > mu))
        return 0.0;
    if (target >= dist.max_support())
        target = 0.5 * (mu + dist.max_support());
    return solve_tilt(dist, target);
}

//! Per-row column range [first, last] of a uniformly random upright path
//! from (0,0) to (rows-1, cols-1). Steps are drawn sequentially: down with
//! probability (remaining downs) / (remaining steps).
inline void random_path_rows(Engine& eng, long rows, long cols, std::vector<long>& first, std::vector<long>& last) {
    first.assign(static_cast<std::size_t>(rows), 0);
    last.assign(static_cast<std::size_t>(rows), 0);
    long downs = rows - 1;
    long rights = cols - 1;
    long i = 0;
    long j = 0;
    while (downs + rights > 0) {
        const double u = uniform01(eng);
        if (u * static_cast<double>(downs + rights) < static_cast<double>(downs)) {
            last[static_cast<std::size_t>(i)] = j;
            ++i;
            --downs;
            first[static_cast<std::size_t>(i)] = j;
        } else {
            ++j;
            --rights;
        }
    }
    last[static_cast<std::size_t>(i)] = j;
}

inline double log_binomial(long total, long k) {
    return std::lgamma(static_cast<double>(total) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(total - k) + 1.0);
}

} // namespace detail

//! Estimate of log P(T_n((0,0), (gamma, 1)) >= x n).
inline TailEstimate upper_tail(const WeightDistribution& dist, long n, double gamma, double x,
                               std::int64_t reps, TailMethod method, std::uint64_t seed,
                               const TiltOptions& tilt = {}, unsigned threads = default_threads()) {
    if (!(std::abs(gamma) <= 1.0))
        throw DomainError("upper_tail: |gamma| must be at most 1");
    if (reps < 1)
        throw DomainError("upper_tail: reps must be positive");
    const std::string tag = to_string(method);
    if (x <= 0.0)
        return {n, x, 0.0, 0.0, reps, reps, tag, seed, false, true};

    const DirectionLattice lat = direction_lattice(n, gamma);
    const double level = x * static_cast<double>(n);
    std::vector<std::uint8_t> hit(static_cast<std::size_t>(reps), 0);

    if (method == TailMethod::naive) {
        for_each_replica(reps, threads, [&](std::int64_t r) {
            Engine eng = make_engine(seed, static_cast<std::uint64_t>(r));
            const double T = passage_time_streamed(lat.rows, lat.cols, [&](long, std::span<double> row) {
                for (auto& v : row)
                    v = dist.sample(eng);
            });
            hit[static_cast<std::size_t>(r)] = T >= level ? 1 : 0;
        });
        std::int64_t hits = 0;
        for (auto h : hit)
            hits += h;
        return detail::count_estimate(n, x, hits, reps, tag, seed);
    }

    std::vector<double> log_weight(static_cast<std::size_t>(reps), -kInf);

    if (method == TailMethod::tilt) {
        const double theta = tilt.theta ? *tilt.theta : detail::upward_tilt(dist, x);
        const double lambda = dist.log_mgf(theta); // throws past the abscissa
        const WeightDistribution tilted = dist.tilted(theta);
        const long sites = lat.rows + lat.cols - 1;
        const double log_norm =
            detail::log_binomial(sites - 1, lat.rows - 1) + static_cast<double>(sites) * lambda;
        for_each_replica(reps, threads, [&](std::int64_t r) {
            Engine eng = make_engine(seed, static_cast<std::uint64_t>(r));
            std::vector<long> first, last;
            detail::random_path_rows(eng, lat.rows, lat.cols, first, last);
            // log sum over paths of exp(theta * path weight), row by row
            std::vector<double> logz(static_cast<std::size_t>(lat.cols), -kInf);
            const double T = passage_time_streamed(lat.rows, lat.cols, [&](long i, std::span<double> row) {
                const auto ui = static_cast<std::size_t>(i);
                for (long c = 0; c < lat.cols; ++c)
                    row[static_cast<std::size_t>(c)] =
                        (c >= first[ui] && c <= last[ui]) ? tilted.sample(eng) : dist.sample(eng);
                for (long c = 0; c < lat.cols; ++c) {
                    const auto uc = static_cast<std::size_t>(c);
                    double in = (i == 0 && c == 0) ? 0.0 : logz[uc];
                    if (c > 0)
                        in = detail::log_add(in, logz[uc - 1]);
                    logz[uc] = in + theta * row[uc];
                }
            });
            if (T >= level) {
                hit[static_cast<std::size_t>(r)] = 1;
                log_weight[static_cast<std::size_t>(r)] = log_norm - logz.back();
            }
        });
        return detail::weighted_estimate(n, x, log_weight, hit, tag, seed);
    }

    // Corridor tilt.
    const auto mask = tilt_corridor(lat, tilt.corridor_half_width, n);
    std::int64_t corridor_sites = 0;
    for (auto m : mask)
        corridor_sites += m;
    const double theta = tilt.theta ? *tilt.theta
                         : corridor_sites > 0
                             ? detail::upward_tilt(dist, level / static_cast<double>(corridor_sites))
                             : 0.0;
    const double lambda = dist.log_mgf(theta);
    const WeightDistribution tilted = dist.tilted(theta);
    for_each_replica(reps, threads, [&](std::int64_t r) {
        Engine eng = make_engine(seed, static_cast<std::uint64_t>(r));
        KahanSum corridor_sum;
        const double T = passage_time_streamed(lat.rows, lat.cols, [&](long i, std::span<double> row) {
            const std::uint8_t* m = mask.data() + i * lat.cols;
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (m[c]) {
                    row[c] = tilted.sample(eng);
                    corridor_sum.add(row[c]);
                } else {
                    row[c] = dist.sample(eng);
                }
            }
        });
        if (T >= level) {
            hit[static_cast<std::size_t>(r)] = 1;
            log_weight[static_cast<std::size_t>(r)] =
                -theta * corridor_sum.sum + static_cast<double>(corridor_sites) * lambda;
        }
    });
    return detail::weighted_estimate(n, x, log_weight, hit, tag, seed);
}

//! Naive estimate of log P(T_n((0,0), (gamma, 1)) <= (shape - x) n), with
//! `shape` the value F(gamma) of the shape function.
inline TailEstimate lower_tail(const WeightDistribution& dist, long n, double gamma, double x,
                               std::int64_t reps, std::uint64_t seed, double shape,
                               unsigned threads = default_threads()) {
    if (reps < 1)
        throw DomainError("lower_tail: reps must be positive");
    const double level = (shape - x) * static_cast<double>(n);
    if (level < 0.0) {
        // Passage times are non-negative, the event is empty.
        return {n, x, -kInf, 0.0, 0, reps, "naive", seed, false, true};
    }
    const DirectionLattice lat = direction_lattice(n, gamma);
    std::vector<std::uint8_t> hit(static_cast<std::size_t>(reps), 0);
    for_each_replica(reps, threads, [&](std::int64_t r) {
        Engine eng = make_engine(seed, static_cast<std::uint64_t>(r));
        const double T = passage_time_streamed(lat.rows, lat.cols, [&](long, std::span<double> row) {
            for (auto& v : row)
                v = dist.sample(eng);
        });
        hit[static_cast<std::size_t>(r)] = T <= level ? 1 : 0;
    });
    std::int64_t hits = 0;
    for (auto h : hit)
        hits += h;
    return detail::count_estimate(n, x, hits, reps, "naive", seed);
}

// -- slope fitting -----------------------------------------------------------

struct SlopeFit {
    double rate = 0.0;       //!< slope r of -log P = a + r n
    double std_error = 0.0;
    double intercept = 0.0;
    std::size_t points = 0;
};

//! Weighted least squares of -log_prob on n (weights 1 / se^2). Estimates
//! flagged zero_hits or degenerate are skipped.
inline SlopeFit slope_fit(std::span<const TailEstimate> estimates) {
    std::vector<double> xs, ys, ws;
    for (const auto& e : estimates) {
        if (e.zero_hits || e.degenerate || !std::isfinite(e.log_prob))
            continue;
        xs.push_back(static_cast<double>(e.n));
        ys.push_back(-e.log_prob);
        ws.push_back(e.std_error);
    }
    if (xs.size() < 2)
        throw DomainError("slope_fit: at least two finite estimates are required");
    const bool all_positive = std::all_of(ws.begin(), ws.end(), [](double s) { return s > 0.0 && std::isfinite(s); });
    for (auto& w : ws)
        w = all_positive ? 1.0 / (w * w) : 1.0;
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sw += ws[k];
        sx += ws[k] * xs[k];
        sy += ws[k] * ys[k];
    }
    const double xbar = sx / sw;
    const double ybar = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += ws[k] * (xs[k] - xbar) * (xs[k] - xbar);
        sxy += ws[k] * (xs[k] - xbar) * (ys[k] - ybar);
    }
    if (!(sxx > 0.0))
        throw DomainError("slope_fit: estimates must span at least two distinct n");
    SlopeFit fit;
    fit.rate = sxy / sxx;
    fit.intercept = ybar - fit.rate * xbar;
    fit.points = xs.size();
    if (all_positive) {
        fit.std_error = std::sqrt(1.0 / sxx);
    } else {
        double rss = 0.0;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const double res = ys[k] - fit.intercept - fit.rate * xs[k];
            rss += res * res;
        }
        fit.std_error = xs.size() > 2 ? std::sqrt(rss / static_cast<double>(xs.size() - 2) / sxx) : 0.0;
    }
    return fit;
}

// -- corner deviations of the geodesic --------------------------------------

struct CornerResult {
    double t = 0.0;
    std::vector<TailEstimate> estimates;  //!< one per n, log P(gamma_n(1/2) >= t)
    std::optional<SlopeFit> fit;          //!< absent with fewer than two usable points
};

//! Midpoint transversal gamma_n(1/2) (rotated x at half time, divided by n)
//! of the rightmost geodesic from (0,0) to (n/2, n/2), one value per replica.
inline std::vector<double> midpoint_transversals(const WeightDistribution& dist, long n, std::int64_t reps,
                                                 std::uint64_t seed, unsigned threads = default_threads()) {
    const DirectionLattice lat = direction_lattice(n, 0.0);
    std::vector<double> out(static_cast<std::size_t>(reps));
    for_each_replica(reps, threads, [&](std::int64_t r) {
        Engine eng = make_engine(seed, static_cast<std::uint64_t>(r));
        auto [path, value] = geodesic_streamed(lat.rows, lat.cols, [&](long, std::span<double> row) {
            for (auto& v : row)
                v = dist.sample(eng);
        });
        (void)value;
        out[static_cast<std::size_t>(r)] = transversal(path, 0.5) / static_cast<double>(n);
    });
    return out;
}

//! Corner experiment for several thresholds sharing the same replicas.
inline std::vector<CornerResult> corner_sweep(const WeightDistribution& dist, std::span<const long> n_list,
                                              std::span<const double> ts, std::int64_t reps, std::uint64_t seed,
                                              unsigned threads = default_threads()) {
    if (!dist.continuous())
        throw DomainError("corner experiment: requires a continuous weight distribution");
    for (double t : ts)
        if (!(t > 0.0 && t < 0.5))
            throw DomainError("corner experiment: t must lie in (0, 1/2)");
    if (reps < 1)
        throw DomainError("corner experiment: reps must be positive");
    std::vector<CornerResult> results(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k)
        results[k].t = ts[k];
    for (long n : n_list) {
        const std::uint64_t nseed = substream_seed(seed, static_cast<std::uint64_t>(n));
        const auto xs = midpoint_transversals(dist, n, reps, nseed, threads);
        for (std::size_t k = 0; k < ts.size(); ++k) {
            std::int64_t hits = 0;
            for (double x : xs)
                hits += x >= ts[k] ? 1 : 0;
            auto e = detail::count_estimate(n, ts[k], hits, reps, "naive", seed);
            results[k].estimates.push_back(e);
        }
    }
    for (auto& res : results) {
        try {
            res.fit = slope_fit(res.estimates);
        } catch (const DomainError&) {
            res.fit.reset();
        }
    }
    return results;
}

inline CornerResult corner_experiment(const WeightDistribution& dist, std::span<const long> n_list, double t,
                                      std::int64_t reps, std::uint64_t seed, unsigned threads = default_threads()) {
    const double ts[] = {t};
    return corner_sweep(dist, n_list, ts, reps, seed, threads).front();
}

} // namespace lpp
