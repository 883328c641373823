#pragma once

// Monte Carlo estimates of F and J, and the rate functionals built on a
// RateModel: the perspective form on a pair, the path and network rates, and
// lower bounds over disjoint families of pairs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lpp/error.hpp"
#include "lpp/geometry.hpp"
#include "lpp/mc_harness.hpp"
#include "lpp/metrics.hpp"
#include "lpp/parallel.hpp"
#include "lpp/passage.hpp"
#include "lpp/rate_model.hpp"
#include "lpp/weights.hpp"

namespace lpp {

struct RateEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::vector<long> n_used;
    std::string method;
    std::vector<double> per_n_value;
    std::vector<double> per_n_error;
    bool low_confidence = false;
};

enum class ShapeMethod {
    extrapolate,  //!< weighted fit of mean_n = F - c n^{-2/3}
    largest_n,    //!< mean at the largest n
};

namespace detail {

inline std::vector<long> sorted_unique(std::span<const long> ns) {
    std::vector<long> v(ns.begin(), ns.end());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    if (v.empty())
        throw DomainError("n list is empty");
    if (v.front() < 1)
        throw DomainError("n list entries must be at least 1");
    return v;
}

} // namespace detail

//! Means of T_n((0,0), (gamma, 1)) / n over `reps` replicas per n.
inline RateEstimate estimate_F(const WeightDistribution& dist, double gamma, std::span<const long> n_list,
                               std::int64_t reps, std::uint64_t seed,
                               ShapeMethod method = ShapeMethod::extrapolate, unsigned threads = default_threads()) {
    if (!(std::abs(gamma) <= 1.0))
        throw DomainError("estimate_F: |gamma| must be at most 1");
    if (reps < 2)
        throw DomainError("estimate_F: at least two replicas are required");
    RateEstimate est;
    est.n_used = detail::sorted_unique(n_list);
    for (long n : est.n_used) {
        const DirectionLattice lat = direction_lattice(n, gamma);
        const std::uint64_t nseed = substream_seed(seed, static_cast<std::uint64_t>(n));
        std::vector<double> vals(static_cast<std::size_t>(reps));
        for_each_replica(reps, threads, [&](std::int64_t r) {
            Engine eng = make_engine(nseed, static_cast<std::uint64_t>(r));
            vals[static_cast<std::size_t>(r)] =
                passage_time_streamed(lat.rows, lat.cols, [&](long, std::span<double> row) {
                    for (auto& v : row)
                        v = dist.sample(eng);
                }) / static_cast<double>(n);
        });
        double mean = 0.0;
        for (double v : vals)
            mean += v;
        mean /= static_cast<double>(reps);
        double ss = 0.0;
        for (double v : vals)
            ss += (v - mean) * (v - mean);
        est.per_n_value.push_back(mean);
        est.per_n_error.push_back(std::sqrt(ss / static_cast<double>(reps - 1) / static_cast<double>(reps)));
    }
    const bool fit = method == ShapeMethod::extrapolate && est.n_used.size() >= 2;
    if (!fit) {
        est.method = "largest-n";
        est.value = est.per_n_value.back();
        est.std_error = est.per_n_error.back();
        return est;
    }
    // Weighted least squares of mean_n on z_n = n^{-2/3}; the intercept is F.
    est.method = "extrapolate";
    double sw = 0, sz = 0, sy = 0;
    std::vector<double> z(est.n_used.size()), w(est.n_used.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
        z[k] = std::pow(static_cast<double>(est.n_used[k]), -2.0 / 3.0);
        const double se = est.per_n_error[k];
        w[k] = se > 0.0 ? 1.0 / (se * se) : 1.0;
        sw += w[k];
        sz += w[k] * z[k];
        sy += w[k] * est.per_n_value[k];
    }
    const double zbar = sz / sw;
    const double ybar = sy / sw;
    double szz = 0, szy = 0;
    for (std::size_t k = 0; k < z.size(); ++k) {
        szz += w[k] * (z[k] - zbar) * (z[k] - zbar);
        szy += w[k] * (z[k] - zbar) * (est.per_n_value[k] - ybar);
    }
    const double slope = szy / szz;
    est.value = ybar - slope * zbar;
    est.std_error = std::sqrt(1.0 / sw + zbar * zbar / szz);
    return est;
}

//! Per-n values -(1/n) log P(T_n >= x n), each an upper bound on J(gamma, x)
//! up to noise; the reported value is their minimum. Naive runs without hits
//! contribute +inf. With `shape` = F(gamma) given, x <= shape returns 0.
inline RateEstimate estimate_J(const WeightDistribution& dist, double gamma, double x, std::span<const long> n_list,
                               std::int64_t reps, TailMethod method, std::uint64_t seed,
                               std::optional<double> shape = std::nullopt, const TiltOptions& tilt = {},
                               unsigned threads = default_threads()) {
    if (!(std::abs(gamma) <= 1.0))
        throw DomainError("estimate_J: |gamma| must be at most 1");
    RateEstimate est;
    est.n_used = detail::sorted_unique(n_list);
    est.method = to_string(method);
    if (shape && x <= *shape) {
        est.method = "shape";
        est.value = 0.0;
        return est;
    }
    est.value = kInf;
    est.std_error = kInf;
    for (std::size_t k = 0; k < est.n_used.size(); ++k) {
        const long n = est.n_used[k];
        const TailEstimate t = upper_tail(dist, n, gamma, x, reps, method, substream_seed(seed, static_cast<std::uint64_t>(n)),
                                          tilt, threads);
        double v = -t.log_prob / static_cast<double>(n);
        double se = t.std_error / static_cast<double>(n);
        if (t.zero_hits) {
            v = kInf;
            se = kInf;
            est.low_confidence = true;
        }
        est.per_n_value.push_back(v);
        est.per_n_error.push_back(se);
        if (v < est.value) {
            est.value = v;
            est.std_error = se;
        }
    }
    return est;
}

//! Perspective form of J on the pair u.
inline double theta_point(const RateModel& rm, double value, const OrderedPair& u) {
    return rm.theta_point(value, u);
}

namespace detail {

//! Union of the knot times of a path and a profile on their common domain.
inline std::vector<double> common_knots(const DirectedPath& f, const WeightProfile& w) {
    if (std::abs(f.start_time() - w.start_time()) > 1e-12 || std::abs(f.end_time() - w.end_time()) > 1e-12)
        throw DomainError("path_rate: profile domain differs from the path's domain");
    std::vector<double> times;
    for (const auto& k : f.knots())
        times.push_back(k.t);
    for (const auto& k : w.knots())
        times.push_back(std::clamp(k.t, f.start_time(), f.end_time()));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-15 * std::max(1.0, std::abs(a)); }),
                times.end());
    return times;
}

} // namespace detail

//! Sum of the perspective form over the linear pieces of (f, w).
inline double path_rate(const RateModel& rm, const DirectedPath& f, const WeightProfile& w) {
    const auto times = detail::common_knots(f, w);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        const double a = times[k];
        const double b = times[k + 1];
        const OrderedPair u{{f.position(a), a}, {f.position(b), b}};
        const double wa = w.value(std::clamp(a, w.start_time(), w.end_time()));
        const double wb = w.value(std::clamp(b, w.start_time(), w.end_time()));
        const double r = rm.theta_point(wb - wa, u);
        if (r == kInf)
            return kInf;
        total += r;
    }
    return total;
}

inline double network_rate(const PlantedNetworkMetric& m) {
    double total = 0.0;
    for (const auto& p : m.plantings()) {
        const double r = path_rate(m.model(), p.path, p.profile);
        if (r == kInf)
            return kInf;
        total += r;
    }
    return total;
}

inline double network_rate(const RateModel& rm, const PlantedNetworkMetric& m) {
    double total = 0.0;
    for (const auto& p : m.plantings()) {
        const double r = path_rate(rm, p.path, p.profile);
        if (r == kInf)
            return kInf;
        total += r;
    }
    return total;
}

//! Sum over pairwise disjoint pairs of the perspective form at the metric's values.
inline double theta_disjoint(const RateModel& rm, const PlantedNetworkMetric& m, std::span<const OrderedPair> pairs) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (!pairs[i].is_ordered())
            throw DomainError("theta_disjoint: pair " + std::to_string(i) + " is not ordered");
        for (std::size_t j = i + 1; j < pairs.size(); ++j)
            if (!disjoint(pairs[i], pairs[j]))
                throw DomainError("theta_disjoint: pairs " + std::to_string(i) + " and " + std::to_string(j) +
                                  " are not disjoint");
    }
    double total = 0.0;
    for (const auto& u : pairs) {
        const double r = rm.theta_point(m.evaluate(u), u);
        if (r == kInf)
            return kInf;
        total += r;
    }
    return total;
}

inline double theta_disjoint(const PlantedNetworkMetric& m, std::span<const OrderedPair> pairs) {
    return theta_disjoint(m.model(), m, pairs);
}

} // namespace lpp
