#pragma once

// Vertex weight distributions: sampling, log moment generating function,
// exponential tilting and the Cramer rate function.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lpp/error.hpp"
#include "lpp/rng.hpp"

namespace lpp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {

inline double log_sum_exp(std::span<const double> terms) {
    double m = -kInf;
    for (double v : terms)
        m = std::max(m, v);
    if (m == -kInf)
        return -kInf;
    double s = 0.0;
    for (double v : terms)
        s += std::exp(v - m);
    return m + std::log(s);
}

} // namespace detail

class WeightDistribution {
public:
    enum class Kind { exponential, geometric, capped_geometric, table };

    //! Exponential with rate lambda > 0.
    static WeightDistribution exponential(double rate) {
        if (!(rate > 0.0) || !std::isfinite(rate))
            throw DomainError("exponential: rate must be positive");
        WeightDistribution d;
        d.kind_ = Kind::exponential;
        d.rate_ = rate;
        return d;
    }

    //! Geometric on {0, 1, 2, ...}: P(k) = p (1-p)^k.
    static WeightDistribution geometric(double p) {
        if (!(p > 0.0 && p < 1.0))
            throw DomainError("geometric: success probability must lie in (0, 1)");
        WeightDistribution d;
        d.kind_ = Kind::geometric;
        d.p_ = p;
        return d;
    }

    //! min(G, cap) for G geometric(p). Bounded support: only meant for exact
    //! enumeration oracles, it violates the unbounded-support assumption.
    static WeightDistribution capped_geometric(double p, int cap) {
        if (!(p > 0.0 && p < 1.0))
            throw DomainError("capped geometric: success probability must lie in (0, 1)");
        if (cap < 0)
            throw DomainError("capped geometric: cap must be non-negative");
        WeightDistribution d;
        d.kind_ = Kind::capped_geometric;
        d.p_ = p;
        d.cap_ = cap;
        const double q = 1.0 - p;
        for (int k = 0; k < cap; ++k) {
            d.values_.push_back(k);
            d.probs_.push_back(p * std::pow(q, k));
        }
        d.values_.push_back(cap);
        d.probs_.push_back(std::pow(q, cap));
        d.build_cdf();
        return d;
    }

    //! Finite table of non-negative values with probabilities summing to 1.
    static WeightDistribution table(std::vector<double> values, std::vector<double> probs) {
        if (values.empty() || values.size() != probs.size())
            throw DomainError("table: values and probabilities must be non-empty and equal length");
        double total = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!(values[i] >= 0.0) || !std::isfinite(values[i]))
                throw DomainError("table: values must be finite and non-negative");
            if (!(probs[i] >= 0.0))
                throw DomainError("table: probabilities must be non-negative");
            total += probs[i];
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw DomainError("table: probabilities must sum to 1");
        // Sort by value so the support is ordered for enumeration and sampling.
        std::vector<std::size_t> order(values.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](auto l, auto r) { return values[l] < values[r]; });
        WeightDistribution d;
        d.kind_ = Kind::table;
        for (auto i : order) {
            d.values_.push_back(values[i]);
            d.probs_.push_back(probs[i] / total);
        }
        d.build_cdf();
        return d;
    }

    Kind kind() const noexcept { return kind_; }
    double rate() const noexcept { return rate_; }
    double success() const noexcept { return p_; }
    int cap() const noexcept { return cap_; }

    bool finite_support() const noexcept {
        return kind_ == Kind::capped_geometric || kind_ == Kind::table;
    }
    bool continuous() const noexcept { return kind_ == Kind::exponential; }

    //! Support points and masses of a finite-support distribution.
    std::span<const double> support() const noexcept { return values_; }
    std::span<const double> masses() const noexcept { return probs_; }

    double min_support() const noexcept { return finite_support() ? values_.front() : 0.0; }
    double max_support() const noexcept { return finite_support() ? values_.back() : kInf; }

    double mean() const noexcept {
        switch (kind_) {
        case Kind::exponential: return 1.0 / rate_;
        case Kind::geometric: return (1.0 - p_) / p_;
        default: {
            double m = 0.0;
            for (std::size_t i = 0; i < values_.size(); ++i)
                m += values_[i] * probs_[i];
            return m;
        }
        }
    }

    double variance() const noexcept {
        switch (kind_) {
        case Kind::exponential: return 1.0 / (rate_ * rate_);
        case Kind::geometric: return (1.0 - p_) / (p_ * p_);
        default: {
            const double m = mean();
            double v = 0.0;
            for (std::size_t i = 0; i < values_.size(); ++i)
                v += (values_[i] - m) * (values_[i] - m) * probs_[i];
            return v;
        }
        }
    }

    //! Supremum of the theta where the moment generating function is finite.
    double mgf_abscissa() const noexcept {
        switch (kind_) {
        case Kind::exponential: return rate_;
        case Kind::geometric: return -std::log1p(-p_);
        default: return kInf;
        }
    }

    //! log E[exp(theta w)]; throws DivergenceError at or beyond the abscissa.
    double log_mgf(double theta) const {
        if (std::isnan(theta))
            throw DomainError("log_mgf: theta is NaN");
        if (theta >= mgf_abscissa())
            throw DivergenceError("log_mgf: theta at or beyond the MGF abscissa");
        switch (kind_) {
        case Kind::exponential: return -std::log1p(-theta / rate_);
        case Kind::geometric: {
            const double q = 1.0 - p_;
            return std::log(p_) - std::log1p(-q * std::exp(theta));
        }
        default: {
            std::vector<double> terms(values_.size());
            for (std::size_t i = 0; i < values_.size(); ++i)
                terms[i] = probs_[i] > 0.0 ? std::log(probs_[i]) + theta * values_[i] : -kInf;
            return detail::log_sum_exp(terms);
        }
        }
    }

    //! Derivative of log_mgf, the mean of the tilted law.
    double tilted_mean(double theta) const {
        if (theta >= mgf_abscissa())
            throw DivergenceError("tilted_mean: theta at or beyond the MGF abscissa");
        switch (kind_) {
        case Kind::exponential: return 1.0 / (rate_ - theta);
        case Kind::geometric: {
            const double qe = (1.0 - p_) * std::exp(theta);
            return qe / (1.0 - qe);
        }
        default: {
            const double lm = log_mgf(theta);
            double m = 0.0;
            for (std::size_t i = 0; i < values_.size(); ++i)
                if (probs_[i] > 0.0)
                    m += values_[i] * std::exp(std::log(probs_[i]) + theta * values_[i] - lm);
            return m;
        }
        }
    }

    //! The exponentially tilted law dQ/dP = exp(theta w - log_mgf(theta)).
    WeightDistribution tilted(double theta) const {
        if (theta >= mgf_abscissa())
            throw DivergenceError("tilted: theta at or beyond the MGF abscissa");
        switch (kind_) {
        case Kind::exponential: return exponential(rate_ - theta);
        case Kind::geometric: return geometric(1.0 - (1.0 - p_) * std::exp(theta));
        default: {
            const double lm = log_mgf(theta);
            std::vector<double> probs(values_.size());
            for (std::size_t i = 0; i < values_.size(); ++i)
                probs[i] = probs_[i] > 0.0 ? std::exp(std::log(probs_[i]) + theta * values_[i] - lm) : 0.0;
            const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
            for (auto& v : probs)
                v /= total;
            return table(values_, std::move(probs));
        }
        }
    }

    //! One draw. Inversion sampling only, so streams are reproducible
    //! across standard library implementations.
    double sample(Engine& eng) const noexcept {
        const double u = uniform01(eng);
        switch (kind_) {
        case Kind::exponential: return -std::log1p(-u) / rate_;
        case Kind::geometric: return std::floor(std::log1p(-u) / std::log1p(-p_));
        default: {
            auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
            const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()),
                                                   values_.size() - 1);
            return values_[idx];
        }
        }
    }

    std::string name() const {
        switch (kind_) {
        case Kind::exponential: return "exponential";
        case Kind::geometric: return "geometric";
        case Kind::capped_geometric: return "truncated-geometric";
        case Kind::table: return "table";
        }
        return "unknown";
    }

private:
    void build_cdf() {
        cdf_.resize(probs_.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < probs_.size(); ++i) {
            acc += probs_[i];
            cdf_[i] = acc;
        }
        cdf_.back() = 1.0;
    }

    Kind kind_ = Kind::exponential;
    double rate_ = 1.0;
    double p_ = 0.5;
    int cap_ = 0;
    std::vector<double> values_;
    std::vector<double> probs_;
    std::vector<double> cdf_;
};

inline double log_mgf(const WeightDistribution& dist, double theta) { return dist.log_mgf(theta); }

namespace detail {

//! Maximize a concave function on [lo, hi] by golden-section search.
template <class Fn>
double golden_section_argmax(Fn&& f, double lo, double hi, double tol) {
    constexpr double invphi = 0.6180339887498949;
    double c = hi - invphi * (hi - lo);
    double d = lo + invphi * (hi - lo);
    double fc = f(c);
    double fd = f(d);
    while (hi - lo > tol) {
        if (fc >= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + invphi * (hi - lo);
            fd = f(d);
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

//! Legendre transform sup_theta {theta x - log_mgf(theta)} of the log-MGF.
//!
//! The objective is concave in theta; the maximizer is bracketed on the side
//! of zero given by sign(x - mean) and refined by golden-section search to
//! 1e-10 in theta. Values outside the support are +inf; at the lower edge of
//! the support the transform is -log P(w = min).
inline double cramer_rate(const WeightDistribution& dist, double x, double theta_tol = 1e-10) {
    if (std::isnan(x))
        throw DomainError("cramer_rate: x is NaN");
    const double lo_support = dist.min_support();
    const double hi_support = dist.max_support();
    if (x < lo_support || x > hi_support)
        return kInf;
    if (dist.finite_support() && (x == lo_support || x == hi_support)) {
        const auto mass = x == lo_support ? dist.masses().front() : dist.masses().back();
        return mass > 0.0 ? -std::log(mass) : kInf;
    }
    if (x == lo_support && !dist.finite_support()) {
        // Zero is an atom of the geometric law; the exponential has none.
        return dist.kind() == WeightDistribution::Kind::geometric ? -std::log(dist.success()) : kInf;
    }

    const double mu = dist.mean();
    auto objective = [&](double th) { return th * x - dist.log_mgf(th); };
    if (x == mu)
        return 0.0;

    double lo = 0.0;
    double hi = 0.0;
    const double abscissa = dist.mgf_abscissa();
    if (x > mu) {
        if (std::isfinite(abscissa)) {
            hi = abscissa * (1.0 - 1e-15);
            // The objective tends to -inf at the abscissa for the laws
            // supported here, so [0, abscissa) brackets the maximum.
            if (!(hi > 0.0))
                hi = abscissa;
        } else {
            hi = 1.0;
            while (objective(2.0 * hi) > objective(hi) && hi < 1e12)
                hi *= 2.0;
            hi *= 2.0;
        }
    } else {
        lo = -1.0;
        while (objective(2.0 * lo) > objective(lo) && lo > -1e12)
            lo *= 2.0;
        lo *= 2.0;
    }
    const double th = detail::golden_section_argmax(objective, lo, hi, theta_tol);
    return std::max(0.0, objective(th));
}

//! An n x n realization of i.i.d. weights; entry (i, j) is vertex (a, b) = (i, j).
class LatticeWeights {
public:
    LatticeWeights(long n, std::vector<double> values, std::uint64_t seed, WeightDistribution dist)
        : n_(n), seed_(seed), dist_(std::move(dist)), values_(std::move(values)) {
        if (n_ < 1)
            throw DomainError("lattice weights: n must be at least 1");
        if (values_.size() != static_cast<std::size_t>(n_ * n_))
            throw DomainError("lattice weights: value count does not match n*n");
        for (double v : values_)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw DomainError("lattice weights: values must be finite and non-negative");
    }

    long n() const noexcept { return n_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const WeightDistribution& distribution() const noexcept { return dist_; }
    std::span<const double> values() const noexcept { return values_; }

    double operator()(long i, long j) const noexcept { return values_[static_cast<std::size_t>(i * n_ + j)]; }
    double& at(long i, long j) noexcept { return values_[static_cast<std::size_t>(i * n_ + j)]; }

private:
    long n_;
    std::uint64_t seed_;
    WeightDistribution dist_;
    std::vector<double> values_;
};

//! Deterministic i.i.d. sample, row-major in i, drawn from substream 0 of `seed`.
inline LatticeWeights sample(const WeightDistribution& dist, long n, std::uint64_t seed) {
    if (n < 1)
        throw DomainError("sample: n must be at least 1");
    Engine eng = make_engine(seed, 0);
    std::vector<double> values(static_cast<std::size_t>(n * n));
    for (auto& v : values)
        v = dist.sample(eng);
    return LatticeWeights(n, std::move(values), seed, dist);
}

} // namespace lpp
