#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>

#include "lpp/rates.hpp"
#include "support/exponential_oracle.hpp"
#include "support/generators.hpp"

using namespace lpp;

namespace {

const RateModel& model() {
    static const RateModel rm = lpp::testing::exponential_model();
    return rm;
}

DirectedPath vertical(double x, double s, double t) { return DirectedPath::segment({x, s}, {x, t}); }

PlantedNetworkMetric single_path_network(double c) {
    return PlantedNetworkMetric({{vertical(0, 0, 1), WeightProfile::linear(0, 1, c)}}, model(), 0.05);
}

} // namespace

TEST(EstimateF, BoundaryDirectionIsTheMean) {
    const auto e = WeightDistribution::exponential(1.0);
    const long ns[] = {64, 128};
    for (double g : {-1.0, 1.0}) {
        // T_n is a sum of n + 1 weights, so the per-n mean is (n + 1) / n.
        const auto est = estimate_F(e, g, ns, 2000, 81);
        EXPECT_NEAR(est.per_n_value[1], 129.0 / 128.0, 4.0 * est.per_n_error[1]);
        EXPECT_NEAR(est.value, 1.0, 0.01 + 3.0 * est.std_error);
        EXPECT_EQ(est.method, "extrapolate");
    }
}

TEST(EstimateF, MeansGrowUnderDoubling) {
    const long ns[] = {32, 64};
    const auto est = estimate_F(WeightDistribution::exponential(1.0), 0.0, ns, 1000, 82, ShapeMethod::largest_n);
    ASSERT_EQ(est.per_n_value.size(), 2u);
    EXPECT_GE(est.per_n_value[1], est.per_n_value[0] - 3.0 * std::hypot(est.per_n_error[0], est.per_n_error[1]));
    EXPECT_LT(est.per_n_value[1], 2.0);
    EXPECT_EQ(est.value, est.per_n_value[1]);
    EXPECT_EQ(est.method, "largest-n");
}

TEST(EstimateF, Validation) {
    const long ns[] = {8};
    const auto e = WeightDistribution::exponential(1.0);
    EXPECT_THROW(estimate_F(e, 1.2, ns, 10, 1), DomainError);
    EXPECT_THROW(estimate_F(e, 0.0, ns, 1, 1), DomainError);
    EXPECT_THROW(estimate_F(e, 0.0, std::span<const long>{}, 10, 1), DomainError);
}

TEST(EstimateJ, BelowShapeIsZero) {
    const long ns[] = {16};
    const auto est = estimate_J(WeightDistribution::exponential(1.0), 0.0, 1.9, ns, 100, TailMethod::naive, 83, 2.0);
    EXPECT_EQ(est.value, 0.0);
    EXPECT_EQ(est.method, "shape");
}

TEST(EstimateJ, BoundaryDirectionMatchesGammaTail) {
    // On gamma = 1, T_n is a Gamma(n + 1) variable.
    const auto e = WeightDistribution::exponential(1.0);
    const long ns[] = {32};
    for (double x : {1.5, 2.0}) {
        const auto est = estimate_J(e, 1.0, x, ns, 20000, TailMethod::tilt, 84);
        const double exact = -std::log(boost::math::gamma_q(33.0, 32.0 * x)) / 32.0;
        EXPECT_NEAR(est.value, exact, 3.0 * est.std_error) << x;
        // The finite-n value overshoots the limit by O(log n / n).
        EXPECT_GT(exact, cramer_rate(e, x));
        EXPECT_LT(exact - cramer_rate(e, x), 0.1);
    }
}

TEST(EstimateJ, ExactValuesShrinkUnderDoubling) {
    const auto d = WeightDistribution::capped_geometric(0.5, 3);
    for (double x = 0.25; x <= 3.0; x += 0.25) {
        const double r1 = -std::log(exact_tail(d, 1, x));
        const double r2 = -std::log(exact_tail(d, 2, 2.0 * x)) / 2.0;
        EXPECT_LE(r2, r1 + 1e-12) << x;
    }
}

TEST(EstimateJ, NaiveWithoutHitsIsInfiniteAndFlagged) {
    const long ns[] = {16};
    const auto est = estimate_J(WeightDistribution::exponential(1.0), 0.0, 6.0, ns, 100, TailMethod::naive, 85);
    EXPECT_EQ(est.value, kInf);
    EXPECT_TRUE(est.low_confidence);
    ASSERT_EQ(est.per_n_value.size(), 1u);
}

TEST(EstimateJ, ReportsSmallestPerNValue) {
    const long ns[] = {8, 16};
    const auto est = estimate_J(WeightDistribution::exponential(1.0), 0.0, 2.6, ns, 4000, TailMethod::tilt, 86);
    ASSERT_EQ(est.per_n_value.size(), 2u);
    EXPECT_EQ(est.value, std::min(est.per_n_value[0], est.per_n_value[1]));
    EXPECT_GT(est.value, 0.0);
}

TEST(ThetaPoint, Examples) {
    const auto& rm = model();
    EXPECT_EQ(theta_point(rm, 1.5, {{0, 0}, {0, 1}}), 0.0);
    EXPECT_NEAR(theta_point(rm, 2.5, {{0, 0}, {0, 1}}), rm.J(0.0, 2.5), 1e-15);
    EXPECT_NEAR(theta_point(rm, 1.0, {{0, 0}, {0.1, 0.5}}), 0.5 * rm.J(0.2, 2.0), 1e-15);
}

TEST(PathRate, LawOfLargeNumbersProfileIsFree) {
    const auto& rm = model();
    const DirectedPath f({{0, 0}, {0.3, 0.2}, {0.5, 0.1}, {1, 0}});
    std::vector<WeightProfile::Knot> knots{{0, 0}};
    for (std::size_t i = 1; i < f.size(); ++i) {
        const OrderedPair u{f.point(f.knots()[i - 1].t), f.point(f.knots()[i].t)};
        knots.push_back({f.knots()[i].t, knots.back().w + rm.d(u)});
    }
    EXPECT_NEAR(path_rate(rm, f, WeightProfile(knots)), 0.0, 1e-12);
}

TEST(PathRate, StraightPathIndependentOfRefinement) {
    const auto& rm = model();
    const double c = 2.7;
    const double expected = rm.J(0.0, c);
    EXPECT_NEAR(path_rate(rm, vertical(0, 0, 1), WeightProfile::linear(0, 1, c)), expected, 1e-14);
    Engine eng = make_engine(87);
    for (int k = 0; k < 200; ++k) {
        std::vector<double> ts{0.0, 1.0};
        const int extra = lpp::testing::uniform_int(eng, 1, 6);
        for (int i = 0; i < extra; ++i)
            ts.push_back(lpp::testing::uniform(eng, 0.01, 0.99));
        std::sort(ts.begin(), ts.end());
        std::vector<PathKnot> pk;
        std::vector<WeightProfile::Knot> wk;
        for (double t : ts) {
            pk.push_back({t, 0.0});
            wk.push_back({t, c * t});
        }
        EXPECT_NEAR(path_rate(rm, DirectedPath(pk), WeightProfile(wk)), expected, 1e-12);
    }
}

TEST(PathRate, ChordSumsNeverExceedTheRate) {
    // Convexity of the perspective form: coarsening (f, w) to chords on a
    // partition can only lower the sum.
    const auto& rm = model();
    Engine eng = make_engine(88);
    for (int k = 0; k < 10000; ++k) {
        const DirectedPath f = lpp::testing::random_path(eng, 0.0, 1.0, 5, 0.0, 0.9);
        std::vector<WeightProfile::Knot> wk{{0.0, 0.0}};
        for (int i = 1; i <= 5; ++i)
            wk.push_back({i / 5.0, wk.back().w + lpp::testing::uniform(eng, 0.0, 0.9)});
        const WeightProfile w(wk);
        const double full = path_rate(rm, f, w);
        if (full == kInf)
            continue;
        std::vector<double> ts{0.0, 1.0};
        const int cuts = lpp::testing::uniform_int(eng, 0, 4);
        for (int i = 0; i < cuts; ++i)
            ts.push_back(lpp::testing::uniform(eng, 0.0, 1.0));
        std::sort(ts.begin(), ts.end());
        double chords = 0.0;
        for (std::size_t i = 0; i + 1 < ts.size(); ++i)
            if (ts[i + 1] > ts[i])
                chords += rm.theta_point(w.increment(ts[i], ts[i + 1]), {f.point(ts[i]), f.point(ts[i + 1])});
        ASSERT_LE(chords, full + 1e-10 * (1.0 + full)) << k;
    }
}

TEST(PathRate, BentPathAtShapeSpeed) {
    const auto& rm = model();
    for (double t : {0.05, 0.1, 0.2}) {
        const DirectedPath f({{0, 0}, {0.5, t}, {1, 0}});
        EXPECT_NEAR(path_rate(rm, f, WeightProfile::linear(0, 1, rm.F(0.0))), rm.J(2 * t, rm.F(0.0)), 1e-14) << t;
    }
}

TEST(PathRate, DomainMismatchThrows) {
    EXPECT_THROW(path_rate(model(), vertical(0, 0, 1), WeightProfile::linear(0, 2, 2.0)), DomainError);
}

TEST(NetworkRate, EmptySingleAndCopies) {
    const auto& rm = model();
    EXPECT_EQ(network_rate(PlantedNetworkMetric({}, rm, 0.1)), 0.0);
    EXPECT_NEAR(network_rate(single_path_network(2.6)), rm.J(0.0, 2.6), 1e-14);
    const PlantedNetworkMetric two({{vertical(0, 0, 1), WeightProfile::linear(0, 1, 2.6)},
                                    {vertical(2, 0, 1), WeightProfile::linear(0, 1, 2.6)}},
                                   rm, 0.1);
    EXPECT_NEAR(network_rate(two), 2.0 * rm.J(0.0, 2.6), 1e-14);
    EXPECT_NEAR(network_rate(rm, two), network_rate(two), 0.0);
}

TEST(NetworkRate, AdditiveOverPlantings) {
    const auto& rm = model();
    Engine eng = make_engine(89);
    for (int k = 0; k < 50; ++k) {
        const double a = lpp::testing::uniform(eng, 2.0, 4.0), b = lpp::testing::uniform(eng, 2.0, 4.0);
        const Planting p{lpp::testing::random_path(eng, 0.0, 1.0, 3, 0.0, 0.5), WeightProfile::linear(0, 1, a)};
        const Planting q{lpp::testing::random_path(eng, 0.0, 1.0, 3, 4.0, 0.5), WeightProfile::linear(0, 1, b)};
        const PlantedNetworkMetric both({p, q}, rm, 0.1);
        EXPECT_NEAR(network_rate(both), path_rate(rm, p.path, p.profile) + path_rate(rm, q.path, q.profile), 1e-12);
    }
}

TEST(NetworkRate, LoweringAProfileStrictlyLowersTheRate) {
    for (double c : {2.3, 2.8, 3.5})
        EXPECT_LT(network_rate(single_path_network(c - 0.1)), network_rate(single_path_network(c)));
}

TEST(ThetaDisjoint, Examples) {
    const auto& rm = model();
    const auto m = single_path_network(2.6);
    const OrderedPair whole{{0, 0}, {0, 1}};
    EXPECT_NEAR(theta_disjoint(m, std::span(&whole, 1)), rm.J(0.0, 2.6), 1e-12);
    const OrderedPair away[] = {{{3, 0}, {3, 1}}, {{-3, 0}, {-3, 1}}};
    EXPECT_EQ(theta_disjoint(m, away), 0.0);
    EXPECT_EQ(theta_disjoint(m, std::span<const OrderedPair>{}), 0.0);
}

TEST(ThetaDisjoint, RejectsOverlapsAndUnorderedPairs) {
    const auto m = single_path_network(2.6);
    const OrderedPair overlap[] = {{{0, 0}, {0, 0.6}}, {{0, 0.5}, {0, 1}}};
    EXPECT_THROW(theta_disjoint(m, overlap), DomainError);
    const OrderedPair touching[] = {{{0, 0}, {0, 0.5}}, {{0, 0.5}, {0, 1}}};
    EXPECT_THROW(theta_disjoint(m, touching), DomainError);
    const OrderedPair unordered[] = {{{0, 0}, {2, 0.5}}};
    EXPECT_THROW(theta_disjoint(m, unordered), DomainError);
}

TEST(ThetaDisjoint, RefiningFamiliesApproachTheNetworkRate) {
    const auto m = single_path_network(2.6);
    const double target = network_rate(m);
    for (int pieces : {1, 4, 16}) {
        std::vector<OrderedPair> fam;
        const double gap = 0.005 / pieces;
        for (int k = 0; k < pieces; ++k)
            fam.push_back({{0, static_cast<double>(k) / pieces + gap}, {0, static_cast<double>(k + 1) / pieces - gap}});
        const double v = theta_disjoint(m, fam);
        EXPECT_LE(v, target + 1e-12);
        EXPECT_GE(v, 0.95 * target) << pieces;
    }
}

TEST(ThetaDisjoint, RandomFamiliesNeverExceedTheNetworkRate) {
    const auto& rm = model();
    const PlantedNetworkMetric m({{DirectedPath({{0, 0}, {0.5, 0.2}, {1, 0}}), WeightProfile::linear(0, 1, 2.8)},
                                  {vertical(1.5, 0, 1), WeightProfile({{0, 0}, {0.5, 1.0}, {1, 2.5}})}},
                                 rm, 0.05);
    const double bound = network_rate(m);
    Engine eng = make_engine(90);
    for (int k = 0; k < 300; ++k) {
        std::vector<OrderedPair> fam;
        for (int tries = 0; tries < 40 && fam.size() < 4; ++tries) {
            const SpaceTimePoint p{lpp::testing::uniform(eng, -0.5, 2.0), lpp::testing::uniform(eng, 0.0, 1.0)};
            const OrderedPair u{p, lpp::testing::random_later(eng, p, 1.0 - p.t)};
            if (u.duration() <= 0.0)
                continue;
            bool ok = true;
            for (const auto& v : fam)
                ok = ok && disjoint(u, v);
            if (ok)
                fam.push_back(u);
        }
        EXPECT_LE(theta_disjoint(m, fam), bound * (1.0 + 1e-9) + 1e-12) << k;
    }
}
