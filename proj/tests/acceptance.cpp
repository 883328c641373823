// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
// Exit status is nonzero when a criterion fails that is not listed in
// kFiniteSizeLimited; those two are reported as FAIL all the same.

#include <bit>
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <string>

#include "lpp/geodesic_ldp.hpp"
#include "lpp/mc_harness.hpp"
#include "lpp/metrics.hpp"
#include "lpp/passage.hpp"
#include "lpp/rates.hpp"
#include "support/exponential_oracle.hpp"
#include "support/generators.hpp"

using namespace lpp;
using lpp::testing::uniform;
using lpp::testing::uniform_int;

namespace {

// -- pinned tolerances ----------------------------------------------------------

constexpr double kExactSlack = 1e-12;         // rounding slack for exact identities
constexpr double kSeMultiple = 3.0;           // Monte Carlo comparisons
constexpr double kShapeRel = 0.02;            // criterion 4, gamma = 0
constexpr double kBoundaryRel = 0.01;         // criterion 4, gamma = +-1
constexpr double kSuperlinear = 1.3;          // criterion 5
constexpr double kLipschitzC = 3.0;           // criterion 6, C = 3 L
constexpr double kHalving = 0.75;             // criterion 6, defect(h/2) <= 0.75 defect(h)
constexpr double kThetaRel = 0.05;            // criterion 7
constexpr double kBentRel = 0.02;             // criterion 8
constexpr double kGridSearchRel = 0.01;       // criterion 8
constexpr double kCornerRel = 0.25;           // criterion 9
constexpr double kCramerAbs = 1e-6;           // criterion 11

const std::set<int> kFiniteSizeLimited = {5, 9};

const RateModel& model() {
    static const RateModel rm = lpp::testing::exponential_model();
    return rm;
}

struct Outcome {
    bool pass = true;
    std::string detail;
};

void note(Outcome& o, bool ok, const std::string& what) {
    if (!ok) {
        o.pass = false;
        o.detail += (o.detail.empty() ? "" : "; ") + what;
    }
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

// -- 1 -----------------------------------------------------------------------------

Outcome oracle_equivalence() {
    Outcome o;
    Engine eng = make_engine(1001);
    const std::vector<WeightDistribution> dists{WeightDistribution::exponential(1.0),
                                                WeightDistribution::capped_geometric(0.5, 3)};
    int bad = 0;
    for (int k = 0; k < 1000; ++k) {
        const long n = uniform_int(eng, 1, 6);
        const auto w = lpp::testing::random_weights(eng, dists[k % 2], n);
        const double dp = passage_time(w, {0, 0}, {n - 1, n - 1});
        const double bf = lpp::testing::brute_force_passage(w, {0, 0}, {n - 1, n - 1});
        bad += std::abs(dp - bf) > kExactSlack * (1.0 + bf);
    }
    note(o, bad == 0, std::to_string(bad) + " lattice mismatches");
    bad = 0;
    for (int k = 0; k < 1000; ++k) {
        PointCloud c;
        const long m = uniform_int(eng, 0, 12);
        for (long i = 0; i < m; ++i)
            c.points.push_back({uniform(eng, 0, 4), uniform(eng, 0, 4)});
        bad += poisson_passage(c, {0, 0}, {4, 4}) != lpp::testing::brute_force_chain(c.points, {0, 0}, {4, 4});
    }
    note(o, bad == 0, std::to_string(bad) + " Poisson mismatches");
    if (o.pass)
        o.detail = "1000 lattices <= 6x6, 1000 clouds <= 12 points";
    return o;
}

// -- 2 -----------------------------------------------------------------------------

Outcome superadditive_structure() {
    Outcome o;
    Engine eng = make_engine(1002);
    const auto dist = WeightDistribution::exponential(1.0);
    int bad = 0;
    for (int k = 0; k < 10000; ++k) {
        const auto w = lpp::testing::random_weights(eng, dist, 8);
        const Vertex u{uniform_int(eng, 0, 3), uniform_int(eng, 0, 3)};
        const Vertex v{uniform_int(eng, u.i, 6), uniform_int(eng, u.j, 6)};
        const Vertex x{uniform_int(eng, v.i + 1, 7), uniform_int(eng, v.j + 1, 7)};
        const Vertex ve = (k % 2) ? Vertex{v.i + 1, v.j} : Vertex{v.i, v.j + 1};
        bad += passage_time(w, u, x) + kExactSlack < passage_time(w, u, v) + passage_time(w, ve, x);
    }
    note(o, bad == 0, std::to_string(bad) + " triangle violations");
    bad = 0;
    for (int k = 0; k < 1000; ++k) {
        const auto w = lpp::testing::random_weights(eng, dist, 8);
        const auto s = polymer_split(w, {0, 0}, {7, 7}, uniform_int(eng, 0, 13));
        const double gap = s.log_partition - s.max_split;
        bad += gap < -kExactSlack || gap > std::log(static_cast<double>(s.candidates)) + kExactSlack;
    }
    note(o, bad == 0, std::to_string(bad) + " sandwich violations");
    if (o.pass)
        o.detail = "10^4 triples, 10^3 polymer splits";
    return o;
}

// -- 3 -----------------------------------------------------------------------------

Outcome rate_characterization() {
    Outcome o;
    const auto d = WeightDistribution::capped_geometric(0.5, 3);
    int checked = 0;
    for (double x = 0.25; x <= 3.0; x += 0.25) {
        const double r1 = -std::log(exact_tail(d, 1, x));
        const double r2 = -std::log(exact_tail(d, 2, 2.0 * x)) / 2.0;
        note(o, r2 <= r1 + kExactSlack, fmt("exact n=1->2 rises at x=%.2f", x));
        ++checked;
    }
    const auto e = WeightDistribution::exponential(1.0);
    const long ns[] = {8, 16, 32, 64};
    for (double x : {2.4, 2.8}) {
        double prev = kInf, prev_se = 0.0;
        for (long n : ns) {
            const auto t = upper_tail(e, n, 0.0, x, 20000, TailMethod::tilt, substream_seed(1003, n));
            const double r = -t.log_prob / static_cast<double>(n);
            const double se = t.std_error / static_cast<double>(n);
            note(o, r <= prev + kSeMultiple * std::hypot(se, prev_se), fmt("tilted rate rises at x=%.1f n=%.0f", x, n));
            prev = r;
            prev_se = se;
        }
    }
    if (o.pass)
        o.detail = std::to_string(checked) + " exact thresholds, tilted trend at x = 2.4, 2.8";
    return o;
}

// -- 4 -----------------------------------------------------------------------------

Outcome shape_function() {
    Outcome o;
    const auto e = WeightDistribution::exponential(1.0);
    const long ns[] = {64, 128, 256, 512};
    const auto f0 = estimate_F(e, 0.0, ns, 1000, 1004);
    const double exact = lpp::testing::exp_shape(0.0);
    note(o, std::abs(f0.value - exact) <= kShapeRel * exact, fmt("F(0) = %.4f", f0.value));
    // superadditivity: per-n means grow under doubling
    for (std::size_t k = 1; k < f0.per_n_value.size(); ++k)
        note(o,
             f0.per_n_value[k] >=
                 f0.per_n_value[k - 1] - kSeMultiple * std::hypot(f0.per_n_error[k], f0.per_n_error[k - 1]),
             "per-n means not increasing");
    double fb[2];
    int slot = 0;
    for (double g : {-1.0, 1.0}) {
        fb[slot] = estimate_F(e, g, ns, 1000, substream_seed(1004, slot + 1)).value;
        note(o, std::abs(fb[slot] - 1.0) <= kBoundaryRel, fmt("F(%.0f) = %.4f", g, fb[slot]));
        ++slot;
    }
    if (o.pass)
        o.detail = fmt("F(0) = %.4f, F(-1) = %.4f, F(1) = %.4f", f0.value, fb[0], fb[1]);
    return o;
}

// -- 5 -----------------------------------------------------------------------------

Outcome lower_tail_speed() {
    Outcome o;
    const auto e = WeightDistribution::exponential(1.0);
    const double x = 1.1;
    const auto a = lower_tail(e, 8, 0.0, x, 2000000, 1005, lpp::testing::exp_shape(0.0));
    const auto b = lower_tail(e, 16, 0.0, x, 2000000, 1006, lpp::testing::exp_shape(0.0));
    note(o, !a.zero_hits && !b.zero_hits, "no hits");
    const double ratio = b.log_prob / (2.0 * a.log_prob);
    note(o, ratio >= kSuperlinear, fmt("ratio below %.1f", kSuperlinear));
    o.detail += (o.detail.empty() ? "" : "; ") + fmt("x = %.1f, hits %.0f", x, static_cast<double>(a.hits)) +
                fmt(" / %.0f, ratio %.3f", static_cast<double>(b.hits), ratio);
    return o;
}

// -- 6 -----------------------------------------------------------------------------

std::vector<Planting> random_network(Engine& eng, int k) {
    std::vector<Planting> pl;
    for (int i = 0; i < k; ++i) {
        const double s = uniform(eng, 0.0, 0.4), t = uniform(eng, 0.6, 1.0);
        const auto f = lpp::testing::random_path(eng, s, t, 3, -0.45 + 0.3 * i, 0.1);
        const double c = uniform(eng, 1.0, 4.0);
        pl.push_back({f, WeightProfile({{s, 0.0}, {0.5 * (s + t), 0.5 * c * (t - s)}, {t, 1.3 * c * (t - s)}})});
    }
    return pl;
}

Outcome metric_axioms() {
    Outcome o;
    Engine eng = make_engine(1007);
    const GridBox box{-0.5, 0.5, 0.0, 1.0};
    double worst_ratio = 0.0;
    for (int trial = 0; trial < 8; ++trial) {
        const auto pl = random_network(eng, 1 + trial % 4);
        double defect[2];
        int slot = 0;
        for (double h : {0.1, 0.05}) {
            const PlantedNetworkMetric m(pl, model(), h);
            const double tol = kLipschitzC * m.lipschitz_scale() * h;
            const auto g = GridFunction::from_metric(m, box, h);
            note(o, check_triangle(g) <= tol, fmt("triangle defect above C h at h=%.2f", h));
            defect[slot] = check_composition(g);
            note(o, defect[slot] <= tol, fmt("composition defect %.3g above %.3g", defect[slot], tol));
            ++slot;
        }
        worst_ratio = std::max(worst_ratio, defect[1] / defect[0]);
        note(o, defect[1] <= kHalving * defect[0], fmt("defect ratio %.3f", defect[1] / defect[0]));
    }
    const double h = 0.1;
    const PlantedNetworkMetric m({{DirectedPath::segment({0, 0}, {0, 1}), WeightProfile::linear(0, 1, 3.5)}}, model(), h);
    auto g = GridFunction::from_metric(m, box, h);
    const double tol = kLipschitzC * m.lipschitz_scale() * h;
    g.at(g.index(5, 2), g.index(5, 5)) += 1.0;
    note(o, check_triangle(g) >= 1.0 - tol && check_composition(g) >= 1.0 - tol, "injected fault missed");
    if (o.pass)
        o.detail = fmt("8 networks, worst defect ratio %.3f", worst_ratio);
    return o;
}

// -- 7 -----------------------------------------------------------------------------

Outcome theta_equals_rate() {
    Outcome o;
    const PlantedNetworkMetric m({{DirectedPath::segment({0, 0}, {0, 1}), WeightProfile::linear(0, 1, 2.6)}}, model(),
                                 0.05);
    const double target = network_rate(m);
    double finest = 0.0;
    for (int pieces : {1, 2, 4, 8, 16}) {
        std::vector<OrderedPair> fam;
        const double gap = 0.005 / pieces;
        for (int k = 0; k < pieces; ++k)
            fam.push_back({{0, static_cast<double>(k) / pieces + gap}, {0, static_cast<double>(k + 1) / pieces - gap}});
        const double v = theta_disjoint(m, fam);
        note(o, v <= target * (1.0 + 1e-9), fmt("family of %.0f exceeds the rate", pieces));
        finest = v;
    }
    note(o, finest >= (1.0 - kThetaRel) * target, fmt("refined value %.4f of %.4f", finest, target));
    if (o.pass)
        o.detail = fmt("refined %.5f vs rate %.5f", finest, target);
    return o;
}

// -- 8 -----------------------------------------------------------------------------

double grid_search(const RateModel& rm, const DirectedPath& f, const std::vector<double>& centre, double step,
                   int half_width, std::vector<double>& arg) {
    constexpr int k = 4;
    std::vector<SpaceTimePoint> pts;
    for (int i = 0; i <= k; ++i)
        pts.push_back(f.point(i == k ? f.end_time() : f.start_time() + (f.end_time() - f.start_time()) * i / k));
    double D[k + 1][k + 1] = {};
    for (int a = 0; a <= k; ++a)
        for (int b = a + 1; b <= k; ++b)
            D[a][b] = rm.d({pts[a], pts[b]});
    double best = kInf;
    double inc[k], W[k + 1] = {};
    int idx[k - 1] = {-half_width, -half_width, -half_width};
    for (;;) {
        bool ok = true;
        for (int i = 0; i + 1 < k && ok; ++i) {
            inc[i] = centre[i] + step * idx[i];
            ok = inc[i] >= 0.0;
            W[i + 1] = W[i] + inc[i];
        }
        for (int b = 1; b < k && ok; ++b)
            for (int a = 0; a < b && ok; ++a)
                ok = W[b] - W[a] >= D[a][b] - kExactSlack;
        if (ok) {
            double last = 0.0;
            for (int a = 0; a < k; ++a)
                last = std::max(last, D[a][k] - (W[k - 1] - W[a]));
            inc[k - 1] = last;
            double v = 0.0;
            for (int i = 0; i < k; ++i)
                v += rm.theta_point(inc[i], {pts[i], pts[i + 1]});
            if (v < best) {
                best = v;
                arg.assign(inc, inc + k - 1);
            }
        }
        int pos = 0;
        while (pos < k - 1 && ++idx[pos] > half_width)
            idx[pos++] = -half_width;
        if (pos == k - 1)
            break;
    }
    return best;
}

Outcome geodesic_solver() {
    Outcome o;
    const auto& rm = model();
    const auto straight = DirectedPath::segment({0, 0}, {0.3, 1});
    const double s = solve_geodesic_rate(rm, straight, {straight.start(), straight.end()}, 16).value;
    note(o, s <= kExactSlack, fmt("straight line costs %.3g", s));
    double worst_bent = 0.0;
    for (double t : {0.05, 0.1, 0.15}) {
        const DirectedPath f({{0, 0}, {0.5, t}, {1, 0}});
        const double target = rm.J(2 * t, rm.d({{0, 0}, {0, 1}}));
        const double v = solve_geodesic_rate(rm, f, {f.start(), f.end()}, 16).value;
        worst_bent = std::max(worst_bent, std::abs(v - target) / target);
        note(o, std::abs(v - target) <= kBentRel * target, fmt("bent t=%.2f: %.5f vs %.5f", t, v, target));
    }
    const DirectedPath f({{0, 0}, {0.25, 0.15}, {0.5, 0.1}, {0.75, -0.1}, {1, 0}});
    const double solver = solve_geodesic_rate(rm, f, {f.start(), f.end()}, 4).value;
    std::vector<double> arg;
    grid_search(rm, f, std::vector<double>(3, 0.6), 0.02, 30, arg);
    const std::vector<double> centre = arg;
    const double brute = grid_search(rm, f, centre, 0.001, 40, arg);
    note(o, std::abs(solver - brute) <= kGridSearchRel * brute, fmt("k=4: %.5f vs grid %.5f", solver, brute));
    Engine eng = make_engine(1008);
    int dominated = 0;
    for (int k = 0; k < 1000; ++k) {
        const DirectedPath p = lpp::testing::random_path(eng, 0.0, 1.0, uniform_int(eng, 1, 6), 0.0, 1.0);
        dominated += straight_line_dominance(rm, p, WeightProfile::linear(0, 1, uniform(eng, 0.5, 5.0)));
    }
    note(o, dominated == 1000, std::to_string(1000 - dominated) + " dominance failures");
    if (o.pass)
        o.detail = fmt("bent within %.2f%%, k=4 %.5f vs %.5f, 1000/1000 dominated", 100 * worst_bent, solver, brute);
    return o;
}

// -- 9 -----------------------------------------------------------------------------

Outcome corner_slopes() {
    Outcome o;
    const auto e = WeightDistribution::exponential(1.0);
    const long ns[] = {64, 128, 256};
    const double ts[] = {0.05, 0.1, 0.15};
    const auto res = corner_sweep(e, ns, ts, 200000, 1009);
    double slopes[3];
    for (int k = 0; k < 3; ++k) {
        note(o, res[k].fit.has_value(), fmt("no fit at t=%.2f", ts[k]));
        slopes[k] = res[k].fit ? res[k].fit->rate : kInf;
    }
    const double target = corner_rate(model(), 0.1);
    note(o, std::abs(slopes[1] - target) <= kCornerRel * target,
         fmt("slope %.5f vs corner rate %.5f (x%.2f)", slopes[1], target, slopes[1] / target));
    note(o, slopes[0] < slopes[1] && slopes[1] < slopes[2], "slopes not increasing in t");
    o.detail += "; " + fmt("slopes %.5f, %.5f, %.5f", slopes[0], slopes[1], slopes[2]);
    if (o.pass)
        o.detail = fmt("slope %.5f vs %.5f", slopes[1], target);
    return o;
}

// -- 10 ----------------------------------------------------------------------------

Outcome hypo_distance_checks() {
    Outcome o;
    const GridBox box{0.0, 1.0, 0.0, 1.0};
    const double h = 0.1;
    const auto a = GridFunction::sample(box, h, [](const OrderedPair& u) { return model().d(u); });
    note(o, hypo_distance(a, a) == 0.0, "d(e, e) != 0");
    for (double lambda : {0.1, 0.5}) {
        const auto b = GridFunction::sample(box, h, [&](const OrderedPair& u) { return model().d(u) + lambda; });
        const double dist = hypo_distance(a, b);
        note(o, dist <= lambda + kExactSlack, fmt("shift %.1f gives %.4f", lambda, dist));
    }
    if (o.pass)
        o.detail = "identity and shifts 0.1, 0.5";
    return o;
}

// -- 11 ----------------------------------------------------------------------------

Outcome cramer_closed_forms() {
    Outcome o;
    const auto e = WeightDistribution::exponential(1.0);
    const auto g = WeightDistribution::geometric(0.5);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double x = 0.05 + 0.1 * k;
        const double ie = x - 1.0 - std::log(x);
        // geometric on {0, 1, ...} with P(0) = p, mean (1 - p) / p
        const double m = 1.0;
        const double ig = x * std::log(x / m) - (1.0 + x) * std::log((1.0 + x) / (1.0 + m));
        worst = std::max({worst, std::abs(cramer_rate(e, x) - ie), std::abs(cramer_rate(g, x) - ig)});
    }
    note(o, worst <= kCramerAbs, fmt("worst error %.3g", worst));
    if (o.pass)
        o.detail = fmt("worst error %.3g over 100 points", worst);
    return o;
}

// -- 12 ----------------------------------------------------------------------------

bool same(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

Outcome reproducibility() {
    Outcome o;
    const auto e = WeightDistribution::exponential(1.0);
    const long ns[] = {16, 32};
    const double ts[] = {0.1};
    for (unsigned threads : {2u, 4u}) {
        const auto f1 = estimate_F(e, 0.3, ns, 200, 1012, ShapeMethod::extrapolate, 1);
        const auto f2 = estimate_F(e, 0.3, ns, 200, 1012, ShapeMethod::extrapolate, threads);
        note(o, same(f1.value, f2.value) && same(f1.std_error, f2.std_error), "estimate_F differs");
        for (TailMethod m : {TailMethod::naive, TailMethod::tilt, TailMethod::corridor}) {
            const auto a = upper_tail(e, 32, 0.1, 2.3, 3000, m, 1012, {}, 1);
            const auto b = upper_tail(e, 32, 0.1, 2.3, 3000, m, 1012, {}, threads);
            note(o, same(a.log_prob, b.log_prob) && same(a.std_error, b.std_error) && a.hits == b.hits,
                 "upper_tail " + to_string(m) + " differs");
        }
        const auto l1 = lower_tail(e, 16, 0.0, 0.9, 20000, 1012, 2.0, 1);
        const auto l2 = lower_tail(e, 16, 0.0, 0.9, 20000, 1012, 2.0, threads);
        note(o, same(l1.log_prob, l2.log_prob) && l1.hits == l2.hits, "lower_tail differs");
        const auto c1 = corner_sweep(e, ns, ts, 5000, 1012, 1);
        const auto c2 = corner_sweep(e, ns, ts, 5000, 1012, threads);
        for (std::size_t k = 0; k < c1[0].estimates.size(); ++k)
            note(o, c1[0].estimates[k].hits == c2[0].estimates[k].hits, "corner sweep differs");
        const auto w1 = sample(e, 64, 1012);
        const auto w2 = sample(e, 64, 1012);
        note(o, same(passage_time(w1, {0, 0}, {63, 63}), passage_time(w2, {0, 0}, {63, 63})), "sample differs");
    }
    if (o.pass)
        o.detail = "1 vs 2 and 4 threads bit-identical";
    return o;
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double limit_seconds;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all = {
        {1, "oracle equivalence", 10, oracle_equivalence},
        {2, "superadditive structure", 60, superadditive_structure},
        {3, "rate characterization", 300, rate_characterization},
        {4, "shape function", 120, shape_function},
        {5, "lower-tail speed", 600, lower_tail_speed},
        {6, "metric axioms", 60, metric_axioms},
        {7, "theta equals the network rate", 60, theta_equals_rate},
        {8, "geodesic rate solver", 120, geodesic_solver},
        {9, "corner experiment", 900, corner_slopes},
        {10, "hypo-distance", 30, hypo_distance_checks},
        {11, "Cramer closed forms", 1, cramer_closed_forms},
        {12, "reproducibility", 600, reproducibility},
    };
    int unexpected = 0;
    for (const auto& c : all) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        note(o, secs <= c.limit_seconds, fmt("took %.1f s, limit %.0f s", secs, c.limit_seconds));
        std::printf("criterion %2d %s: %s (%s) [%.1f s]\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                    secs);
        std::fflush(stdout);
        if (!o.pass && !kFiniteSizeLimited.count(c.id))
            ++unexpected;
    }
    return unexpected == 0 ? 0 : 1;
}
