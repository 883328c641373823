// lpp: batch front end. Every subcommand reads a flat [experiment] table
// (--config), applies flag overrides, writes its artifacts and a manifest
// into --out, and exits 0 ok, 2 config error, 3 capacity error, 4 failed check.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lpp/config.hpp"
#include "lpp/geodesic_ldp.hpp"
#include "lpp/io.hpp"
#include "lpp/mc_harness.hpp"
#include "lpp/metrics.hpp"
#include "lpp/parallel.hpp"
#include "lpp/passage.hpp"
#include "lpp/rate_model.hpp"
#include "lpp/rates.hpp"
#include "lpp/version.hpp"
#include "lpp/weights.hpp"

namespace {

using namespace lpp;
using json = nlohmann::json;

constexpr double kDefaultBudget = 5e11;       // lattice cell updates
constexpr double kMaxWeightBytes = 4e9;       // largest in-memory weight array

struct DryRun {};

struct VerifyFailed {
    std::string what;
};

json finite(double v) { return std::isfinite(v) ? json(v) : json(v > 0 ? "inf" : "-inf"); }

std::string hex(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

struct Context {
    std::string subcommand;
    Config cfg;
    std::filesystem::path out;
    unsigned threads = 1;
    bool dry_run = false;
    json artifacts = json::array();
    std::optional<std::uint64_t> seed;
    json summary = json::object();

    std::string artifact(const std::string& name) {
        artifacts.push_back(name);
        return (out / name).string();
    }

    std::uint64_t read_seed() {
        seed = static_cast<std::uint64_t>(cfg.integer("seed", 1));
        return *seed;
    }

    std::vector<long> longs(const std::string& key) {
        std::vector<long> v;
        for (double d : cfg.numbers(key)) {
            if (d != std::floor(d) || d < 1)
                throw ConfigError("key '" + key + "' must hold positive integers");
            v.push_back(static_cast<long>(d));
        }
        return v;
    }

    std::vector<double> fixed(const std::string& key, std::size_t count) {
        auto v = cfg.numbers(key);
        if (v.size() != count)
            throw ConfigError("key '" + key + "' must hold " + std::to_string(count) + " numbers");
        return v;
    }

    //! Checks the remaining keys, then either prints the cost (dry run) or
    //! refuses runs above the budget.
    void gate(double cost, const std::string& unit) {
        const double budget = cfg.number("budget", kDefaultBudget);
        cfg.finish();
        const json report = {{"subcommand", subcommand}, {"cost", cost}, {"unit", unit}, {"budget", budget}};
        if (dry_run) {
            std::cout << report.dump(2) << '\n';
            throw DryRun{};
        }
        if (cost > budget) {
            std::ostringstream os;
            os << subcommand << ": estimated cost " << cost << " " << unit << " exceeds the budget " << budget;
            throw CapacityError(os.str());
        }
    }

    void write_manifest() const {
        std::filesystem::create_directories(out);
        {
            std::ofstream toml(out / "config.toml");
            toml << "[experiment]\n" << cfg.canonical();
        }
        json m = {{"subcommand", subcommand}, {"version", kVersion},      {"config", cfg.canonical()},
                  {"config_hash", hex(cfg.hash())}, {"threads", threads}, {"artifacts", artifacts},
                  {"summary", summary}};
        m["seed"] = seed ? json(*seed) : json(nullptr);
        io::write_json((out / "manifest.json").string(), m);
    }
};

double lattice_cost(std::span<const long> ns, double gamma, double reps) {
    double cells = 0.0;
    for (long n : ns) {
        const auto lat = direction_lattice(n, gamma);
        cells += static_cast<double>(lat.rows) * static_cast<double>(lat.cols);
    }
    return cells * reps;
}

RateModel load_model(Context& c) { return io::rate_model_from_json(io::read_json(c.cfg.string("rate_model"))); }

std::vector<Planting> load_network(Context& c) { return io::network_from_json(io::read_json(c.cfg.string("network"))); }

OrderedPair pair_from(const std::vector<double>& v) { return {{v[0], v[1]}, {v[2], v[3]}}; }

json estimate_json(const RateEstimate& e) {
    json per = json::array();
    for (std::size_t k = 0; k < e.n_used.size(); ++k)
        per.push_back({{"n", e.n_used[k]}, {"value", finite(e.per_n_value[k])}, {"se", finite(e.per_n_error[k])}});
    return {{"value", finite(e.value)}, {"se", finite(e.std_error)}, {"method", e.method},
            {"low_confidence", e.low_confidence}, {"per_n", per}};
}

json fit_json(const std::optional<SlopeFit>& fit) {
    if (!fit)
        return nullptr;
    return {{"rate", fit->rate}, {"se", fit->std_error}, {"intercept", fit->intercept}, {"points", fit->points}};
}

std::optional<SlopeFit> try_fit(std::span<const TailEstimate> es) {
    try {
        return slope_fit(es);
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

LatticeWeights weights_for(Context& c, long& n) {
    if (c.cfg.has("weights")) {
        const std::string path = c.cfg.string("weights");
        c.gate(0.0, "cells");
        auto w = io::read_weights(path);
        n = w.n();
        c.seed = w.seed();
        return w;
    }
    n = c.cfg.integer("n");
    const auto dist = io::distribution_from_config(c.cfg);
    const std::uint64_t seed = c.read_seed();
    if (n < 1)
        throw ConfigError("n must be at least 1");
    const double bytes = 8.0 * static_cast<double>(n) * static_cast<double>(n);
    if (bytes > kMaxWeightBytes && !c.dry_run)
        throw CapacityError("weights of side " + std::to_string(n) + " need " + std::to_string(bytes) +
                            " bytes, above the limit " + std::to_string(kMaxWeightBytes));
    c.gate(static_cast<double>(n) * static_cast<double>(n), "cells");
    return sample(dist, n, seed);
}

// -- subcommands ---------------------------------------------------------------

void run_sample(Context& c) {
    long n = 0;
    const auto w = weights_for(c, n);
    io::write_weights(c.artifact("weights.bin"), w);
    c.artifacts.push_back("weights.bin.json");
    c.summary = {{"n", n}};
}

void run_passage(Context& c) {
    long n = 0;
    const auto w = weights_for(c, n);
    const Vertex u{0, 0}, v{n - 1, n - 1};
    const double T = passage_time(w, u, v);
    {
        std::ofstream os(c.artifact("passage.csv"));
        os.precision(17);
        os << "n,seed,T\n" << n << ',' << w.seed() << ',' << T << '\n';
    }
    std::ofstream geo(c.artifact("geodesic.csv"));
    io::write_geodesic_csv(geo, geodesic(w, u, v));
    c.summary = {{"T", T}};
    std::cout << "T = " << std::setprecision(17) << T << '\n';
}

void run_geodesic(Context& c) {
    const auto fractions = c.cfg.numbers("fractions", {0.25, 0.5, 0.75});
    long n = 0;
    const auto w = weights_for(c, n);
    const auto g = geodesic(w, {0, 0}, {n - 1, n - 1});
    std::ofstream geo(c.artifact("geodesic.csv"));
    io::write_geodesic_csv(geo, g);
    json tr = json::array();
    for (double f : fractions)
        tr.push_back({{"fraction", f}, {"x", transversal(g, f)}});
    c.summary = {{"T", path_weight(w, g)}, {"transversals", tr}};
}

void run_rate_f(Context& c) {
    const auto dist = io::distribution_from_config(c.cfg);
    const double gamma = c.cfg.number("gamma", 0.0);
    const auto ns = c.longs("n");
    const auto reps = c.cfg.integer("reps");
    const std::string method = c.cfg.string("method", "extrapolate");
    if (method != "extrapolate" && method != "largest-n")
        throw ConfigError("method must be extrapolate or largest-n");
    const auto seed = c.read_seed();
    c.gate(lattice_cost(ns, gamma, static_cast<double>(reps)), "cells");
    const auto est = estimate_F(dist, gamma, ns, reps, seed,
                                method == "extrapolate" ? ShapeMethod::extrapolate : ShapeMethod::largest_n, c.threads);
    c.summary = estimate_json(est);
    io::write_json(c.artifact("rate_f.json"), c.summary);
}

//! Monte Carlo table of F and J over a (gamma, x) grid, saved as a rate model.
void tabulate_model(Context& c, const WeightDistribution& dist, const std::vector<long>& ns, std::int64_t reps,
                    TailMethod method, std::uint64_t seed) {
    const double gstep = c.cfg.number("gamma_step", 0.1);
    const double xstep = c.cfg.number("x_step", 0.25);
    const double xmax = c.cfg.number("x_max", 4.0 * dist.mean() + 2.0);
    const auto gammas = uniform_grid(-1.0, 1.0, gstep);
    const auto xs = uniform_grid(0.0, xmax, xstep);
    double cost = 0.0;
    for (double g : gammas)
        cost += lattice_cost(ns, g, static_cast<double>(reps)) * (1.0 + static_cast<double>(xs.size()));
    c.gate(0.5 * cost, "cells");
    ShapeTable F{gammas, std::vector<double>(gammas.size(), dist.mean())};
    RateTable J{gammas, xs, std::vector<std::vector<double>>(gammas.size(), std::vector<double>(xs.size(), 0.0))};
    long filled = 0;
    const std::size_t ng = gammas.size();
    for (std::size_t i = 0; i < ng; ++i) {
        const std::size_t mirror = ng - 1 - i;
        if (mirror < i) {
            F.values[i] = F.values[mirror];
            J.values[i] = J.values[mirror];
            continue;
        }
        const double g = gammas[i];
        const std::uint64_t rseed = substream_seed(seed, i);
        if (std::abs(g) < 1.0)
            F.values[i] = estimate_F(dist, g, ns, reps, rseed, ShapeMethod::extrapolate, c.threads).value;
        for (std::size_t j = 0; j < xs.size(); ++j) {
            const double x = xs[j];
            if (x <= F.values[i])
                continue;
            if (std::abs(g) == 1.0) {
                J.values[i][j] = cramer_rate(dist, x);
                continue;
            }
            const auto est = estimate_J(dist, g, x, ns, reps, method, substream_seed(rseed, j + 1), F.values[i], {},
                                        c.threads);
            double v = est.value;
            // Without hits the path bound J <= I_c stands in.
            if (!std::isfinite(v)) {
                v = cramer_rate(dist, x);
                ++filled;
            }
            J.values[i][j] = std::isfinite(v) ? v : 0.0;
        }
    }
    const RateModel rm(dist, F, J, Provenance{"estimated", "estimated"});
    io::write_json(c.artifact("rate_model.json"), io::to_json(rm));
    c.summary = {{"gammas", gammas.size()}, {"xs", xs.size()}, {"filled_with_cramer", filled}};
}

void run_rate_j(Context& c) {
    const auto dist = io::distribution_from_config(c.cfg);
    const auto ns = c.longs("n");
    const auto reps = c.cfg.integer("reps");
    const auto method = parse_tail_method(c.cfg.string("method", "tilt"));
    const auto seed = c.read_seed();
    if (c.cfg.boolean("tabulate", false)) {
        tabulate_model(c, dist, ns, reps, method, seed);
        return;
    }
    const double gamma = c.cfg.number("gamma", 0.0);
    const double x = c.cfg.number("x");
    std::optional<double> shape;
    if (c.cfg.has("shape"))
        shape = c.cfg.number("shape");
    TiltOptions tilt;
    if (c.cfg.has("theta"))
        tilt.theta = c.cfg.number("theta");
    tilt.corridor_half_width = c.cfg.number("kappa", tilt.corridor_half_width);
    c.gate(lattice_cost(ns, gamma, static_cast<double>(reps)), "cells");
    const auto est = estimate_J(dist, gamma, x, ns, reps, method, seed, shape, tilt, c.threads);
    c.summary = estimate_json(est);
    io::write_json(c.artifact("rate_j.json"), c.summary);
}

void run_theta(Context& c) {
    const auto rm = load_model(c);
    if (c.cfg.has("pairs")) {
        const auto net = load_network(c);
        const double h = c.cfg.number("h", 0.05);
        std::vector<OrderedPair> pairs;
        for (const auto& p : io::read_json(c.cfg.string("pairs"))) {
            const auto v = p.get<std::vector<double>>();
            if (v.size() != 4)
                throw ConfigError("pairs: each entry must be [x, s, y, t]");
            pairs.push_back(pair_from(v));
        }
        c.gate(static_cast<double>(pairs.size() * pairs.size()), "pair checks");
        const PlantedNetworkMetric m(net, rm, h);
        c.summary = {{"theta", finite(theta_disjoint(rm, m, pairs))}, {"network_rate", finite(network_rate(rm, m))},
                     {"pairs", pairs.size()}};
    } else {
        const auto u = pair_from(c.fixed("pair", 4));
        const double value = c.cfg.number("value");
        c.gate(1.0, "evaluations");
        c.summary = {{"theta", finite(theta_point(rm, value, u))}, {"d", rm.d(u)}};
    }
    io::write_json(c.artifact("theta.json"), c.summary);
}

void run_network_rate(Context& c) {
    const auto rm = load_model(c);
    const auto net = load_network(c);
    const double h = c.cfg.number("h", 0.05);
    c.gate(static_cast<double>(net.size()), "paths");
    const PlantedNetworkMetric m(net, rm, h);
    json paths = json::array();
    for (const auto& p : m.plantings())
        paths.push_back(finite(path_rate(rm, p.path, p.profile)));
    c.summary = {{"network_rate", finite(network_rate(rm, m))}, {"paths", paths}};
    io::write_json(c.artifact("network_rate.json"), c.summary);
}

void run_geodesic_rate(Context& c) {
    const auto rm = load_model(c);
    const json path_json = io::read_json(c.cfg.string("path"));
    const auto ends = c.fixed("endpoints", 4);
    const auto k = c.cfg.integer("segments", 16);
    if (k < 1)
        throw ConfigError("segments must be positive");
    std::vector<PathKnot> knots;
    for (const auto& kn : path_json) {
        if (!kn.is_array() || kn.size() != 2)
            throw ConfigError("path: each knot must be [t, x]");
        knots.push_back({kn[0].get<double>(), kn[1].get<double>()});
    }
    const double pts = static_cast<double>(k + knots.size());
    c.gate(pts * pts * 500.0, "constraint updates");
    const auto r = solve_geodesic_rate(rm, std::move(knots), pair_from(ends), static_cast<int>(k));
    c.summary = {{"value", finite(r.value)},
                 {"profile", r.value < kInf ? io::to_json(r.profile) : json(nullptr)},
                 {"certificate_gap", finite(r.certificate_gap)},
                 {"w_min_value", finite(r.w_min_value)},
                 {"constraint_modulus", r.constraint_modulus},
                 {"max_violation", finite(r.max_violation)},
                 {"segments", r.segments}};
    io::write_json(c.artifact("geodesic_rate.json"), c.summary);
}

void run_verify_metric(Context& c) {
    const auto rm = load_model(c);
    const auto net = load_network(c);
    const auto b = c.fixed("box", 4);
    const double h = c.cfg.number("h", 0.05);
    std::optional<double> tol;
    if (c.cfg.has("tolerance"))
        tol = c.cfg.number("tolerance");
    const GridBox box{b[0], b[1], b[2], b[3]};
    const double points = ((b[1] - b[0]) / h + 1.0) * ((b[3] - b[2]) / h + 1.0);
    c.gate(points * points * points, "triples");
    const PlantedNetworkMetric m(net, rm, h);
    const double limit = tol.value_or(3.0 * m.lipschitz_scale() * h);
    const auto g = GridFunction::from_metric(m, box, h);
    const double tri = check_triangle(g);
    const double comp = check_composition(g);
    const bool ok = tri <= limit && comp <= limit;
    c.summary = {{"triangle_defect", tri}, {"composition_defect", comp}, {"tolerance", limit}, {"pass", ok}};
    io::write_json(c.artifact("verify_metric.json"), c.summary);
    if (c.cfg.boolean("grid_csv", false)) {
        std::ofstream os(c.artifact("grid.csv"));
        io::write_grid_csv(os, g);
    }
    std::cout << c.summary.dump(2) << '\n';
    if (!ok)
        throw VerifyFailed{"metric defect above tolerance"};
}

void write_tails(Context& c, const std::vector<TailEstimate>& es, const std::string& name) {
    std::ofstream os(c.artifact(name));
    io::write_tail_header(os);
    for (const auto& e : es)
        io::write_tail_row(os, e);
}

void run_upper_tail(Context& c) {
    const auto dist = io::distribution_from_config(c.cfg);
    const double gamma = c.cfg.number("gamma", 0.0);
    const double x = c.cfg.number("x");
    const auto ns = c.longs("n");
    const auto reps = c.cfg.integer("reps");
    const auto method = parse_tail_method(c.cfg.string("method", "tilt"));
    TiltOptions tilt;
    if (c.cfg.has("theta"))
        tilt.theta = c.cfg.number("theta");
    tilt.corridor_half_width = c.cfg.number("kappa", tilt.corridor_half_width);
    const auto seed = c.read_seed();
    c.gate(lattice_cost(ns, gamma, static_cast<double>(reps)), "cells");
    std::vector<TailEstimate> es;
    for (long n : ns)
        es.push_back(upper_tail(dist, n, gamma, x, reps, method, substream_seed(seed, static_cast<std::uint64_t>(n)),
                                tilt, c.threads));
    write_tails(c, es, "upper_tail.csv");
    json rows = json::array();
    for (const auto& e : es)
        rows.push_back(io::to_json(e));
    c.summary = {{"estimates", rows}, {"fit", fit_json(try_fit(es))}};
    io::write_json(c.artifact("upper_tail.json"), c.summary);
}

void run_lower_tail(Context& c) {
    const auto dist = io::distribution_from_config(c.cfg);
    const double gamma = c.cfg.number("gamma", 0.0);
    const double x = c.cfg.number("x");
    const double shape = c.cfg.number("shape");
    const auto ns = c.longs("n");
    const auto reps = c.cfg.integer("reps");
    const auto seed = c.read_seed();
    c.gate(lattice_cost(ns, gamma, static_cast<double>(reps)), "cells");
    std::vector<TailEstimate> es;
    for (long n : ns)
        es.push_back(lower_tail(dist, n, gamma, x, reps, substream_seed(seed, static_cast<std::uint64_t>(n)), shape,
                                c.threads));
    write_tails(c, es, "lower_tail.csv");
    json rows = json::array();
    for (const auto& e : es)
        rows.push_back(io::to_json(e));
    c.summary = {{"estimates", rows}};
    if (es.size() >= 2 && !es[0].zero_hits && !es[1].zero_hits && es[0].log_prob < 0.0)
        c.summary["superlinearity_ratio"] =
            (es[1].log_prob / static_cast<double>(es[1].n)) / (es[0].log_prob / static_cast<double>(es[0].n));
    io::write_json(c.artifact("lower_tail.json"), c.summary);
}

void run_corner(Context& c) {
    const auto dist = io::distribution_from_config(c.cfg);
    const auto ts = c.cfg.numbers("t");
    const auto ns = c.longs("n");
    const auto reps = c.cfg.integer("reps");
    const auto seed = c.read_seed();
    std::optional<RateModel> rm;
    if (c.cfg.has("rate_model"))
        rm = load_model(c);
    double cells = 0.0;
    for (long n : ns)
        cells += static_cast<double>(n / 2 + 1) * static_cast<double>(n / 2 + 1);
    c.gate(cells * static_cast<double>(reps), "cells");
    const auto results = corner_sweep(dist, ns, ts, reps, seed, c.threads);
    std::ofstream os(c.artifact("corner.csv"));
    os.precision(17);
    os << "t,n,log_prob,se,hits,reps\n";
    json rows = json::array();
    for (const auto& r : results) {
        for (const auto& e : r.estimates)
            os << r.t << ',' << e.n << ',' << e.log_prob << ',' << e.std_error << ',' << e.hits << ',' << e.reps << '\n';
        json row = {{"t", r.t}, {"fit", fit_json(r.fit)}};
        if (rm)
            row["corner_rate"] = corner_rate(*rm, r.t);
        rows.push_back(row);
    }
    c.summary = {{"results", rows}};
    io::write_json(c.artifact("corner.json"), c.summary);
    std::cout << c.summary.dump(2) << '\n';
}

void run_poisson(Context& c) {
    const double side = c.cfg.number("side");
    const double intensity = c.cfg.number("intensity", 1.0);
    const auto reps = c.cfg.integer("reps", 1);
    const auto seed = c.read_seed();
    if (!(side > 0.0) || reps < 1)
        throw ConfigError("side and reps must be positive");
    const double pts = intensity * side * side;
    c.gate(pts * std::log2(pts + 2.0) * static_cast<double>(reps), "point operations");
    std::vector<double> lengths(static_cast<std::size_t>(reps));
    for_each_replica(reps, c.threads, [&](std::int64_t r) {
        const auto cloud = sample_point_cloud({0, 0}, {side, side}, intensity, substream_seed(seed, static_cast<std::uint64_t>(r)));
        lengths[static_cast<std::size_t>(r)] = static_cast<double>(poisson_passage(cloud, {0, 0}, {side, side}));
    });
    double mean = 0.0;
    for (double v : lengths)
        mean += v;
    mean /= static_cast<double>(reps);
    double ss = 0.0;
    for (double v : lengths)
        ss += (v - mean) * (v - mean);
    const double se = reps > 1 ? std::sqrt(ss / static_cast<double>(reps - 1) / static_cast<double>(reps)) : 0.0;
    std::ofstream os(c.artifact("poisson.csv"));
    os << "rep,length\n";
    for (std::size_t r = 0; r < lengths.size(); ++r)
        os << r << ',' << lengths[r] << '\n';
    c.summary = {{"mean", mean}, {"se", se}, {"mean_over_scale", mean / (side * std::sqrt(intensity))}};
    io::write_json(c.artifact("poisson.json"), c.summary);
}

void run_polymer(Context& c) {
    const double beta = c.cfg.number("beta", 1.0);
    if (!(beta > 0.0))
        throw ConfigError("beta must be positive");
    long n = 0;
    const auto w = weights_for(c, n);
    const Vertex u{0, 0}, v{n - 1, n - 1};
    const double logz = polymer_log_partition(w, u, v, beta);
    const double T = passage_time(w, u, v);
    c.summary = {{"beta", beta},
                 {"log_partition", logz},
                 {"free_energy", logz / (beta * static_cast<double>(n))},
                 {"passage_time", T},
                 {"log_paths", detail::log_binomial(2 * (n - 1), n - 1)}};
    io::write_json(c.artifact("polymer.json"), c.summary);
}

struct Spec {
    const char* name;
    const char* help;
    std::vector<std::string> keys;
    void (*run)(Context&);
};

const std::vector<std::string> kDistKeys = {"dist", "rate", "p", "cap", "values", "probs"};

std::vector<std::string> with_dist(std::vector<std::string> keys) {
    keys.insert(keys.end(), kDistKeys.begin(), kDistKeys.end());
    return keys;
}

std::vector<Spec> specs() {
    return {
        {"sample", "sample an n x n weight array", with_dist({"n", "seed", "weights"}), run_sample},
        {"passage", "last passage time and geodesic on [0, n-1]^2", with_dist({"n", "seed", "weights"}), run_passage},
        {"geodesic", "geodesic CSV and transversals", with_dist({"n", "seed", "weights", "fractions"}), run_geodesic},
        {"rate-f", "Monte Carlo shape function", with_dist({"gamma", "n", "reps", "seed", "method"}), run_rate_f},
        {"rate-j", "Monte Carlo upper-tail rate, or a rate model table with tabulate = true",
         with_dist({"gamma", "x", "n", "reps", "seed", "method", "shape", "theta", "kappa", "tabulate", "gamma_step",
                    "x_step", "x_max"}),
         run_rate_j},
        {"theta", "perspective rate of a pair, or of disjoint pairs against a network",
         {"rate_model", "pair", "value", "network", "pairs", "h"}, run_theta},
        {"network-rate", "rate of a planted network", {"rate_model", "network", "h"}, run_network_rate},
        {"geodesic-rate", "rate of a path being the geodesic", {"rate_model", "path", "endpoints", "segments"},
         run_geodesic_rate},
        {"verify-metric", "triangle and composition checks of a planted network metric",
         {"rate_model", "network", "box", "h", "tolerance", "grid_csv"}, run_verify_metric},
        {"upper-tail", "upper-tail probabilities along n",
         with_dist({"gamma", "x", "n", "reps", "seed", "method", "theta", "kappa"}), run_upper_tail},
        {"lower-tail", "lower-tail probabilities along n", with_dist({"gamma", "x", "shape", "n", "reps", "seed"}),
         run_lower_tail},
        {"corner", "midpoint transversal tails and fitted slopes", with_dist({"t", "n", "reps", "seed", "rate_model"}),
         run_corner},
        {"poisson", "Poisson last passage on a square", {"side", "intensity", "reps", "seed"}, run_poisson},
        {"polymer", "point-to-point polymer partition function", with_dist({"n", "seed", "weights", "beta"}),
         run_polymer},
    };
}

std::string flag_of(const std::string& key) {
    std::string f = key;
    std::replace(f.begin(), f.end(), '_', '-');
    return "--" + f;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Last passage percolation experiments"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print this help");
    app.set_version_flag("--version", std::string(lpp::kVersion));

    struct Parsed {
        std::string config, manifest, out = ".";
        unsigned threads = lpp::default_threads();
        bool dry_run = false;
        std::map<std::string, std::string> values;
        std::vector<std::string> sets;
    };
    const auto all = specs();
    std::vector<Parsed> parsed(all.size());
    std::vector<CLI::App*> subs;
    for (std::size_t s = 0; s < all.size(); ++s) {
        auto* sub = app.add_subcommand(all[s].name, all[s].help);
        sub->set_help_flag("--help", "print this help");
        auto& p = parsed[s];
        sub->add_option("--config", p.config, "TOML file with an [experiment] table");
        sub->add_option("--manifest", p.manifest, "rerun the configuration recorded in a manifest");
        sub->add_option("--out", p.out, "output directory");
        sub->add_option("--threads", p.threads, "worker threads (default: LPP_THREADS or hardware)");
        sub->add_flag("--dry-run", p.dry_run, "print the cost estimate and exit");
        sub->add_option("--set", p.sets, "key=value override for any key");
        for (const auto& key : all[s].keys)
            sub->add_option(flag_of(key), p.values[key], "config key " + key);
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    for (std::size_t s = 0; s < all.size(); ++s) {
        if (!subs[s]->parsed())
            continue;
        auto& p = parsed[s];
        Context c;
        c.subcommand = all[s].name;
        c.out = p.out;
        c.threads = std::max(1u, p.threads);
        c.dry_run = p.dry_run;
        try {
            if (!p.config.empty() && !p.manifest.empty())
                throw lpp::ConfigError("--config and --manifest are exclusive");
            if (!p.config.empty())
                c.cfg = lpp::Config::load(p.config);
            if (!p.manifest.empty()) {
                const auto m = lpp::io::read_json(p.manifest);
                if (m.at("subcommand").get<std::string>() != c.subcommand)
                    throw lpp::ConfigError("manifest was written by '" + m.at("subcommand").get<std::string>() + "'");
                c.cfg = lpp::Config::parse("[experiment]\n" + m.at("config").get<std::string>(), p.manifest);
            }
            for (const auto& key : all[s].keys)
                if (subs[s]->count(flag_of(key)) > 0)
                    c.cfg.set(key, p.values[key]);
            for (const auto& kv : p.sets) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw lpp::ConfigError("--set expects key=value, got " + kv);
                c.cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
            }
            std::filesystem::create_directories(c.out);
            all[s].run(c);
            c.write_manifest();
            return 0;
        } catch (const DryRun&) {
            return 0;
        } catch (const VerifyFailed& e) {
            c.write_manifest();
            std::cerr << c.subcommand << ": check failed: " << e.what << '\n';
            return 4;
        } catch (const lpp::CapacityError& e) {
            std::cerr << "capacity error: " << e.what() << '\n';
            return 3;
        } catch (const lpp::ConfigError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return 2;
        } catch (const lpp::DomainError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return 2;
        } catch (const nlohmann::json::exception& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
    }
    return 2;
}
