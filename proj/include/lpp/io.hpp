#pragma once

// Serialization: distributions, paths, networks and rate models as JSON;
// geodesics, grids and tail estimates as CSV; lattice weights as raw
// little-endian float64 with a JSON sidecar.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "lpp/config.hpp"
#include "lpp/error.hpp"
#include "lpp/geometry.hpp"
#include "lpp/mc_harness.hpp"
#include "lpp/metrics.hpp"
#include "lpp/passage.hpp"
#include "lpp/rate_model.hpp"
#include "lpp/weights.hpp"

namespace lpp::io {

using json = nlohmann::json;

// -- distributions -----------------------------------------------------------

//! Builds a distribution from its kind and named parameters:
//! exponential {rate}, geometric {p}, truncated-geometric {p, cap},
//! table {values, probs}.
inline WeightDistribution make_distribution(const std::string& kind, const json& params) {
    auto num = [&](const char* k, double fallback, bool required) {
        if (params.contains(k))
            return params.at(k).get<double>();
        if (required)
            throw ConfigError("distribution '" + kind + "' needs parameter '" + k + "'");
        return fallback;
    };
    for (const auto& [k, v] : params.items()) {
        static const std::map<std::string, std::vector<std::string>> allowed = {
            {"exponential", {"rate"}},
            {"geometric", {"p"}},
            {"truncated-geometric", {"p", "cap"}},
            {"table", {"values", "probs"}}};
        const auto it = allowed.find(kind);
        if (it != allowed.end() && std::find(it->second.begin(), it->second.end(), k) == it->second.end())
            throw ConfigError("distribution '" + kind + "' has no parameter '" + k + "'");
    }
    if (kind == "exponential")
        return WeightDistribution::exponential(num("rate", 1.0, false));
    if (kind == "geometric")
        return WeightDistribution::geometric(num("p", 0.5, true));
    if (kind == "truncated-geometric")
        return WeightDistribution::capped_geometric(num("p", 0.5, true), static_cast<int>(num("cap", 0, true)));
    if (kind == "table") {
        if (!params.contains("values") || !params.contains("probs"))
            throw ConfigError("distribution 'table' needs 'values' and 'probs'");
        return WeightDistribution::table(params.at("values").get<std::vector<double>>(),
                                         params.at("probs").get<std::vector<double>>());
    }
    throw ConfigError("unknown distribution kind '" + kind + "'");
}

inline json to_json(const WeightDistribution& d) {
    json params = json::object();
    std::string kind;
    switch (d.kind()) {
    case WeightDistribution::Kind::exponential:
        kind = "exponential";
        params["rate"] = d.rate();
        break;
    case WeightDistribution::Kind::geometric:
        kind = "geometric";
        params["p"] = d.success();
        break;
    case WeightDistribution::Kind::capped_geometric:
        kind = "truncated-geometric";
        params["p"] = d.success();
        params["cap"] = d.cap();
        break;
    case WeightDistribution::Kind::table:
        kind = "table";
        params["values"] = std::vector<double>(d.support().begin(), d.support().end());
        params["probs"] = std::vector<double>(d.masses().begin(), d.masses().end());
        break;
    }
    return {{"kind", kind}, {"params", params}};
}

inline WeightDistribution distribution_from_json(const json& j) {
    return make_distribution(j.at("kind").get<std::string>(), j.value("params", json::object()));
}

//! Reads `dist` plus its parameters (`rate`, `p`, `cap`, `values`, `probs`) from a flat config.
inline WeightDistribution distribution_from_config(Config& cfg, const std::string& fallback_kind = "exponential") {
    const std::string kind = cfg.string("dist", fallback_kind);
    json params = json::object();
    for (const char* k : {"rate", "p", "cap"})
        if (cfg.has(k))
            params[k] = cfg.number(k);
    for (const char* k : {"values", "probs"})
        if (cfg.has(k))
            params[k] = cfg.numbers(k);
    return make_distribution(kind, params);
}

// -- paths and networks --------------------------------------------------------

inline json to_json(const DirectedPath& f) {
    json a = json::array();
    for (const auto& k : f.knots())
        a.push_back({k.t, k.x});
    return a;
}

inline DirectedPath path_from_json(const json& j) {
    std::vector<PathKnot> knots;
    for (const auto& k : j) {
        if (!k.is_array() || k.size() != 2)
            throw ConfigError("path knots must be [time, space] pairs");
        knots.push_back({k[0].get<double>(), k[1].get<double>()});
    }
    return DirectedPath(std::move(knots));
}

inline json to_json(const WeightProfile& w) {
    json a = json::array();
    for (const auto& k : w.knots())
        a.push_back({k.t, k.w});
    return a;
}

inline WeightProfile profile_from_json(const json& j) {
    std::vector<WeightProfile::Knot> knots;
    for (const auto& k : j) {
        if (!k.is_array() || k.size() != 2)
            throw ConfigError("profile knots must be [time, weight] pairs");
        knots.push_back({k[0].get<double>(), k[1].get<double>()});
    }
    return WeightProfile(std::move(knots));
}

inline json network_to_json(std::span<const Planting> plantings) {
    json a = json::array();
    for (const auto& p : plantings)
        a.push_back({{"path", to_json(p.path)}, {"profile", to_json(p.profile)}});
    return a;
}

inline std::vector<Planting> network_from_json(const json& j) {
    if (!j.is_array())
        throw ConfigError("a network is a JSON array of {path, profile} objects");
    std::vector<Planting> out;
    for (const auto& e : j) {
        for (const auto& [k, v] : e.items())
            if (k != "path" && k != "profile")
                throw ConfigError("unknown network key '" + k + "'");
        out.push_back({path_from_json(e.at("path")), profile_from_json(e.at("profile"))});
    }
    return out;
}

// -- rate models -----------------------------------------------------------------

inline json to_json(const RateModel& rm) {
    const auto& F = rm.shape_table();
    const auto& J = rm.rate_table();
    return {{"dist", to_json(rm.distribution())},
            {"F", {{"gammas", F.gammas}, {"values", F.values}, {"provenance", rm.provenance().shape}}},
            {"J", {{"gammas", J.gammas}, {"xs", J.xs}, {"values", J.values}, {"provenance", rm.provenance().rate}}}};
}

inline RateModel rate_model_from_json(const json& j) {
    ShapeTable F{j.at("F").at("gammas").get<std::vector<double>>(), j.at("F").at("values").get<std::vector<double>>()};
    RateTable J{j.at("J").at("gammas").get<std::vector<double>>(), j.at("J").at("xs").get<std::vector<double>>(),
                j.at("J").at("values").get<std::vector<std::vector<double>>>()};
    Provenance prov{j.at("F").value("provenance", "supplied"), j.at("J").value("provenance", "supplied")};
    return RateModel(distribution_from_json(j.at("dist")), std::move(F), std::move(J), std::move(prov));
}

inline json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write " + path);
    out << j.dump(2) << '\n';
}

// -- CSV -----------------------------------------------------------------------

inline void write_geodesic_csv(std::ostream& os, const LatticePath& g) {
    os << "i,j,x,t\n";
    for (const auto& v : g.vertices()) {
        const SpaceTimePoint p = rotate(v);
        os << v.i << ',' << v.j << ',' << p.x << ',' << p.t << '\n';
    }
}

inline void write_grid_csv(std::ostream& os, const GridFunction& g) {
    os << "x,s,y,t,value\n";
    os.precision(17);
    for (long p = 0; p < g.size(); ++p)
        for (long q = 0; q < g.size(); ++q) {
            if (!g.ordered(p, q))
                continue;
            const SpaceTimePoint a = g.point(p);
            const SpaceTimePoint b = g.point(q);
            os << a.x << ',' << a.t << ',' << b.x << ',' << b.t << ',' << g.at(p, q) << '\n';
        }
}

inline void write_tail_header(std::ostream& os) { os << "n,threshold,log_prob,se,hits,reps,method,seed\n"; }

inline void write_tail_row(std::ostream& os, const TailEstimate& e) {
    os.precision(17);
    os << e.n << ',' << e.threshold << ',' << e.log_prob << ',' << e.std_error << ',' << e.hits << ',' << e.reps << ','
       << e.method << ',' << e.seed << '\n';
}

inline json to_json(const TailEstimate& e) {
    auto finite = [](double v) -> json { return std::isfinite(v) ? json(v) : json(v > 0 ? "inf" : "-inf"); };
    return {{"n", e.n},         {"threshold", e.threshold}, {"log_prob", finite(e.log_prob)},
            {"se", finite(e.std_error)}, {"hits", e.hits}, {"reps", e.reps},
            {"method", e.method}, {"seed", e.seed},      {"zero_hits", e.zero_hits},
            {"degenerate", e.degenerate}};
}

// -- raw weights -------------------------------------------------------------------

//! Writes values as little-endian float64 to `path` and {n, dist, seed} to `path`.json.
inline void write_weights(const std::string& path, const LatticeWeights& w) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write " + path);
    for (double v : w.values()) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        if constexpr (std::endian::native == std::endian::big)
            bits = __builtin_bswap64(bits);
        char buf[8];
        std::memcpy(buf, &bits, 8);
        out.write(buf, 8);
    }
    write_json(path + ".json", {{"n", w.n()}, {"dist", to_json(w.distribution())}, {"seed", w.seed()}});
}

inline LatticeWeights read_weights(const std::string& path) {
    const json side = read_json(path + ".json");
    const long n = side.at("n").get<long>();
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open " + path);
    std::vector<double> values(static_cast<std::size_t>(n * n));
    for (auto& v : values) {
        char buf[8];
        if (!in.read(buf, 8))
            throw ConfigError(path + ": file shorter than n*n values");
        std::uint64_t bits;
        std::memcpy(&bits, buf, 8);
        if constexpr (std::endian::native == std::endian::big)
            bits = __builtin_bswap64(bits);
        v = std::bit_cast<double>(bits);
    }
    return LatticeWeights(n, std::move(values), side.at("seed").get<std::uint64_t>(),
                          distribution_from_json(side.at("dist")));
}

} // namespace lpp::io
