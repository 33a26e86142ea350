#pragma once

// Config-described experiments: a declarative spec (JSON file, flag-overridable)
// that round-trips losslessly, a result record with the spec hash and pass/fail
// flags, and parsers for the model/psi/box mini-languages used by the CLI.

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraclat/dioph.hpp"
#include "fraclat/ifs.hpp"
#include "fraclat/serialize.hpp"

namespace fraclat {

inline const char* kVersionString = "fraclat 0.1.0";

inline const std::set<std::string>& known_subcommands() {
    static const std::set<std::string> cmds = {
        "sample", "count", "dani-check", "walk", "recurrence", "ball-mass",
        "equidist", "double-corr", "haar-siegel", "mnc", "obstruction",
        "witness", "staircases", "nonconc", "selftest", "presets"};
    return cmds;
}

struct ExperimentSpec {
    std::string subcommand;
    nlohmann::json model;   // preset name (string) or inline table (object)
    nlohmann::json params;  // subcommand-specific parameter table
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned threads = 0;
    std::string output;  // path prefix for CSV/JSON artifacts

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["subcommand"] = subcommand;
        if (!model.is_null()) j["model"] = model;
        j["params"] = params.is_null() ? nlohmann::json::object() : params;
        if (seed_set) j["seed"] = seed;
        if (threads) j["threads"] = threads;
        if (!output.empty()) j["output"] = output;
        return j;
    }

    static ExperimentSpec from_json(const nlohmann::json& j) {
        static const std::set<std::string> known = {"subcommand", "model", "params",
                                                    "seed", "threads", "output"};
        for (const auto& [key, _] : j.items())
            if (!known.count(key))
                throw std::invalid_argument("ExperimentSpec: unknown field '" + key + "'");
        ExperimentSpec spec;
        spec.subcommand = j.at("subcommand").get<std::string>();
        if (!known_subcommands().count(spec.subcommand))
            throw std::invalid_argument("ExperimentSpec: unknown subcommand '" + spec.subcommand + "'");
        if (j.contains("model")) spec.model = j.at("model");
        if (j.contains("params")) {
            if (!j.at("params").is_object())
                throw std::invalid_argument("ExperimentSpec: params must be a table");
            spec.params = j.at("params");
        } else {
            spec.params = nlohmann::json::object();
        }
        if (j.contains("seed")) {
            spec.seed = j.at("seed").get<std::uint64_t>();
            spec.seed_set = true;
        }
        if (j.contains("threads")) spec.threads = j.at("threads").get<unsigned>();
        if (j.contains("output")) spec.output = j.at("output").get<std::string>();
        return spec;
    }

    static ExperimentSpec load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot open spec file: " + path);
        nlohmann::json j;
        f >> j;
        return from_json(j);
    }

    // FNV-1a over the canonical (sorted-key) dump.
    std::string hash() const {
        const std::string dump = to_json().dump();
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : dump) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        char buf[20];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

struct Assertion {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ResultRecord {
    std::string spec_hash;
    std::string version = kVersionString;
    double wall_time_s = 0.0;
    nlohmann::json statistics = nlohmann::json::object();
    std::vector<Assertion> assertions;

    bool all_pass() const {
        for (const auto& a : assertions)
            if (!a.pass) return false;
        return true;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["spec_hash"] = spec_hash;
        j["version"] = version;
        j["wall_time_s"] = wall_time_s;
        j["statistics"] = statistics;
        j["assertions"] = nlohmann::json::array();
        for (const auto& a : assertions)
            j["assertions"].push_back({{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
        j["pass"] = all_pass();
        return j;
    }
};

// ---------------------------------------------------------------------------
// Mini-language parsers shared by CLI flags and config files

// "power:a=0.5,c=1" | "powerlog:a=1,b=2,c=1" | JSON {"family":...}
inline ApproxFunction psi_from_string(const std::string& text) {
    const auto colon = text.find(':');
    const std::string family = text.substr(0, colon);
    double a = 1.0, b = 0.0, c = 1.0;
    if (colon != std::string::npos) {
        std::istringstream in(text.substr(colon + 1));
        std::string kv;
        while (std::getline(in, kv, ',')) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("psi: expected key=value in '" + kv + "'");
            const std::string key = kv.substr(0, eq);
            const double val = std::stod(kv.substr(eq + 1));
            if (key == "a") a = val;
            else if (key == "b") b = val;
            else if (key == "c") c = val;
            else throw std::invalid_argument("psi: unknown parameter '" + key + "'");
        }
    }
    if (family == "power") return ApproxFunction::power(c, a);
    if (family == "powerlog" || family == "power-log") return ApproxFunction::power_log(c, a, b);
    throw std::invalid_argument("psi: unknown family '" + family + "'");
}

inline ApproxFunction psi_from_json(const nlohmann::json& j) {
    if (j.is_string()) return psi_from_string(j.get<std::string>());
    const std::string family = j.at("family").get<std::string>();
    if (family == "power")
        return ApproxFunction::power(j.value("c", 1.0), j.value("a", 1.0));
    if (family == "powerlog" || family == "power-log")
        return ApproxFunction::power_log(j.value("c", 1.0), j.value("a", 1.0), j.value("b", 0.0));
    if (family == "table")
        return ApproxFunction::table(j.at("values").get<std::vector<double>>());
    throw std::invalid_argument("psi: unknown family '" + family + "'");
}

inline nlohmann::json psi_to_json(const ApproxFunction& psi) {
    nlohmann::json j;
    switch (psi.family()) {
        case ApproxFunction::Family::Power:
            j["family"] = "power";
            j["c"] = psi.param_c();
            j["a"] = psi.param_a();
            break;
        case ApproxFunction::Family::PowerLog:
            j["family"] = "powerlog";
            j["c"] = psi.param_c();
            j["a"] = psi.param_a();
            j["b"] = psi.param_b();
            break;
        case ApproxFunction::Family::Table:
            j["family"] = "table";
            break;
    }
    return j;
}

// Inline model table: {"dimension":d, "label":..., "maps":[{"weight":w,
// "ratio":r, "rotation":[row-major]| omitted for identity, "translation":[...]}]}
inline IFSModel model_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        const auto paren = name.find('(');
        if (paren != std::string::npos) {
            const double param = std::stod(name.substr(paren + 1));
            return ifs_preset(name.substr(0, paren), param);
        }
        return ifs_preset(name);
    }
    static const std::set<std::string> known = {"dimension", "label", "maps"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw std::invalid_argument("model: unknown field '" + key + "'");
    const int d = j.at("dimension").get<int>();
    std::vector<WeightedMap> maps;
    for (const auto& mj : j.at("maps")) {
        static const std::set<std::string> mknown = {"weight", "ratio", "rotation", "translation"};
        for (const auto& [key, _] : mj.items())
            if (!mknown.count(key)) throw std::invalid_argument("map: unknown field '" + key + "'");
        const double w = mj.at("weight").get<double>();
        const double r = mj.at("ratio").get<double>();
        Eigen::MatrixXd O = Eigen::MatrixXd::Identity(d, d);
        if (mj.contains("rotation")) {
            const auto entries = mj.at("rotation").get<std::vector<double>>();
            if (entries.size() != static_cast<std::size_t>(d) * static_cast<std::size_t>(d))
                throw std::invalid_argument("map: rotation must have d*d row-major entries");
            for (int i = 0; i < d; ++i)
                for (int jj = 0; jj < d; ++jj)
                    O(i, jj) = entries[static_cast<std::size_t>(i * d + jj)];
        }
        const auto tr = mj.at("translation").get<std::vector<double>>();
        if (tr.size() != static_cast<std::size_t>(d))
            throw std::invalid_argument("map: translation must have d entries");
        Eigen::VectorXd b(d);
        for (int i = 0; i < d; ++i) b[i] = tr[static_cast<std::size_t>(i)];
        maps.push_back({w, Similarity(r, O, b)});
    }
    return IFSModel(d, std::move(maps), j.value("label", std::string("inline")));
}

// "0,1.5x0,1.5" -> closed box; per-coordinate segments separated by 'x'
inline Box box_from_string(const std::string& text) {
    std::vector<double> lo, hi;
    std::istringstream in(text);
    std::string segment;
    while (std::getline(in, segment, 'x')) {
        const auto comma = segment.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("box: expected lo,hi in '" + segment + "'");
        lo.push_back(std::stod(segment.substr(0, comma)));
        hi.push_back(std::stod(segment.substr(comma + 1)));
    }
    Eigen::VectorXd l(static_cast<Eigen::Index>(lo.size())), u(static_cast<Eigen::Index>(hi.size()));
    for (std::size_t i = 0; i < lo.size(); ++i) {
        l[static_cast<Eigen::Index>(i)] = lo[i];
        u[static_cast<Eigen::Index>(i)] = hi[i];
    }
    return Box::closed(l, u);
}

inline Box box_from_json_or_string(const nlohmann::json& j) {
    if (j.is_string()) return box_from_string(j.get<std::string>());
    return box_from_json(j);
}

}  // namespace fraclat
