#pragma once

// JSON run configuration. The schema is published in docs/config.schema.json.
// A document may carry a "runs" array; each entry is merge-patched over the
// base document to form one independent job.

#include "json.hpp"

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hbad/continuation.hpp"
#include "hbad/error.hpp"
#include "hbad/fourier.hpp"
#include "hbad/hb.hpp"
#include "hbad/models/builtin.hpp"
#include "hbad/stability.hpp"
#include "hbad/timeint.hpp"

namespace hbad {

using json = nlohmann::json;

struct HarmonicSpec {
    enum class Kind { max_order, indices, dual };
    Kind kind = Kind::max_order;
    int max_order = 5;
    std::vector<int> indices;
    int p = 0;
    int q = 0;
    int cutoff = 0;
    int order = 3;
    std::size_t samples = 0;  // 0: smallest power of two >= 4 k_max

    HarmonicSet build() const {
        switch (kind) {
            case Kind::max_order: return HarmonicSet::contiguous(max_order);
            case Kind::indices: return HarmonicSet(indices);
            case Kind::dual: return HarmonicSet::dual_frequency(p, q, cutoff, order);
        }
        throw ConfigError("unknown harmonic-set kind");
    }
};

struct OmegaSpec {
    std::optional<double> value;
    std::optional<double> start;
    std::optional<double> end;
    std::optional<double> step;
    std::vector<double> list;
    std::optional<double> min;
    std::optional<double> max;
};

enum class InitialGuess { zero, linear, random };

struct RunConfig {
    std::string model = "duffing";
    Overrides params;
    HarmonicSpec harmonics;
    OmegaSpec omega;
    NewtonOptions newton;
    TraceOptions continuation;
    bool stability = true;
    FloquetOptions floquet;
    SteadyRunOptions integrator;
    int record_periods = 0;  // timesim: trailing periods written; 0 = all
    InitialGuess initial_guess = InitialGuess::linear;
    double random_scale = 0.1;  // relative perturbation of the linear guess
    std::uint64_t seed = 0;
    double warm_offset = 0.0;   // compare: warm start taken from omega - warm_offset; 0 = 1% of omega
    json source;                // effective document of this run

    std::shared_ptr<const SystemModel> build_model() const { return make_builtin(model, params); }
    HbProblem build_problem() const { return HbProblem(build_model(), harmonics.build(), harmonics.samples); }
};

namespace detail {

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) {
        throw ConfigError(where + ": expected an object");
    }
    for (const auto& [key, _] : obj.items()) {
        bool known = false;
        for (const char* k : keys) {
            known = known || key == k;
        }
        if (!known) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

template <class T>
T get(const json& obj, const char* key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (obj.contains(key)) {
        out = get<T>(obj, key, where);
    }
}

template <class T>
void read(const json& obj, const char* key, std::optional<T>& out, const std::string& where) {
    if (obj.contains(key)) {
        out = get<T>(obj, key, where);
    }
}

inline HarmonicSpec parse_harmonics(const json& h, const std::string& model_name) {
    HarmonicSpec spec;
    if (h.is_null()) {
        if (model_name == "dual_rotor") {
            spec.kind = HarmonicSpec::Kind::dual;
        }
        return spec;
    }
    reject_unknown(h, "harmonics", {"max_order", "indices", "dual", "samples"});
    const int kinds = static_cast<int>(h.contains("max_order")) + static_cast<int>(h.contains("indices")) +
                      static_cast<int>(h.contains("dual"));
    if (kinds > 1) {
        throw ConfigError("harmonics: give exactly one of max_order, indices, dual");
    }
    read(h, "samples", spec.samples, "harmonics");
    if (h.contains("indices")) {
        spec.kind = HarmonicSpec::Kind::indices;
        spec.indices = get<std::vector<int>>(h, "indices", "harmonics");
    } else if (h.contains("dual")) {
        spec.kind = HarmonicSpec::Kind::dual;
        const json& d = h.at("dual");
        reject_unknown(d, "harmonics.dual", {"p", "q", "cutoff", "order"});
        read(d, "p", spec.p, "harmonics.dual");
        read(d, "q", spec.q, "harmonics.dual");
        read(d, "cutoff", spec.cutoff, "harmonics.dual");
        read(d, "order", spec.order, "harmonics.dual");
    } else {
        read(h, "max_order", spec.max_order, "harmonics");
    }
    if (kinds == 0 && model_name == "dual_rotor") {
        spec.kind = HarmonicSpec::Kind::dual;
    }
    return spec;
}

// Dual sets left unspecified follow the model's speed ratio, cutoff 2 max(p, q).
inline void complete_dual(HarmonicSpec& spec, const SystemModel& model) {
    if (spec.kind != HarmonicSpec::Kind::dual) {
        return;
    }
    if (const auto* dual = dynamic_cast<const DualRotorModel*>(&model)) {
        if (spec.p == 0) spec.p = dual->params().ratio_p;
        if (spec.q == 0) spec.q = dual->params().ratio_q;
    }
    if (spec.p <= 0 || spec.q <= 0) {
        throw ConfigError("harmonics.dual: p and q are required for this model");
    }
    if (spec.cutoff == 0) {
        spec.cutoff = 2 * std::max(spec.p, spec.q);
    }
    if (model.base_divisor() != spec.q) {
        throw ConfigError("harmonics.dual: q must equal the model's base divisor (" +
                          std::to_string(model.base_divisor()) + ")");
    }
}

}  // namespace detail

/// One run from an effective JSON document. Validates the model, harmonic set
/// and every numeric setting.
inline RunConfig parse_run(const json& doc) {
    using detail::read;
    RunConfig cfg;
    cfg.source = doc;
    detail::reject_unknown(doc, "config", {"model", "harmonics", "omega", "newton", "continuation", "stability",
                                           "integrator", "initial_guess", "seed", "compare", "runs"});
    if (!doc.contains("model")) {
        throw ConfigError("config: 'model' is required");
    }
    const json& m = doc.at("model");
    if (m.is_string()) {
        cfg.model = m.get<std::string>();
    } else {
        detail::reject_unknown(m, "model", {"name", "params"});
        cfg.model = detail::get<std::string>(m, "name", "model");
        if (m.contains("params")) {
            const json& p = m.at("params");
            if (!p.is_object()) {
                throw ConfigError("model.params: expected an object of numbers");
            }
            for (const auto& [key, value] : p.items()) {
                if (!value.is_number()) {
                    throw ConfigError("model.params." + key + ": expected a number");
                }
                cfg.params[key] = value.get<double>();
            }
        }
    }

    cfg.harmonics = detail::parse_harmonics(doc.value("harmonics", json()), cfg.model);

    if (doc.contains("omega")) {
        const json& w = doc.at("omega");
        detail::reject_unknown(w, "omega", {"value", "start", "end", "step", "list", "min", "max"});
        read(w, "value", cfg.omega.value, "omega");
        read(w, "start", cfg.omega.start, "omega");
        read(w, "end", cfg.omega.end, "omega");
        read(w, "step", cfg.omega.step, "omega");
        read(w, "list", cfg.omega.list, "omega");
        read(w, "min", cfg.omega.min, "omega");
        read(w, "max", cfg.omega.max, "omega");
    }
    if (doc.contains("newton")) {
        const json& n = doc.at("newton");
        detail::reject_unknown(n, "newton", {"tol", "max_iter"});
        read(n, "tol", cfg.newton.tol, "newton");
        read(n, "max_iter", cfg.newton.max_iter, "newton");
    }
    if (!(cfg.newton.tol > 0.0) || cfg.newton.max_iter < 0) {
        throw ConfigError("newton: tol must be positive and max_iter non-negative");
    }
    cfg.continuation.tol = cfg.newton.tol;
    if (doc.contains("continuation")) {
        const json& c = doc.at("continuation");
        detail::reject_unknown(c, "continuation", {"ds", "ds_min", "ds_max", "max_points", "omega_scale",
                                                   "coeff_scale", "direction", "corrector_max_iter",
                                                   "min_tangent_cos"});
        auto& t = cfg.continuation;
        read(c, "ds", t.ds, "continuation");
        read(c, "ds_min", t.ds_min, "continuation");
        read(c, "ds_max", t.ds_max, "continuation");
        read(c, "max_points", t.max_points, "continuation");
        read(c, "omega_scale", t.omega_scale, "continuation");
        read(c, "coeff_scale", t.coeff_scale, "continuation");
        read(c, "direction", t.direction, "continuation");
        read(c, "corrector_max_iter", t.corrector_max_iter, "continuation");
        read(c, "min_tangent_cos", t.min_tangent_cos, "continuation");
        if (!(t.ds_min > 0.0 && t.ds_min <= t.ds && t.ds <= t.ds_max) || t.max_points < 1 ||
            (t.direction != 1 && t.direction != -1) || t.omega_scale < 0.0 || t.coeff_scale < 0.0) {
            throw ConfigError("continuation: need 0 < ds_min <= ds <= ds_max, max_points >= 1, direction +-1, "
                              "non-negative scales");
        }
    }
    if (doc.contains("stability")) {
        const json& s = doc.at("stability");
        if (s.is_boolean()) {
            cfg.stability = s.get<bool>();
        } else {
            detail::reject_unknown(s, "stability", {"enabled", "substeps", "tol"});
            read(s, "enabled", cfg.stability, "stability");
            read(s, "substeps", cfg.floquet.substeps, "stability");
            read(s, "tol", cfg.floquet.tol, "stability");
        }
        if (cfg.floquet.substeps < 1 || !(cfg.floquet.tol > 0.0)) {
            throw ConfigError("stability: substeps >= 1 and tol > 0 required");
        }
    }
    cfg.continuation.stability = cfg.stability;
    cfg.continuation.floquet = cfg.floquet;
    if (doc.contains("integrator")) {
        const json& i = doc.at("integrator");
        detail::reject_unknown(i, "integrator", {"method", "steps_per_period", "discard_periods", "record_periods",
                                                 "beta", "gamma", "x0", "v0"});
        const std::string method = i.value("method", std::string("newmark"));
        if (method == "rk4") {
            cfg.integrator.method = Integrator::rk4;
        } else if (method == "newmark") {
            cfg.integrator.method = Integrator::newmark;
        } else {
            throw ConfigError("integrator.method: expected 'rk4' or 'newmark'");
        }
        read(i, "steps_per_period", cfg.integrator.steps_per_period, "integrator");
        read(i, "discard_periods", cfg.integrator.discard_periods, "integrator");
        read(i, "record_periods", cfg.record_periods, "integrator");
        read(i, "beta", cfg.integrator.newmark.beta, "integrator");
        read(i, "gamma", cfg.integrator.newmark.gamma, "integrator");
        read(i, "x0", cfg.integrator.x0, "integrator");
        read(i, "v0", cfg.integrator.v0, "integrator");
    }
    if (cfg.integrator.steps_per_period < 4 || cfg.integrator.discard_periods < 1 || cfg.record_periods < 0 ||
        !(cfg.integrator.newmark.beta > 0.0) || !(cfg.integrator.newmark.gamma >= 0.5)) {
        throw ConfigError("integrator: steps_per_period >= 4, discard_periods >= 1, record_periods >= 0, "
                          "beta > 0, gamma >= 1/2 required");
    }
    if (doc.contains("initial_guess")) {
        const json& g = doc.at("initial_guess");
        std::string kind;
        if (g.is_string()) {
            kind = g.get<std::string>();
        } else {
            detail::reject_unknown(g, "initial_guess", {"kind", "scale"});
            kind = detail::get<std::string>(g, "kind", "initial_guess");
            read(g, "scale", cfg.random_scale, "initial_guess");
        }
        if (kind == "zero") {
            cfg.initial_guess = InitialGuess::zero;
        } else if (kind == "linear") {
            cfg.initial_guess = InitialGuess::linear;
        } else if (kind == "random") {
            cfg.initial_guess = InitialGuess::random;
        } else {
            throw ConfigError("initial_guess: expected 'zero', 'linear' or 'random'");
        }
        if (!(cfg.random_scale >= 0.0)) {
            throw ConfigError("initial_guess.scale must be non-negative");
        }
    }
    read(doc, "seed", cfg.seed, "config");
    if (doc.contains("compare")) {
        const json& c = doc.at("compare");
        detail::reject_unknown(c, "compare", {"warm_offset"});
        read(c, "warm_offset", cfg.warm_offset, "compare");
        if (cfg.warm_offset < 0.0) {
            throw ConfigError("compare.warm_offset must be non-negative");
        }
    }

    // Model invariants and harmonic-set consistency, before any run starts.
    const auto model = cfg.build_model();
    detail::complete_dual(cfg.harmonics, *model);
    const HbProblem prob(model, cfg.harmonics.build(), cfg.harmonics.samples);
    const auto n = model->dofs();
    if ((!cfg.integrator.x0.empty() && cfg.integrator.x0.size() != n) ||
        (!cfg.integrator.v0.empty() && cfg.integrator.v0.size() != n)) {
        throw ConfigError("integrator.x0 / v0 must have one entry per DOF (" + std::to_string(n) + ")");
    }
    return cfg;
}

/// All runs of a configuration document.
inline std::vector<RunConfig> parse_config(const json& doc) {
    if (!doc.is_object()) {
        throw ConfigError("config: top level must be an object");
    }
    std::vector<RunConfig> runs;
    if (doc.contains("runs")) {
        const json& list = doc.at("runs");
        if (!list.is_array() || list.empty()) {
            throw ConfigError("config.runs: expected a non-empty array of objects");
        }
        json base = doc;
        base.erase("runs");
        for (std::size_t k = 0; k < list.size(); ++k) {
            json effective = base;
            effective.merge_patch(list[k]);
            try {
                runs.push_back(parse_run(effective));
            } catch (const ConfigError& e) {
                throw ConfigError("runs[" + std::to_string(k) + "]: " + e.what());
            }
        }
    } else {
        runs.push_back(parse_run(doc));
    }
    return runs;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
}

}  // namespace hbad
