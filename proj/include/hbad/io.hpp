#pragma once

// Result files: branch.csv / branch.json, solution.json, trajectory.csv,
// compare.json. Numbers are written with std::to_chars (shortest round-trip,
// locale independent) so repeated runs produce identical bytes.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include "hbad/config.hpp"
#include "hbad/continuation.hpp"
#include "hbad/error.hpp"
#include "hbad/hb.hpp"
#include "hbad/timeint.hpp"

namespace hbad::io {

namespace fs = std::filesystem;

inline std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Writes through a sibling temporary and renames, so readers never see a partial file.
inline void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot open '" + tmp.string() + "' for writing");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw Error("write to '" + tmp.string() + "' failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
    }
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------- branch ---

inline std::string branch_csv(const Branch& branch, std::size_t dofs) {
    std::string out = "index,omega_rad_s";
    for (std::size_t i = 0; i < dofs; ++i) {
        out += ",amplitude_dof_" + std::to_string(i + 1);
    }
    out += ",stability,fold,newton_iters,residual_norm\n";
    for (std::size_t k = 0; k < branch.points.size(); ++k) {
        const BranchPoint& p = branch.points[k];
        out += std::to_string(k);
        out += ',';
        out += format_double(p.omega);
        for (double a : p.amplitude) {
            out += ',';
            out += format_double(a);
        }
        out += p.stability == Stability::stable ? ",1" : ",0";
        out += p.fold ? ",1," : ",0,";
        out += std::to_string(p.report.iterations);
        out += ',';
        out += format_double(p.report.final_residual());
        out += '\n';
    }
    return out;
}

/// Everything needed to rebuild the problem and re-check every point.
inline json problem_json(const RunConfig& cfg, const HbProblem& prob) {
    json params = json::object();
    for (const auto& [k, v] : cfg.params) {
        params[k] = v;
    }
    const auto idx = prob.set().indices();
    return json{{"model", {{"name", cfg.model}, {"params", params}}},
                {"harmonics", std::vector<int>(idx.begin(), idx.end())},
                {"samples", prob.samples()},
                {"dofs", prob.dofs()},
                {"tol", cfg.newton.tol}};
}

inline json point_json(const BranchPoint& p) {
    return json{{"omega", p.omega},
                {"coeffs", p.coeffs},
                {"amplitude", p.amplitude},
                {"stability", to_string(p.stability)},
                {"max_multiplier", finite_or_null(p.max_multiplier)},
                {"fold", p.fold},
                {"newton_iters", p.report.iterations},
                {"residual_norm", finite_or_null(p.report.final_residual())}};
}

inline json branch_json(const Branch& branch, const RunConfig& cfg, const HbProblem& prob) {
    json pts = json::array();
    for (const auto& p : branch.points) {
        pts.push_back(point_json(p));
    }
    return json{{"problem", problem_json(cfg, prob)},
                {"points", pts},
                {"folds", branch.folds},
                {"gaps", branch.gaps},
                {"diagnostic", branch.diagnostic}};
}

inline void write_branch(const fs::path& dir, const Branch& branch, const RunConfig& cfg, const HbProblem& prob) {
    write_atomic(dir / "branch.csv", branch_csv(branch, prob.dofs()));
    write_atomic(dir / "branch.json", branch_json(branch, cfg, prob).dump(1) + "\n");
}

struct Verification {
    std::vector<double> residuals;  // recomputed ||B||_2 per point
    double tol = 0.0;
    bool ok = false;
};

/// Rebuilds the problem stored in a branch.json document and recomputes the
/// residual of every point. ok iff all are below the stored tolerance.
inline Verification verify_branch(const json& doc) {
    const json& pr = doc.at("problem");
    Overrides params;
    for (const auto& [k, v] : pr.at("model").at("params").items()) {
        params[k] = v.get<double>();
    }
    const HbProblem prob(make_builtin(pr.at("model").at("name").get<std::string>(), params),
                         HarmonicSet(pr.at("harmonics").get<std::vector<int>>()),
                         pr.at("samples").get<std::size_t>());
    Verification v;
    v.tol = pr.at("tol").get<double>();
    v.ok = true;
    for (const auto& p : doc.at("points")) {
        const auto coeffs = p.at("coeffs").get<std::vector<double>>();
        const double r = residual(prob, coeffs, p.at("omega").get<double>()).norm();
        v.residuals.push_back(r);
        v.ok = v.ok && r < v.tol;
    }
    return v;
}

// --------------------------------------------------------------- solution ---

inline json solution_json(const BranchPoint& p, const RunConfig& cfg, const HbProblem& prob) {
    json j = point_json(p);
    j["problem"] = problem_json(cfg, prob);
    j["converged"] = p.report.converged;
    json hist = json::array();
    for (double r : p.report.residual_history) {
        hist.push_back(finite_or_null(r));
    }
    j["residual_history"] = hist;
    j["condition_estimate"] = finite_or_null(p.report.condition_estimate);
    j["message"] = p.report.message;
    return j;
}

// ------------------------------------------------------------- trajectory ---

/// Columns t_s, then x_<i>, v_<i> per DOF. Rows with t < t_from are skipped.
inline std::string trajectory_csv(const Trajectory& traj, double t_from = -INFINITY) {
    std::string out = "t_s";
    for (std::size_t i = 0; i < traj.dofs; ++i) {
        out += ",x_" + std::to_string(i + 1) + ",v_" + std::to_string(i + 1);
    }
    out += '\n';
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (traj.times[k] < t_from) {
            continue;
        }
        out += format_double(traj.times[k]);
        for (std::size_t i = 0; i < traj.dofs; ++i) {
            out += ',';
            out += format_double(traj.x(k, i));
            out += ',';
            out += format_double(traj.v(k, i));
        }
        out += '\n';
    }
    return out;
}

}  // namespace hbad::io
