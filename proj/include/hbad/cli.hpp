#pragma once

// Command implementations behind the hbad executable. Each command runs one
// RunConfig into one output directory and returns a process exit code;
// run_all() validates every run first and executes them as independent jobs.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hbad/config.hpp"
#include "hbad/continuation.hpp"
#include "hbad/error.hpp"
#include "hbad/hb.hpp"
#include "hbad/io.hpp"
#include "hbad/stability.hpp"
#include "hbad/timeint.hpp"

namespace hbad::cli {

namespace fs = std::filesystem;

enum ExitCode : int { success = 0, config_error = 1, numerical_failure = 2 };

enum class Command { solve, sweep, trace, timesim, compare };

inline const char* to_string(Command c) {
    switch (c) {
        case Command::solve: return "solve";
        case Command::sweep: return "sweep";
        case Command::trace: return "trace";
        case Command::timesim: return "timesim";
        case Command::compare: return "compare";
    }
    return "?";
}

/// Per-run stream derived from the global seed; the mixing step (splitmix64)
/// keeps neighbouring run indices uncorrelated.
inline std::uint64_t run_seed(std::uint64_t seed, std::size_t run) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (run + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Uniform in [-1, 1) from the raw 64-bit engine output, independent of the
/// standard library's distribution implementations.
inline double symmetric_uniform(std::mt19937_64& rng) {
    return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
}

inline std::vector<double> initial_guess(const RunConfig& cfg, const HbProblem& prob, double omega,
                                         std::uint64_t seed) {
    switch (cfg.initial_guess) {
        case InitialGuess::zero: return std::vector<double>(prob.unknowns(), 0.0);
        case InitialGuess::linear: return linear_response(prob, omega);
        case InitialGuess::random: {
            std::vector<double> g = linear_response(prob, omega);
            double scale = 0.0;
            for (double c : g) {
                scale = std::max(scale, std::abs(c));
            }
            std::mt19937_64 rng(seed);
            for (double& c : g) {
                c += cfg.random_scale * scale * symmetric_uniform(rng);
            }
            return g;
        }
    }
    return linear_response(prob, omega);
}

inline double require(const std::optional<double>& v, const char* what) {
    if (!v) {
        throw ConfigError(std::string("omega.") + what + " is required for this command");
    }
    return *v;
}

inline double omega_value(const RunConfig& cfg) {
    if (cfg.omega.value) {
        return *cfg.omega.value;
    }
    return require(cfg.omega.start, "value");
}

/// Command-specific checks that need no computation.
inline void validate_for(Command cmd, const RunConfig& cfg) {
    auto positive = [](double w, const char* what) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw ConfigError(std::string("omega.") + what + " must be positive and finite");
        }
    };
    switch (cmd) {
        case Command::solve:
        case Command::timesim: positive(omega_value(cfg), "value"); break;
        case Command::sweep: {
            const double a = require(cfg.omega.start, "start");
            const double b = require(cfg.omega.end, "end");
            const double s = require(cfg.omega.step, "step");
            positive(a, "start");
            positive(b, "end");
            if (s == 0.0 || (b - a) * s < 0.0) {
                throw ConfigError("omega.step must be non-zero and point from start to end");
            }
            break;
        }
        case Command::trace: {
            positive(require(cfg.omega.start, "start"), "start");
            if (!cfg.omega.end && !(cfg.omega.min && cfg.omega.max)) {
                throw ConfigError("trace needs omega.end or both omega.min and omega.max");
            }
            break;
        }
        case Command::compare: {
            if (cfg.omega.list.empty()) {
                throw ConfigError("compare needs a non-empty omega.list");
            }
            for (double w : cfg.omega.list) {
                positive(w, "list[]");
            }
            break;
        }
    }
}

inline void classify_point(const RunConfig& cfg, const HbProblem& prob, BranchPoint& pt) {
    if (cfg.stability && pt.report.converged) {
        const FloquetResult fr = floquet(prob, pt.coeffs, pt.omega, cfg.floquet);
        pt.stability = fr.classification;
        pt.max_multiplier = fr.max_magnitude;
    }
}

inline std::string amplitude_text(const std::vector<double>& amp) {
    std::ostringstream s;
    s << std::setprecision(6);
    for (std::size_t i = 0; i < amp.size(); ++i) {
        s << (i ? " " : "") << amp[i];
    }
    return s.str();
}

// ------------------------------------------------------------------ solve ---

inline int cmd_solve(const RunConfig& cfg, const fs::path& dir, std::uint64_t seed, std::ostream& log) {
    const HbProblem prob = cfg.build_problem();
    const double omega = omega_value(cfg);
    BranchPoint pt = solve_point(prob, omega, cfg.newton, initial_guess(cfg, prob, omega, seed));
    classify_point(cfg, prob, pt);
    io::write_atomic(dir / "solution.json", io::solution_json(pt, cfg, prob).dump(1) + "\n");
    log << "solve omega=" << omega << " converged=" << (pt.report.converged ? "yes" : "no")
        << " iterations=" << pt.report.iterations << " residual=" << pt.report.final_residual()
        << " stability=" << hbad::to_string(pt.stability) << "\n  amplitude: " << amplitude_text(pt.amplitude) << "\n";
    if (!pt.report.converged) {
        log << "  " << pt.report.message << "\n";
        return numerical_failure;
    }
    return success;
}

// ------------------------------------------------------------ sweep/trace ---

inline void summarize(const Branch& b, std::ostream& log) {
    std::size_t unstable = 0;
    for (const auto& p : b.points) {
        unstable += p.stability == Stability::unstable ? 1 : 0;
    }
    log << "  points=" << b.points.size() << " folds=" << b.folds.size() << " unstable=" << unstable
        << " gaps=" << b.gaps.size() << "\n";
    for (std::size_t f : b.folds) {
        log << "  fold at omega=" << b.points[f].omega << "\n";
    }
    if (!b.diagnostic.empty()) {
        log << "  " << b.diagnostic << "\n";
    }
}

inline int cmd_sweep(const RunConfig& cfg, const fs::path& dir, std::uint64_t seed, std::ostream& log) {
    const HbProblem prob = cfg.build_problem();
    const double start = *cfg.omega.start;
    SweepOptions opts;
    opts.newton = cfg.newton;
    opts.stability = cfg.stability;
    opts.floquet = cfg.floquet;
    Branch b;
    try {
        b = sweep(prob, start, *cfg.omega.end, *cfg.omega.step, initial_guess(cfg, prob, start, seed), opts);
    } catch (const NumericalError& e) {
        log << "sweep: " << e.what() << "\n";
        return numerical_failure;
    }
    io::write_branch(dir, b, cfg, prob);
    log << "sweep " << start << " -> " << *cfg.omega.end << "\n";
    summarize(b, log);
    return b.empty() ? numerical_failure : success;
}

inline TraceOptions trace_options(const RunConfig& cfg) {
    TraceOptions t = cfg.continuation;
    const double start = *cfg.omega.start;
    if (cfg.omega.end) {
        t.direction = *cfg.omega.end >= start ? 1 : -1;
        t.omega_min = std::min(start, *cfg.omega.end);
        t.omega_max = std::max(start, *cfg.omega.end);
    }
    if (cfg.omega.min) t.omega_min = *cfg.omega.min;
    if (cfg.omega.max) t.omega_max = *cfg.omega.max;
    return t;
}

inline int cmd_trace(const RunConfig& cfg, const fs::path& dir, std::uint64_t seed, std::ostream& log) {
    const HbProblem prob = cfg.build_problem();
    const double start = *cfg.omega.start;
    const BranchPoint seed_pt = solve_point(prob, start, cfg.newton, initial_guess(cfg, prob, start, seed));
    if (!seed_pt.report.converged) {
        log << "trace: seed at omega=" << start << " did not converge: " << seed_pt.report.message << "\n";
        return numerical_failure;
    }
    Branch b;
    try {
        b = trace(prob, seed_pt, trace_options(cfg));
    } catch (const NumericalError& e) {
        log << "trace: " << e.what() << "\n";
        return numerical_failure;
    }
    if (b.empty()) {
        log << "trace: empty branch\n";
        return numerical_failure;
    }
    io::write_branch(dir, b, cfg, prob);
    log << "trace from omega=" << start << "\n";
    summarize(b, log);
    return success;
}

// ---------------------------------------------------------------- timesim ---

inline int cmd_timesim(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
    const auto model = cfg.build_model();
    const double omega = omega_value(cfg);
    const SteadyRunOptions& o = cfg.integrator;
    const double period = 2.0 * std::numbers::pi / model->base_frequency(omega);
    const double dt = period / o.steps_per_period;
    const double t_end = (o.discard_periods + 1) * period;
    const double record_from = cfg.record_periods > 0 ? t_end - (cfg.record_periods + 0.5) * period : 0.0;
    const auto n = static_cast<Eigen::Index>(model->dofs());
    const auto vec = [n](const std::vector<double>& v) {
        return v.empty() ? Eigen::VectorXd(Eigen::VectorXd::Zero(n))
                         : Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), n));
    };
    Trajectory traj;
    try {
        traj = o.method == Integrator::rk4 ? rk4(*model, vec(o.x0), vec(o.v0), omega, t_end, dt, std::max(0.0, record_from))
                                           : newmark(*model, vec(o.x0), vec(o.v0), omega, t_end, dt, o.newmark,
                                                     std::max(0.0, record_from));
    } catch (const NumericalError& e) {
        log << "timesim: " << e.what() << "\n";
        return numerical_failure;
    }
    io::write_atomic(dir / "trajectory.csv", io::trajectory_csv(traj));
    json summary{{"omega", omega}, {"period_s", period}, {"dt_s", dt}, {"t_end_s", t_end},
                 {"method", o.method == Integrator::rk4 ? "rk4" : "newmark"}, {"rows", traj.size()}};
    const HarmonicSet set = cfg.harmonics.build();
    if (traj.size() > 2 * static_cast<std::size_t>(o.steps_per_period)) {
        const SteadyState ss = steady_state_extract(traj, period, set, o.discard_periods);
        summary["amplitude"] = ss.amplitude;
        summary["coeffs"] = ss.coeffs;
        summary["period_mismatch"] = io::finite_or_null(ss.period_mismatch);
        summary["steady"] = ss.steady;
        log << "timesim omega=" << omega << " steady=" << (ss.steady ? "yes" : "no")
            << " mismatch=" << ss.period_mismatch << "\n  amplitude: " << amplitude_text(ss.amplitude) << "\n";
    } else {
        log << "timesim omega=" << omega << " rows=" << traj.size() << "\n";
    }
    io::write_atomic(dir / "timesim.json", summary.dump(1) + "\n");
    return success;
}

// ---------------------------------------------------------------- compare ---

struct CompareRow {
    double omega = 0.0;
    bool ok = false;
    std::string error;
    std::vector<double> hb_amplitude;
    std::vector<double> ti_amplitude;
    double deviation = INFINITY;  // max_i |A_hb - A_ti| / max_i A_ti
    double hb_seconds = 0.0;
    double ti_seconds = 0.0;
    int hb_iterations = 0;
    bool ti_steady = false;

    double speedup() const { return hb_seconds > 0.0 ? ti_seconds / hb_seconds : INFINITY; }
};

inline double relative_deviation(const std::vector<double>& a, const std::vector<double>& ref) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - ref[i]));
        den = std::max(den, std::abs(ref[i]));
    }
    return den > 0.0 ? num / den : num;
}

/// HB point solve at omega, timed, warm-started from `seed_coeffs` (solved
/// beforehand at a nearby frequency and not timed), against a timed
/// run-to-steady-state of the integrator.
inline CompareRow compare_at(const HbProblem& prob, double omega, const std::vector<double>& seed_coeffs,
                             const NewtonOptions& newton, const SteadyRunOptions& ti) {
    using clock = std::chrono::steady_clock;
    CompareRow row;
    row.omega = omega;
    std::string err;
    try {
        const auto t0 = clock::now();
        NewtonResult res = newton_solve(prob, seed_coeffs, omega, newton);
        row.hb_amplitude = amplitudes(prob, res.coeffs);
        row.hb_seconds = std::chrono::duration<double>(clock::now() - t0).count();
        row.hb_iterations = res.report.iterations;
        if (!res.report.converged) {
            err = "HB did not converge: " + res.report.message;
        }
    } catch (const Error& e) {
        err = std::string("HB: ") + e.what();
    }
    try {
        const auto t0 = clock::now();
        const SteadyState ss = run_to_steady_state(prob.model(), omega, prob.set(), ti);
        row.ti_seconds = std::chrono::duration<double>(clock::now() - t0).count();
        row.ti_amplitude = ss.amplitude;
        row.ti_steady = ss.steady;
        if (!ss.steady) {
            err += (err.empty() ? "" : "; ") + std::string("integrator did not reach a periodic state");
        }
    } catch (const Error& e) {
        err += (err.empty() ? "" : "; ") + std::string("integrator: ") + e.what();
    }
    if (!row.hb_amplitude.empty() && !row.ti_amplitude.empty()) {
        row.deviation = relative_deviation(row.hb_amplitude, row.ti_amplitude);
    }
    row.ok = err.empty();
    row.error = err;
    return row;
}

inline std::string compare_table(const std::vector<CompareRow>& rows) {
    std::ostringstream s;
    s << std::left << std::setw(12) << "omega" << std::setw(14) << "HB amp" << std::setw(14) << "TI amp"
      << std::setw(12) << "deviation" << std::setw(12) << "HB [s]" << std::setw(12) << "TI [s]" << std::setw(10)
      << "speedup" << "status\n";
    s << std::setprecision(5);
    for (const auto& r : rows) {
        const auto peak = [](const std::vector<double>& a) {
            return a.empty() ? NAN : *std::max_element(a.begin(), a.end());
        };
        s << std::setw(12) << r.omega << std::setw(14) << peak(r.hb_amplitude) << std::setw(14)
          << peak(r.ti_amplitude) << std::setw(12) << r.deviation << std::setw(12) << r.hb_seconds << std::setw(12)
          << r.ti_seconds << std::setw(10) << r.speedup() << (r.ok ? "ok" : "FAILED: " + r.error) << "\n";
    }
    return s.str();
}

inline json compare_json(const std::vector<CompareRow>& rows, const RunConfig& cfg, const HbProblem& prob) {
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back(json{{"omega", r.omega},
                           {"ok", r.ok},
                           {"error", r.error},
                           {"hb_amplitude", r.hb_amplitude},
                           {"ti_amplitude", r.ti_amplitude},
                           {"deviation", io::finite_or_null(r.deviation)},
                           {"hb_seconds", r.hb_seconds},
                           {"ti_seconds", r.ti_seconds},
                           {"speedup", io::finite_or_null(r.speedup())},
                           {"hb_iterations", r.hb_iterations},
                           {"ti_steady", r.ti_steady}});
    }
    return json{{"problem", io::problem_json(cfg, prob)},
                {"integrator", cfg.integrator.method == Integrator::rk4 ? "rk4" : "newmark"},
                {"steps_per_period", cfg.integrator.steps_per_period},
                {"discard_periods", cfg.integrator.discard_periods},
                {"rows", out}};
}

/// Untimed seed at omega - offset. With omega.start and omega.step set the seed
/// is carried along a warm-started sweep from the previous row, which keeps
/// every row on the branch reached from omega.start.
class CompareSeeder {
  public:
    CompareSeeder(const RunConfig& cfg, const HbProblem& prob, std::uint64_t seed)
        : cfg_(cfg), prob_(prob), seed_(seed) {}

    std::vector<double> at(double omega) {
        const double target = omega - offset(omega);
        if (cfg_.omega.start && cfg_.omega.step && *cfg_.omega.step > 0.0 && target >= *cfg_.omega.start) {
            if (current_.empty() || target < current_omega_) {
                current_omega_ = *cfg_.omega.start;
                current_ = solve(current_omega_, initial_guess(cfg_, prob_, current_omega_, seed_));
            }
            while (current_omega_ + *cfg_.omega.step < target) {
                current_omega_ += *cfg_.omega.step;
                current_ = solve(current_omega_, current_);
            }
            current_omega_ = target;
            current_ = solve(target, current_);
            return current_;
        }
        return solve(target, initial_guess(cfg_, prob_, target, seed_));
    }

  private:
    double offset(double omega) const { return cfg_.warm_offset > 0.0 ? cfg_.warm_offset : 0.01 * omega; }

    std::vector<double> solve(double omega, std::vector<double> guess) const {
        NewtonResult r = newton_solve(prob_, guess, omega, cfg_.newton);
        if (!r.report.converged) {
            r = newton_solve(prob_, linear_response(prob_, omega), omega, cfg_.newton);
        }
        return r.report.converged ? r.coeffs : guess;
    }

    const RunConfig& cfg_;
    const HbProblem& prob_;
    std::uint64_t seed_;
    std::vector<double> current_;
    double current_omega_ = 0.0;
};

inline int cmd_compare(const RunConfig& cfg, const fs::path& dir, std::uint64_t seed, std::ostream& log) {
    const HbProblem prob = cfg.build_problem();
    std::vector<double> omegas = cfg.omega.list;
    std::vector<CompareRow> rows;
    CompareSeeder seeder(cfg, prob, seed);
    for (double w : omegas) {
        std::vector<double> s;
        try {
            s = seeder.at(w);
        } catch (const Error&) {
            s = std::vector<double>(prob.unknowns(), 0.0);
        }
        rows.push_back(compare_at(prob, w, s, cfg.newton, cfg.integrator));
    }
    const std::string table = compare_table(rows);
    io::write_atomic(dir / "compare.json", compare_json(rows, cfg, prob).dump(1) + "\n");
    io::write_atomic(dir / "compare.txt", table);
    log << table;
    const bool any_ok = std::any_of(rows.begin(), rows.end(), [](const CompareRow& r) { return r.ok; });
    return any_ok ? success : numerical_failure;
}

// ---------------------------------------------------------------- driver ---

inline int run_one(Command cmd, const RunConfig& cfg, const fs::path& dir, std::uint64_t seed, std::ostream& log) {
    try {
        switch (cmd) {
            case Command::solve: return cmd_solve(cfg, dir, seed, log);
            case Command::sweep: return cmd_sweep(cfg, dir, seed, log);
            case Command::trace: return cmd_trace(cfg, dir, seed, log);
            case Command::timesim: return cmd_timesim(cfg, dir, log);
            case Command::compare: return cmd_compare(cfg, dir, seed, log);
        }
    } catch (const ConfigError& e) {
        log << "configuration error: " << e.what() << "\n";
        return config_error;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return numerical_failure;
    }
    return numerical_failure;
}

struct Invocation {
    Command command = Command::solve;
    std::string config_path;
    fs::path out = "out";
    unsigned jobs = 1;
    std::optional<std::uint64_t> seed;
};

/// Parses and validates every run, then executes them with up to `jobs`
/// workers. Logs are printed in run order; the exit code is the worst one.
inline int run_all(const Invocation& inv, std::ostream& out, std::ostream& err) {
    std::vector<RunConfig> runs;
    try {
        runs = parse_config(load_json_file(inv.config_path));
        for (std::size_t k = 0; k < runs.size(); ++k) {
            try {
                validate_for(inv.command, runs[k]);
            } catch (const ConfigError& e) {
                throw ConfigError(runs.size() > 1 ? "runs[" + std::to_string(k) + "]: " + e.what() : e.what());
            }
        }
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return config_error;
    }
    const std::size_t n = runs.size();
    std::vector<std::ostringstream> logs(n);
    std::vector<int> codes(n, success);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            const fs::path dir = n > 1 ? inv.out / ("run_" + std::to_string(k)) : inv.out;
            const std::uint64_t base = inv.seed.value_or(runs[k].seed);
            codes[k] = run_one(inv.command, runs[k], dir, run_seed(base, k), logs[k]);
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(inv.jobs, static_cast<unsigned>(n)));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    int worst = success;
    for (std::size_t k = 0; k < n; ++k) {
        if (n > 1) {
            out << "[run " << k << "] exit " << codes[k] << "\n";
        }
        out << logs[k].str();
        worst = std::max(worst, codes[k]);
    }
    return worst;
}

}  // namespace hbad::cli
