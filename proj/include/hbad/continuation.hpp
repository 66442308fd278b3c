#pragma once

// Amplitude-frequency branches: natural-parameter sweeps with warm starts and
// pseudo-arclength continuation through folds.
//
// The continuation unknown is z = (A / coeff_scale, omega / omega_scale). The
// tangent t spans the null space of [dB/dA | dB/domega] in these units and is
// oriented along the previous tangent. Each step predicts z + ds t and corrects
// on {B(z) = 0, t . (z - z_pred) = 0}.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hbad/hb.hpp"
#include "hbad/stability.hpp"

namespace hbad {

struct BranchPoint {
    std::vector<double> coeffs;
    double omega = 0.0;
    std::vector<double> amplitude;  // peak |x_i(tau)| per DOF
    Stability stability = Stability::unknown;
    double max_multiplier = std::numeric_limits<double>::quiet_NaN();
    bool fold = false;
    double tangent_omega = std::numeric_limits<double>::quiet_NaN();  // omega-component of the unit tangent
    NewtonReport report;
};

struct Branch {
    std::vector<BranchPoint> points;
    std::vector<std::size_t> folds;  // positions of points whose tangent flipped in omega
    std::vector<double> gaps;        // sweep frequencies without a converged solution
    std::string diagnostic;          // why a trace stopped

    bool empty() const { return points.empty(); }
};

namespace detail {

inline void classify(const HbProblem& prob, BranchPoint& pt, const FloquetOptions& opts, bool& near_unit) {
    const FloquetResult fr = floquet(prob, pt.coeffs, pt.omega, opts);
    pt.stability = fr.classification;
    pt.max_multiplier = fr.max_magnitude;
    near_unit = fr.near_unit_circle || fr.classification == Stability::unknown;
}

// Points whose largest multiplier sits inside the tolerance band take the
// classification of their own segment: the next point for a fold point
// (it opens a new segment), the previous point otherwise.
inline void resolve_ambiguous(Branch& branch, const std::vector<bool>& ambiguous) {
    const std::size_t n = branch.points.size();
    for (std::size_t pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!ambiguous[i]) {
                continue;
            }
            auto& pt = branch.points[i];
            const bool use_next = pt.fold || i == 0;
            const std::size_t j = use_next ? i + 1 : i - 1;
            if (j < n && !ambiguous[j]) {
                pt.stability = branch.points[j].stability;
            }
        }
    }
}

// Sign flips of the tangent's omega-component on two adjacent points bracket a
// one-point excursion (tangent noise at a fold or a contact kink), not a pair
// of folds; both marks are cleared.
inline void collapse_adjacent_folds(Branch& branch) {
    std::vector<std::size_t> kept;
    const auto& folds = branch.folds;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        if (f + 1 < folds.size() && folds[f + 1] == folds[f] + 1) {
            branch.points[folds[f]].fold = false;
            branch.points[folds[f + 1]].fold = false;
            ++f;
            continue;
        }
        kept.push_back(folds[f]);
    }
    branch.folds = std::move(kept);
}

}  // namespace detail

inline BranchPoint make_point(const HbProblem& prob, std::vector<double> coeffs, double omega, NewtonReport report) {
    BranchPoint pt;
    pt.amplitude = amplitudes(prob, coeffs);
    pt.coeffs = std::move(coeffs);
    pt.omega = omega;
    pt.report = std::move(report);
    return pt;
}

struct SweepOptions {
    NewtonOptions newton;
    bool stability = true;
    FloquetOptions floquet;
    bool cold_retry = true;  // retry from the linear response after a warm-start failure
};

/// Natural-parameter sweep from omega_start towards omega_end in steps of d_omega,
/// each point warm-started from the previous converged one.
inline Branch sweep(const HbProblem& prob, double omega_start, double omega_end, double d_omega,
                    std::vector<double> initial = {}, const SweepOptions& opts = {}) {
    if (d_omega == 0.0 || !std::isfinite(d_omega)) {
        throw ConfigError("sweep: frequency step must be non-zero");
    }
    if ((omega_end - omega_start) * d_omega < 0.0) {
        throw ConfigError("sweep: step sign does not point from start to end");
    }
    const auto steps = static_cast<long>(std::floor((omega_end - omega_start) / d_omega + 1e-9));
    Branch branch;
    std::vector<bool> ambiguous;
    std::vector<double> guess = initial.empty() ? linear_response(prob, omega_start) : std::move(initial);
    for (long k = 0; k <= steps; ++k) {
        const double omega = omega_start + static_cast<double>(k) * d_omega;
        NewtonResult res = newton_solve(prob, guess, omega, opts.newton);
        if (!res.report.converged && opts.cold_retry) {
            NewtonResult cold = newton_solve(prob, linear_response(prob, omega), omega, opts.newton);
            if (cold.report.converged) {
                res = std::move(cold);
            }
        }
        if (!res.report.converged) {
            branch.gaps.push_back(omega);
            continue;
        }
        guess = res.coeffs;
        BranchPoint pt = make_point(prob, std::move(res.coeffs), omega, std::move(res.report));
        bool amb = false;
        if (opts.stability) {
            detail::classify(prob, pt, opts.floquet, amb);
        }
        ambiguous.push_back(amb);
        branch.points.push_back(std::move(pt));
    }
    if (branch.points.empty()) {
        throw NumericalError("sweep: no converged point between " + std::to_string(omega_start) + " and " +
                             std::to_string(omega_end));
    }
    if (opts.stability) {
        detail::resolve_ambiguous(branch, ambiguous);
    }
    return branch;
}

struct TraceOptions {
    double ds = 0.05;
    double ds_min = 1e-6;
    double ds_max = 0.2;
    int max_points = 2000;
    double omega_min = 0.0;
    double omega_max = std::numeric_limits<double>::infinity();
    double omega_scale = 0.0;  // 0: seed frequency
    double coeff_scale = 0.0;  // 0: largest seed coefficient magnitude
    int direction = +1;        // initial sense of omega
    double growth = 1.3;
    double shrink = 0.5;
    int fast_iterations = 3;
    int corrector_max_iter = 12;
    double tol = 1e-9;
    double min_tangent_cos = 0.9;  // larger turns between consecutive tangents are refined
    bool stability = true;
    FloquetOptions floquet;
};

/// Scaling between physical unknowns (A, omega) and the continuation vector z.
struct ArclengthScale {
    double coeff = 1.0;
    double omega = 1.0;

    Eigen::VectorXd to_z(std::span<const double> coeffs, double omega_value) const {
        Eigen::VectorXd z(static_cast<Eigen::Index>(coeffs.size()) + 1);
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            z[static_cast<Eigen::Index>(i)] = coeffs[i] / coeff;
        }
        z[z.size() - 1] = omega_value / omega;
        return z;
    }

    std::vector<double> coeffs_of(const Eigen::VectorXd& z) const {
        std::vector<double> a(static_cast<std::size_t>(z.size() - 1));
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = z[static_cast<Eigen::Index>(i)] * coeff;
        }
        return a;
    }

    double omega_of(const Eigen::VectorXd& z) const { return z[z.size() - 1] * omega; }
};

/// [dB/dz] = [dB/dA * coeff_scale | dB/domega * omega_scale].
inline Eigen::MatrixXd bordered_jacobian(const Linearization& lin, const ArclengthScale& scale) {
    const Eigen::Index m = lin.jacobian.rows();
    Eigen::MatrixXd jz(m, lin.jacobian.cols() + 1);
    jz.leftCols(lin.jacobian.cols()) = lin.jacobian * scale.coeff;
    jz.col(jz.cols() - 1) = lin.d_omega * scale.omega;
    return jz;
}

/// Unit null vector of the bordered Jacobian, oriented so dot(previous, t) > 0.
inline Eigen::VectorXd tangent_from(const Eigen::MatrixXd& jz, const Eigen::VectorXd& previous) {
    const Eigen::Index m = jz.rows();
    Eigen::MatrixXd sys(m + 1, jz.cols());
    sys.topRows(m) = jz;
    sys.row(m) = previous.transpose();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
    rhs[m] = 1.0;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys);
    if (!(lu.rcond() > 1e-14)) {
        throw NumericalError("tangent undefined: bordered matrix is rank deficient (branch point?)");
    }
    Eigen::VectorXd t = lu.solve(rhs);
    if (!t.allFinite()) {
        throw NumericalError("tangent undefined: non-finite solution");
    }
    t.normalize();
    if (t.dot(previous) < 0.0) {
        t = -t;
    }
    return t;
}

/// Tangent at (coeffs, omega) in scaled units.
inline Eigen::VectorXd tangent(const HbProblem& prob, std::span<const double> coeffs, double omega,
                               const Eigen::VectorXd& previous, const ArclengthScale& scale) {
    const Linearization lin = linearize(prob, coeffs, omega);
    return tangent_from(bordered_jacobian(lin, scale), previous);
}

/// Pseudo-arclength continuation from a converged seed.
inline Branch trace(const HbProblem& prob, const BranchPoint& seed, const TraceOptions& opts = {}) {
    if (!seed.report.converged) {
        throw ConfigError("trace: seed point is not converged");
    }
    if (!(opts.ds_min > 0.0 && opts.ds_min <= opts.ds && opts.ds <= opts.ds_max)) {
        throw ConfigError("trace: need 0 < ds_min <= ds <= ds_max");
    }
    if (opts.direction != 1 && opts.direction != -1) {
        throw ConfigError("trace: direction must be +1 or -1");
    }
    ArclengthScale scale;
    scale.omega = opts.omega_scale > 0.0 ? opts.omega_scale : std::abs(seed.omega);
    if (opts.coeff_scale > 0.0) {
        scale.coeff = opts.coeff_scale;
    } else {
        double amax = 0.0;
        for (double c : seed.coeffs) {
            amax = std::max(amax, std::abs(c));
        }
        scale.coeff = amax > 0.0 ? amax : 1.0;
    }
    if (!(scale.omega > 0.0)) {
        throw ConfigError("trace: omega scale must be positive");
    }

    const auto m = static_cast<Eigen::Index>(prob.unknowns());
    Branch branch;
    std::vector<bool> ambiguous;

    Eigen::VectorXd z = scale.to_z(seed.coeffs, seed.omega);
    Eigen::VectorXd axis = Eigen::VectorXd::Zero(m + 1);
    axis[m] = opts.direction;
    Eigen::VectorXd t = tangent(prob, seed.coeffs, seed.omega, axis, scale);

    auto accept = [&](BranchPoint pt, const Eigen::VectorXd& tan) {
        pt.tangent_omega = tan[m];
        bool amb = false;
        if (opts.stability) {
            detail::classify(prob, pt, opts.floquet, amb);
        }
        if (!branch.points.empty()) {
            const double prev = branch.points.back().tangent_omega;
            if ((prev > 0.0) != (pt.tangent_omega > 0.0)) {
                pt.fold = true;
                branch.folds.push_back(branch.points.size());
            }
        }
        ambiguous.push_back(amb);
        branch.points.push_back(std::move(pt));
    };

    accept(seed, t);
    double ds = opts.ds;
    while (static_cast<int>(branch.points.size()) < opts.max_points) {
        const Eigen::VectorXd z_pred = z + ds * t;
        Eigen::VectorXd zc = z_pred;
        bool converged = false;
        int iterations = 0;
        NewtonReport report;
        std::optional<Eigen::VectorXd> t_new;
        try {
            for (int iter = 0; iter <= opts.corrector_max_iter; ++iter) {
                const std::vector<double> a = scale.coeffs_of(zc);
                const double omega = scale.omega_of(zc);
                const Linearization lin = linearize(prob, a, omega);
                const double norm = lin.residual.norm();
                const double arc = t.dot(zc - z_pred);
                report.residual_history.push_back(norm);
                if (!std::isfinite(norm)) {
                    break;
                }
                const Eigen::MatrixXd jz = bordered_jacobian(lin, scale);
                if (norm < opts.tol && std::abs(arc) < opts.tol) {
                    converged = true;
                    t_new = tangent_from(jz, t);
                    break;
                }
                if (iter == opts.corrector_max_iter) {
                    break;
                }
                Eigen::MatrixXd sys(m + 1, m + 1);
                sys.topRows(m) = jz;
                sys.row(m) = t.transpose();
                Eigen::VectorXd rhs(m + 1);
                rhs.head(m) = lin.residual;
                rhs[m] = arc;
                const Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys);
                report.condition_estimate = lu.rcond() > 0.0 ? 1.0 / lu.rcond() : INFINITY;
                if (!(lu.rcond() > 1e-15)) {
                    break;
                }
                const Eigen::VectorXd step = lu.solve(rhs);
                if (!step.allFinite()) {
                    break;
                }
                zc -= step;
                iterations = iter + 1;
            }
        } catch (const Error&) {
            converged = false;
        }

        bool ok = converged && t_new.has_value();
        if (ok) {
            const double turn = t_new->dot(t);
            const double dist = (zc - z).norm();
            if ((turn < opts.min_tangent_cos && ds > opts.ds_min) || dist > 2.0 * opts.ds_max) {
                ok = false;
            }
        }
        if (!ok) {
            if (ds <= opts.ds_min) {
                branch.diagnostic = "corrector failed at minimum step size near omega = " +
                                    std::to_string(scale.omega_of(z));
                break;
            }
            ds = std::max(ds * opts.shrink, opts.ds_min);
            continue;
        }

        const double omega = scale.omega_of(zc);
        if (omega < opts.omega_min || omega > opts.omega_max) {
            branch.diagnostic = "left frequency window";
            break;
        }
        report.converged = true;
        report.iterations = iterations;
        accept(make_point(prob, scale.coeffs_of(zc), omega, std::move(report)), *t_new);
        z = zc;
        t = *t_new;
        if (iterations <= opts.fast_iterations) {
            ds = std::min(ds * opts.growth, opts.ds_max);
        }
    }
    if (branch.diagnostic.empty()) {
        branch.diagnostic = "reached maximum number of points";
    }
    detail::collapse_adjacent_folds(branch);
    if (opts.stability) {
        detail::resolve_ambiguous(branch, ambiguous);
    }
    return branch;
}

/// Converged starting point at omega, solved from the linear response.
inline BranchPoint solve_point(const HbProblem& prob, double omega, const NewtonOptions& newton = {},
                               std::vector<double> guess = {}) {
    if (guess.empty()) {
        guess = linear_response(prob, omega);
    }
    NewtonResult res = newton_solve(prob, std::move(guess), omega, newton);
    return make_point(prob, std::move(res.coeffs), omega, std::move(res.report));
}

}  // namespace hbad
