#pragma once

// Floquet stability of a harmonic-balance orbit: integrate the variational
// equations of the linearized system over one common period and take the
// eigenvalues of the monodromy matrix.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <complex>
#include <optional>
#include <numbers>
#include <string>
#include <vector>

#include "hbad/ad.hpp"
#include "hbad/hb.hpp"

namespace hbad {

enum class Stability { stable, unstable, unknown };

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::stable: return "stable";
        case Stability::unstable: return "unstable";
        case Stability::unknown: return "unknown";
    }
    return "unknown";
}

struct FloquetOptions {
    int substeps = 2000;  // RK4 steps per period
    double tol = 1e-6;    // band around the unit circle
};

struct FloquetResult {
    std::vector<std::complex<double>> multipliers;
    double max_magnitude = 0.0;
    Stability classification = Stability::unknown;
    bool near_unit_circle = false;  // |max_magnitude - 1| <= tol
    double log_abs_det = 0.0;       // log |det Y(T)|
    double trace_integral = 0.0;    // integral of trace(Phi) over the period
    std::string message;
};

/// Time-varying system matrix Phi(t) of the first-order variational equation
/// along the orbit `coeffs`, with the trace of Phi.
class VariationalSystem {
  public:
    VariationalSystem(const HbProblem& prob, std::span<const double> coeffs, double omega)
        : prob_(prob), coeffs_(coeffs.begin(), coeffs.end()), omega_(omega) {
        const SystemModel& model = prob.model();
        base_ = model.base_frequency(omega);
        damping_ = model.damping_at(omega);
        if (!model.has_nonlinear_force()) {
            constant_ = assemble(model.mass(), damping_, model.stiffness());
        }
    }

    double period() const { return 2.0 * std::numbers::pi / base_; }

    /// Phi at physical time t; trace written to `trace`.
    Eigen::MatrixXd at(double t, double& trace) const {
        if (constant_) {
            trace = constant_->trace();
            return *constant_;
        }
        const SystemModel& model = prob_.model();
        const std::size_t n = prob_.dofs();
        const double tau = base_ * t;
        ad::Tape tape;
        std::vector<ad::Var> state;
        state.reserve(3 * n);
        for (int order : {2, 1, 0}) {
            const double scale = order == 2 ? base_ * base_ : (order == 1 ? base_ : 1.0);
            for (std::size_t i = 0; i < n; ++i) {
                state.push_back(tape.input(scale * evaluate_at(prob_.dof_coeffs(coeffs_, i), prob_.set(), tau, order)));
            }
        }
        std::vector<ad::Var> fn(n);
        const std::span<const ad::Var> all(state);
        model.nonlinear_force(Kinematics<ad::Var>{all.subspan(0, n), all.subspan(n, n), all.subspan(2 * n, n)}, tau,
                              ad::Var(omega_), fn);
        const ad::DenseJacobian jac = tape.jacobian(fn);
        const auto nn = static_cast<Eigen::Index>(n);
        const Eigen::MatrixXd m_eff = model.mass() + jac.leftCols(nn);
        const Eigen::MatrixXd c_eff = damping_ + jac.middleCols(nn, nn);
        const Eigen::MatrixXd k_eff = model.stiffness() + jac.rightCols(nn);
        Eigen::MatrixXd phi = assemble(m_eff, c_eff, k_eff);
        trace = phi.trace();
        return phi;
    }

  private:
    static Eigen::MatrixXd assemble(const Eigen::MatrixXd& m, const Eigen::MatrixXd& c, const Eigen::MatrixXd& k) {
        const Eigen::Index n = m.rows();
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
        if (!(lu.rcond() > 1e-13)) {
            throw NumericalError("effective mass matrix is singular along the orbit");
        }
        Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        phi.topRightCorner(n, n).setIdentity();
        phi.bottomLeftCorner(n, n) = -lu.solve(k);
        phi.bottomRightCorner(n, n) = -lu.solve(c);
        return phi;
    }

    const HbProblem& prob_;
    std::vector<double> coeffs_;
    double omega_;
    double base_ = 0.0;
    Eigen::MatrixXd damping_;
    std::optional<Eigen::MatrixXd> constant_;
};

namespace detail {

inline std::vector<std::complex<double>> sorted_eigenvalues(const Eigen::MatrixXd& m) {
    const Eigen::EigenSolver<Eigen::MatrixXd> eig(m, false);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("eigenvalue computation of the monodromy matrix failed");
    }
    std::vector<std::complex<double>> ev(eig.eigenvalues().begin(), eig.eigenvalues().end());
    std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) { return std::abs(a) > std::abs(b); });
    return ev;
}

// Eigenvalues of Y carry absolute error ~ eps ||Y||, so strongly damped
// multipliers lose all relative accuracy. Those of Z = Y^{-1} resolve the
// small end instead. The largest k multipliers come from Y, the rest from Z,
// with k minimizing the worse of ||Y|| / |mu_{k-1}| and ||Z|| |mu_k|.
inline std::vector<std::complex<double>> merged_multipliers(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z) {
    const auto from_y = sorted_eigenvalues(y);
    auto from_z = sorted_eigenvalues(z);
    for (auto& nu : from_z) {
        nu = 1.0 / nu;
    }
    std::reverse(from_z.begin(), from_z.end());
    const std::size_t n = from_y.size();
    const double ny = y.norm();
    const double nz = z.norm();
    // Splitting inside a group of equal moduli would mix conjugate partners.
    const auto splits_group = [](const std::vector<std::complex<double>>& ev, std::size_t k) {
        return k > 0 && k < ev.size() && std::abs(std::abs(ev[k - 1]) - std::abs(ev[k])) <= 1e-6 * std::abs(ev[k - 1]);
    };
    std::size_t best_k = n;
    double best = INFINITY;
    for (std::size_t k = 0; k <= n; ++k) {
        if (splits_group(from_y, k) || splits_group(from_z, k)) {
            continue;
        }
        const double ey = k > 0 ? ny / std::abs(from_y[k - 1]) : 0.0;
        const double ez = k < n ? nz * std::abs(from_z[k]) : 0.0;
        if (std::max(ey, ez) < best) {
            best = std::max(ey, ez);
            best_k = k;
        }
    }
    std::vector<std::complex<double>> out(from_y.begin(), from_y.begin() + static_cast<std::ptrdiff_t>(best_k));
    out.insert(out.end(), from_z.begin() + static_cast<std::ptrdiff_t>(best_k), from_z.end());
    return out;
}

}  // namespace detail

/// Floquet multipliers of the HB orbit at frequency omega.
inline FloquetResult floquet(const HbProblem& prob, std::span<const double> coeffs, double omega,
                             const FloquetOptions& opts = {}) {
    if (opts.substeps < 1) {
        throw ConfigError("floquet: substeps must be positive");
    }
    FloquetResult res;
    try {
        const VariationalSystem sys(prob, coeffs, omega);
        const Eigen::Index dim = static_cast<Eigen::Index>(2 * prob.dofs());
        const double period = sys.period();
        const double h = period / opts.substeps;
        Eigen::MatrixXd y = Eigen::MatrixXd::Identity(dim, dim);
        Eigen::MatrixXd z = Eigen::MatrixXd::Identity(dim, dim);  // Y^{-1}: z' = -z Phi
        double tr0 = 0.0;
        double tr_mid = 0.0;
        double tr1 = 0.0;
        Eigen::MatrixXd phi0 = sys.at(0.0, tr0);
        double trace_integral = 0.0;
        for (int step = 0; step < opts.substeps; ++step) {
            const double t = step * h;
            const Eigen::MatrixXd phi_mid = sys.at(t + 0.5 * h, tr_mid);
            Eigen::MatrixXd phi1 = sys.at(t + h, tr1);
            const Eigen::MatrixXd k1 = phi0 * y;
            const Eigen::MatrixXd k2 = phi_mid * (y + 0.5 * h * k1);
            const Eigen::MatrixXd k3 = phi_mid * (y + 0.5 * h * k2);
            const Eigen::MatrixXd k4 = phi1 * (y + h * k3);
            y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            const Eigen::MatrixXd l1 = -z * phi0;
            const Eigen::MatrixXd l2 = -(z + 0.5 * h * l1) * phi_mid;
            const Eigen::MatrixXd l3 = -(z + 0.5 * h * l2) * phi_mid;
            const Eigen::MatrixXd l4 = -(z + h * l3) * phi1;
            z += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
            trace_integral += (h / 6.0) * (tr0 + 4.0 * tr_mid + tr1);
            phi0 = std::move(phi1);
            tr0 = tr1;
        }
        res.multipliers = detail::merged_multipliers(y, z);
        double log_det = 0.0;
        for (const auto& mu : res.multipliers) {
            res.max_magnitude = std::max(res.max_magnitude, std::abs(mu));
            log_det += std::log(std::abs(mu));
        }
        res.log_abs_det = log_det;
        res.trace_integral = trace_integral;
        res.classification = res.max_magnitude < 1.0 + opts.tol ? Stability::stable : Stability::unstable;
        res.near_unit_circle = std::abs(res.max_magnitude - 1.0) <= opts.tol;
    } catch (const Error& e) {
        res.classification = Stability::unknown;
        res.message = e.what();
    }
    return res;
}

}  // namespace hbad
