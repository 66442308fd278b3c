#pragma once

// Harmonic-balance residual via alternating frequency/time sampling, and a
// full Newton-Raphson solver whose Jacobian comes from the AD tape.

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "hbad/ad.hpp"
#include "hbad/error.hpp"
#include "hbad/fourier.hpp"
#include "hbad/model.hpp"

namespace hbad {

class HbProblem {
  public:
    HbProblem(std::shared_ptr<const SystemModel> model, HarmonicSet set, std::size_t samples = 0)
        : model_(std::move(model)), tables_(set, TimeGrid::for_set(set, samples)) {
        if (!model_) {
            throw ConfigError("HbProblem: null model");
        }
    }

    const SystemModel& model() const noexcept { return *model_; }
    const std::shared_ptr<const SystemModel>& model_ptr() const noexcept { return model_; }
    const BasisTables& tables() const noexcept { return tables_; }
    const HarmonicSet& set() const noexcept { return tables_.set(); }
    std::size_t dofs() const noexcept { return model_->dofs(); }
    std::size_t samples() const noexcept { return tables_.samples(); }
    std::size_t coeffs_per_dof() const noexcept { return tables_.coeffs_per_dof(); }
    std::size_t unknowns() const noexcept { return dofs() * coeffs_per_dof(); }

    /// Coefficients of one DOF inside a flat vector.
    std::span<const double> dof_coeffs(std::span<const double> flat, std::size_t dof) const {
        return flat.subspan(dof * coeffs_per_dof(), coeffs_per_dof());
    }

  private:
    std::shared_ptr<const SystemModel> model_;
    BasisTables tables_;
};

/// Time-domain residual samples R(tau_k), dofs x N, DOF-major.
template <class T>
std::vector<T> residual_samples(const HbProblem& prob, std::span<const T> coeffs, const T& omega,
                                bool include_nonlinear = true) {
    const SystemModel& model = prob.model();
    const std::size_t n = prob.dofs();
    const std::size_t samples = prob.samples();
    const auto& tables = prob.tables();
    if (coeffs.size() != prob.unknowns()) {
        throw std::invalid_argument("residual: expected " + std::to_string(prob.unknowns()) +
                                    " coefficients, got " + std::to_string(coeffs.size()));
    }
    const std::vector<T> x0 = evaluate(coeffs, n, tables, 0);
    const std::vector<T> x1 = evaluate(coeffs, n, tables, 1);
    const std::vector<T> x2 = evaluate(coeffs, n, tables, 2);

    const T wb = omega / static_cast<double>(model.base_divisor());
    const T wb2 = wb * wb;
    const bool nonlinear = include_nonlinear && model.has_nonlinear_force();
    const bool gyro = model.has_gyroscopic();

    // Row i of [M | C | K] multiplies (acc, vel, disp).
    std::vector<double> weights(n * 3 * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const auto ii = static_cast<Eigen::Index>(i);
            const auto jj = static_cast<Eigen::Index>(j);
            weights[i * 3 * n + j] = model.mass()(ii, jj);
            weights[i * 3 * n + n + j] = model.damping()(ii, jj);
            weights[i * 3 * n + 2 * n + j] = model.stiffness()(ii, jj);
        }
    }
    std::vector<double> gyro_rows;
    if (gyro) {
        gyro_rows.resize(n * n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                gyro_rows[i * n + j] =
                    model.gyroscopic()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
        }
    }

    std::vector<T> state(3 * n);  // acc | vel | disp
    std::vector<T> fn(n, T(0.0));
    std::vector<T> load(n);
    std::vector<T> out(n * samples);
    const std::span<const T> acc(state.data(), n);
    const std::span<const T> vel(state.data() + n, n);
    const std::span<const T> disp(state.data() + 2 * n, n);
    for (std::size_t k = 0; k < samples; ++k) {
        const double tau = tables.grid().tau(k);
        for (std::size_t i = 0; i < n; ++i) {
            state[i] = wb2 * x2[i * samples + k];
            state[n + i] = wb * x1[i * samples + k];
            state[2 * n + i] = x0[i * samples + k];
        }
        try {
            if (nonlinear) {
                model.nonlinear_force(Kinematics<T>{acc, vel, disp}, tau, omega, fn);
            }
            model.excitation(tau, omega, load);
        } catch (const SampleError&) {
            throw;
        } catch (const DomainError& e) {
            throw SampleError(e, k);
        }
        for (std::size_t i = 0; i < n; ++i) {
            T r = ad::dot(std::span<const double>(weights).subspan(i * 3 * n, 3 * n), std::span<const T>(state));
            if (gyro) {
                r = r + omega * ad::dot(std::span<const double>(gyro_rows).subspan(i * n, n), vel);
            }
            if (nonlinear) {
                r = r + fn[i];
            }
            out[i * samples + k] = r - load[i];
        }
    }
    return out;
}

/// B(A, omega): residual Fourier coefficients in the coefficient layout.
template <class T>
std::vector<T> assemble_residual(const HbProblem& prob, std::span<const T> coeffs, const T& omega,
                                 bool include_nonlinear = true) {
    const std::vector<T> r = residual_samples(prob, coeffs, omega, include_nonlinear);
    return dft(std::span<const T>(r), prob.dofs(), prob.tables());
}

inline Eigen::VectorXd residual(const HbProblem& prob, std::span<const double> coeffs, double omega,
                                bool include_nonlinear = true) {
    const auto b = assemble_residual<double>(prob, coeffs, omega, include_nonlinear);
    return Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
}

/// Residual together with dB/dA and dB/domega from one tape recording.
struct Linearization {
    Eigen::VectorXd residual;
    Eigen::MatrixXd jacobian;  // dB/dA
    Eigen::VectorXd d_omega;   // dB/domega
    std::size_t tape_nodes = 0;
};

inline Linearization linearize(const HbProblem& prob, std::span<const double> coeffs, double omega,
                               bool include_nonlinear = true) {
    ad::Tape tape;
    const std::size_t m = coeffs.size();
    std::vector<ad::Var> a;
    a.reserve(m);
    for (double c : coeffs) {
        a.push_back(tape.input(c));
    }
    const ad::Var w = tape.input(omega);
    const std::vector<ad::Var> b = assemble_residual<ad::Var>(prob, a, w, include_nonlinear);
    const ad::DenseJacobian full = tape.jacobian(b);
    Linearization lin;
    lin.residual.resize(static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < b.size(); ++i) {
        lin.residual[static_cast<Eigen::Index>(i)] = b[i].value();
    }
    const auto mm = static_cast<Eigen::Index>(m);
    lin.jacobian = full.leftCols(mm);
    lin.d_omega = full.col(mm);
    lin.tape_nodes = tape.size();
    return lin;
}

/// dB/dA by AD.
inline Eigen::MatrixXd jacobian(const HbProblem& prob, std::span<const double> coeffs, double omega) {
    return linearize(prob, coeffs, omega).jacobian;
}

/// dB/domega at fixed coefficients, with omega registered as a tape input.
inline Eigen::VectorXd jacobian_domega(const HbProblem& prob, std::span<const double> coeffs, double omega) {
    return linearize(prob, coeffs, omega).d_omega;
}

struct NewtonOptions {
    double tol = 1e-9;
    int max_iter = 50;
};

struct NewtonReport {
    int iterations = 0;
    std::vector<double> residual_history;  // ||B||_2 before each update and at exit
    bool converged = false;
    double condition_estimate = 0.0;       // 1 / rcond of the last LU factorization
    std::string message;

    double final_residual() const { return residual_history.empty() ? INFINITY : residual_history.back(); }
};

struct NewtonResult {
    std::vector<double> coeffs;
    NewtonReport report;
};

/// A <- A - J^{-1} B with J recomputed each iteration; converged iff ||B||_2 < tol.
inline NewtonResult newton_solve(const HbProblem& prob, std::vector<double> coeffs, double omega,
                                 const NewtonOptions& opts = {}) {
    if (!(opts.tol > 0.0) || opts.max_iter < 0) {
        throw ConfigError("newton: tol must be positive and max_iter non-negative");
    }
    if (coeffs.size() != prob.unknowns()) {
        throw std::invalid_argument("newton: initial guess has wrong length");
    }
    NewtonResult result;
    NewtonReport& rep = result.report;
    try {
        for (int iter = 0;; ++iter) {
            const double norm = residual(prob, coeffs, omega).norm();
            rep.residual_history.push_back(norm);
            if (!std::isfinite(norm)) {
                rep.message = "residual is not finite";
                break;
            }
            if (norm < opts.tol) {
                rep.converged = true;
                break;
            }
            if (iter >= opts.max_iter) {
                rep.message = "maximum iterations reached";
                break;
            }
            const Linearization lin = linearize(prob, coeffs, omega);
            const Eigen::PartialPivLU<Eigen::MatrixXd> lu(lin.jacobian);
            const double rcond = lu.rcond();
            rep.condition_estimate = rcond > 0.0 ? 1.0 / rcond : INFINITY;
            if (!(rcond > 1e-15)) {
                rep.message = "singular Jacobian";
                break;
            }
            const Eigen::VectorXd step = lu.solve(lin.residual);
            if (!step.allFinite()) {
                rep.message = "non-finite Newton step";
                break;
            }
            for (std::size_t i = 0; i < coeffs.size(); ++i) {
                coeffs[i] -= step[static_cast<Eigen::Index>(i)];
            }
            rep.iterations = iter + 1;
        }
    } catch (const DomainError& e) {
        rep.message = e.what();
    }
    result.coeffs = std::move(coeffs);
    return result;
}

/// Solution of the system with f_N removed (exact after one linear solve).
inline std::vector<double> linear_response(const HbProblem& prob, double omega) {
    std::vector<double> zero(prob.unknowns(), 0.0);
    const Linearization lin = linearize(prob, zero, omega, false);
    const Eigen::VectorXd a = lin.jacobian.partialPivLu().solve(-lin.residual);
    return std::vector<double>(a.data(), a.data() + a.size());
}

/// Peak |x_i(tau)| of every DOF.
inline std::vector<double> amplitudes(const HbProblem& prob, std::span<const double> coeffs) {
    std::vector<double> amp(prob.dofs());
    for (std::size_t i = 0; i < prob.dofs(); ++i) {
        amp[i] = peak_amplitude(prob.dof_coeffs(coeffs, i), prob.set());
    }
    return amp;
}

}  // namespace hbad
