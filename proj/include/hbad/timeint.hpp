#pragma once

// Reference time integrators for the equation of motion in physical time:
// classical RK4 on the first-order form and average-acceleration Newmark with
// an inner Newton solve whose tangent comes from AD partials of f_N.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "hbad/ad.hpp"
#include "hbad/error.hpp"
#include "hbad/fourier.hpp"
#include "hbad/model.hpp"

namespace hbad {

/// Uniformly sampled trajectory; row k holds all DOFs at times[k].
struct Trajectory {
    std::size_t dofs = 0;
    double dt = 0.0;
    std::vector<double> times;
    std::vector<double> displacement;
    std::vector<double> velocity;

    std::size_t size() const noexcept { return times.size(); }
    double x(std::size_t k, std::size_t dof) const { return displacement[k * dofs + dof]; }
    double v(std::size_t k, std::size_t dof) const { return velocity[k * dofs + dof]; }

    void push(double t, const Eigen::VectorXd& xs, const Eigen::VectorXd& vs) {
        times.push_back(t);
        displacement.insert(displacement.end(), xs.data(), xs.data() + xs.size());
        velocity.insert(velocity.end(), vs.data(), vs.data() + vs.size());
    }
};

namespace detail {

inline std::size_t step_count(double t_end, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ConfigError("time step must be positive and finite");
    }
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) {
        throw ConfigError("end time must be non-negative and finite");
    }
    return static_cast<std::size_t>(std::llround(t_end / dt));
}

inline void check_initial(const SystemModel& model, const Eigen::VectorXd& x0, const Eigen::VectorXd& v0) {
    if (x0.size() != static_cast<Eigen::Index>(model.dofs()) || v0.size() != x0.size()) {
        throw ConfigError("initial state must have one entry per DOF");
    }
}

inline Eigen::VectorXd load_at(const SystemModel& model, double t, double omega) {
    Eigen::VectorXd f(static_cast<Eigen::Index>(model.dofs()));
    model.excitation(model.base_frequency(omega) * t, omega, std::span<double>(f.data(), model.dofs()));
    return f;
}

}  // namespace detail

/// Classical RK4. Samples from `record_from` onwards are kept.
inline Trajectory rk4(const SystemModel& model, const Eigen::VectorXd& x0, const Eigen::VectorXd& v0, double omega,
                      double t_end, double dt, double record_from = 0.0) {
    if (model.force_uses_acceleration()) {
        throw ConfigError("rk4: " + model.name() + " has an acceleration-dependent force; use newmark");
    }
    detail::check_initial(model, x0, v0);
    const std::size_t steps = detail::step_count(t_end, dt);
    const std::size_t n = model.dofs();
    const auto nn = static_cast<Eigen::Index>(n);
    const Eigen::PartialPivLU<Eigen::MatrixXd> mass(model.mass());
    const Eigen::MatrixXd damping = model.damping_at(omega);
    const bool nonlinear = model.has_nonlinear_force();
    const double base = model.base_frequency(omega);
    const std::vector<double> zero(n, 0.0);
    Eigen::VectorXd fn = Eigen::VectorXd::Zero(nn);
    Eigen::VectorXd load(nn);

    const auto accel = [&](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
        const double tau = base * t;
        model.excitation(tau, omega, std::span<double>(load.data(), n));
        if (nonlinear) {
            model.nonlinear_force(Kinematics<double>{zero, std::span<const double>(v.data(), n),
                                                     std::span<const double>(x.data(), n)},
                                  tau, omega, std::span<double>(fn.data(), n));
        }
        return Eigen::VectorXd(mass.solve(load - damping * v - model.stiffness() * x - fn));
    };

    Trajectory traj;
    traj.dofs = n;
    traj.dt = dt;
    Eigen::VectorXd x = x0;
    Eigen::VectorXd v = v0;
    const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(record_from / dt - 1e-9)));
    if (first == 0) {
        traj.push(0.0, x, v);
    }
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        try {
            const Eigen::VectorXd a1 = accel(t, x, v);
            const Eigen::VectorXd x2 = x + 0.5 * dt * v;
            const Eigen::VectorXd v2 = v + 0.5 * dt * a1;
            const Eigen::VectorXd a2 = accel(t + 0.5 * dt, x2, v2);
            const Eigen::VectorXd x3 = x + 0.5 * dt * v2;
            const Eigen::VectorXd v3 = v + 0.5 * dt * a2;
            const Eigen::VectorXd a3 = accel(t + 0.5 * dt, x3, v3);
            const Eigen::VectorXd x4 = x + dt * v3;
            const Eigen::VectorXd v4 = v + dt * a3;
            const Eigen::VectorXd a4 = accel(t + dt, x4, v4);
            x += (dt / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4);
            v += (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        } catch (const DomainError& e) {
            throw NumericalError("rk4: step " + std::to_string(k + 1) + ": " + e.what());
        }
        if (!x.allFinite() || !v.allFinite()) {
            throw NumericalError("rk4: non-finite state at step " + std::to_string(k + 1));
        }
        if (k + 1 >= first) {
            traj.push(static_cast<double>(k + 1) * dt, x, v);
        }
    }
    return traj;
}

struct NewmarkOptions {
    double beta = 0.25;
    double gamma = 0.5;
    double tol = 1e-10;      // relative increment of the acceleration update
    int max_iter = 25;
    int max_halvings = 10;   // dt_min = dt / 2^max_halvings
};

namespace detail {

/// Residual M a + C v + K x + f_N(a, v, x) - F and the partials of f_N.
class NewmarkSystem {
  public:
    NewmarkSystem(const SystemModel& model, double omega)
        : model_(model), omega_(omega), damping_(model.damping_at(omega)), n_(model.dofs()) {}

    /// Residual at (a, v, x, t); jac_{a,v,x} receive df_N/d(a, v, x) when requested.
    Eigen::VectorXd residual(const Eigen::VectorXd& a, const Eigen::VectorXd& v, const Eigen::VectorXd& x, double t,
                             Eigen::MatrixXd* jac) const {
        const auto nn = static_cast<Eigen::Index>(n_);
        Eigen::VectorXd r = model_.mass() * a + damping_ * v + model_.stiffness() * x - load_at(model_, t, omega_);
        const double tau = model_.base_frequency(omega_) * t;
        if (!model_.has_nonlinear_force()) {
            if (jac) {
                jac->setZero(nn, 3 * nn);
            }
            return r;
        }
        if (!jac) {
            Eigen::VectorXd fn(nn);
            model_.nonlinear_force(Kinematics<double>{std::span<const double>(a.data(), n_),
                                                      std::span<const double>(v.data(), n_),
                                                      std::span<const double>(x.data(), n_)},
                                   tau, omega_, std::span<double>(fn.data(), n_));
            return r + fn;
        }
        ad::Tape tape;
        std::vector<ad::Var> state;
        state.reserve(3 * n_);
        for (const Eigen::VectorXd* part : {&a, &v, &x}) {
            for (Eigen::Index i = 0; i < nn; ++i) {
                state.push_back(tape.input((*part)[i]));
            }
        }
        const std::span<const ad::Var> all(state);
        std::vector<ad::Var> fn(n_);
        model_.nonlinear_force(Kinematics<ad::Var>{all.subspan(0, n_), all.subspan(n_, n_), all.subspan(2 * n_, n_)},
                               tau, ad::Var(omega_), fn);
        *jac = tape.jacobian(fn);
        for (std::size_t i = 0; i < n_; ++i) {
            r[static_cast<Eigen::Index>(i)] += fn[i].value();
        }
        return r;
    }

    const Eigen::MatrixXd& damping() const { return damping_; }
    const SystemModel& model() const { return model_; }

  private:
    const SystemModel& model_;
    double omega_;
    Eigen::MatrixXd damping_;
    std::size_t n_;
};

struct NewmarkState {
    Eigen::VectorXd x, v, a;
};

/// One Newmark step of size h from `s` at time t; false if the inner Newton fails.
inline bool newmark_step(const NewmarkSystem& sys, NewmarkState& s, double t, double h, const NewmarkOptions& o) {
    const SystemModel& model = sys.model();
    const Eigen::VectorXd x_pred = s.x + h * s.v + (0.5 - o.beta) * h * h * s.a;
    const Eigen::VectorXd v_pred = s.v + (1.0 - o.gamma) * h * s.a;
    Eigen::VectorXd a = s.a;
    Eigen::MatrixXd jac;
    const auto n = static_cast<Eigen::Index>(model.dofs());
    const bool linear = !model.has_nonlinear_force();
    try {
        for (int iter = 0; iter < o.max_iter; ++iter) {
            const Eigen::VectorXd x = x_pred + o.beta * h * h * a;
            const Eigen::VectorXd v = v_pred + o.gamma * h * a;
            const Eigen::VectorXd r = sys.residual(a, v, x, t + h, &jac);
            Eigen::MatrixXd tangent = model.mass() + o.gamma * h * sys.damping() + o.beta * h * h * model.stiffness();
            if (!linear) {
                tangent += jac.leftCols(n) + o.gamma * h * jac.middleCols(n, n) + o.beta * h * h * jac.rightCols(n);
            }
            const Eigen::PartialPivLU<Eigen::MatrixXd> lu(tangent);
            const Eigen::VectorXd da = lu.solve(r);
            if (!da.allFinite()) {
                return false;
            }
            a -= da;
            if (linear || da.norm() <= o.tol * (1.0 + a.norm())) {
                s.x = x_pred + o.beta * h * h * a;
                s.v = v_pred + o.gamma * h * a;
                s.a = a;
                return s.x.allFinite() && s.v.allFinite();
            }
        }
    } catch (const DomainError&) {
        return false;
    }
    return false;
}

/// Advances by h, splitting the step in halves on inner-Newton failure.
inline void newmark_advance(const NewmarkSystem& sys, NewmarkState& s, double t, double h, int depth,
                            const NewmarkOptions& o) {
    NewmarkState trial = s;
    if (newmark_step(sys, trial, t, h, o)) {
        s = std::move(trial);
        return;
    }
    if (depth >= o.max_halvings) {
        throw NumericalError("newmark: inner Newton failed at t = " + std::to_string(t) +
                             " s with the minimum step " + std::to_string(h) + " s");
    }
    newmark_advance(sys, s, t, 0.5 * h, depth + 1, o);
    newmark_advance(sys, s, t + 0.5 * h, 0.5 * h, depth + 1, o);
}

}  // namespace detail

/// Newmark-beta integration with samples kept from `record_from` onwards.
inline Trajectory newmark(const SystemModel& model, const Eigen::VectorXd& x0, const Eigen::VectorXd& v0,
                          double omega, double t_end, double dt, const NewmarkOptions& opts = {},
                          double record_from = 0.0) {
    detail::check_initial(model, x0, v0);
    if (!(opts.beta > 0.0) || !(opts.gamma >= 0.5)) {
        throw ConfigError("newmark: need beta > 0 and gamma >= 1/2");
    }
    const std::size_t steps = detail::step_count(t_end, dt);
    const detail::NewmarkSystem sys(model, omega);
    const auto n = static_cast<Eigen::Index>(model.dofs());

    // Initial acceleration from the equation of motion.
    detail::NewmarkState s{x0, v0, Eigen::VectorXd::Zero(n)};
    {
        Eigen::MatrixXd jac;
        bool ok = false;
        try {
            for (int iter = 0; iter < opts.max_iter; ++iter) {
                const Eigen::VectorXd r = sys.residual(s.a, s.v, s.x, 0.0, &jac);
                Eigen::MatrixXd tangent = model.mass();
                if (model.has_nonlinear_force()) {
                    tangent += jac.leftCols(n);
                }
                const Eigen::VectorXd da = tangent.partialPivLu().solve(r);
                s.a -= da;
                if (!model.has_nonlinear_force() || da.norm() <= opts.tol * (1.0 + s.a.norm())) {
                    ok = s.a.allFinite();
                    break;
                }
            }
        } catch (const DomainError& e) {
            throw NumericalError(std::string("newmark: initial state: ") + e.what());
        }
        if (!ok) {
            throw NumericalError("newmark: initial acceleration did not converge");
        }
    }

    Trajectory traj;
    traj.dofs = model.dofs();
    traj.dt = dt;
    const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(record_from / dt - 1e-9)));
    if (first == 0) {
        traj.push(0.0, s.x, s.v);
    }
    for (std::size_t k = 0; k < steps; ++k) {
        detail::newmark_advance(sys, s, static_cast<double>(k) * dt, dt, 0, opts);
        if (k + 1 >= first) {
            traj.push(static_cast<double>(k + 1) * dt, s.x, s.v);
        }
    }
    return traj;
}

struct SteadyState {
    std::vector<double> coeffs;     // flat DOF-major, HB coefficient layout
    std::vector<double> amplitude;  // peak |x_i| over the final period
    double period_mismatch = 0.0;   // RMS(last - previous period) / RMS(last period)
    bool steady = false;            // period_mismatch <= 1%
};

/// Projects the final period of `traj` onto `set` and checks periodicity
/// against the period before it.
inline SteadyState steady_state_extract(const Trajectory& traj, double period, const HarmonicSet& set,
                                        int discard_periods = 200) {
    if (!(period > 0.0) || traj.size() < 2) {
        throw ConfigError("steady_state_extract: need a positive period and a non-trivial trajectory");
    }
    const double t_end = traj.times.back();
    if (t_end + 1e-9 * period < (discard_periods + 1) * period) {
        throw ConfigError("steady_state_extract: trajectory ends before discard_periods + 1 periods");
    }
    const double per = period / traj.dt;
    const auto samples = static_cast<std::size_t>(std::llround(per));
    if (samples < 4 || std::abs(per - static_cast<double>(samples)) > 1e-6 * per) {
        throw ConfigError("steady_state_extract: the period must be a whole number of time steps");
    }
    if (traj.size() < samples + 1) {
        throw ConfigError("steady_state_extract: trajectory shorter than one period");
    }
    const std::size_t n = traj.dofs;
    const std::size_t last = traj.size() - 1;
    const std::size_t begin = last - samples;  // final period is [begin, last)
    const std::size_t hc = set.size();
    const std::size_t per_dof = set.coeffs_per_dof();

    SteadyState out;
    out.coeffs.assign(n * per_dof, 0.0);
    out.amplitude.assign(n, 0.0);
    const double inv = 1.0 / static_cast<double>(samples);
    for (std::size_t j = 0; j < samples; ++j) {
        const std::size_t k = begin + j;
        const double tau = 2.0 * std::numbers::pi * traj.times[k] / period;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = traj.x(k, i);
            out.amplitude[i] = std::max(out.amplitude[i], std::abs(x));
            double* c = out.coeffs.data() + i * per_dof;
            c[0] += inv * x;
            for (std::size_t pos = 1; pos < hc; ++pos) {
                const double kt = set.indices()[pos] * tau;
                c[set.cos_slot(pos)] += 2.0 * inv * x * std::cos(kt);
                c[set.sin_slot(pos)] += 2.0 * inv * x * std::sin(kt);
            }
        }
    }

    double diff2 = 0.0;
    double ref2 = 0.0;
    if (begin >= samples) {
        for (std::size_t j = 0; j < samples; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                const double cur = traj.x(begin + j, i);
                const double prev = traj.x(begin + j - samples, i);
                diff2 += (cur - prev) * (cur - prev);
                ref2 += cur * cur;
            }
        }
        out.period_mismatch = ref2 > 0.0 ? std::sqrt(diff2 / ref2) : (diff2 > 0.0 ? INFINITY : 0.0);
        out.steady = out.period_mismatch <= 0.01;
    } else {
        out.period_mismatch = INFINITY;
        out.steady = false;
    }
    return out;
}

enum class Integrator { rk4, newmark };

struct SteadyRunOptions {
    Integrator method = Integrator::newmark;
    int steps_per_period = 500;
    int discard_periods = 200;
    NewmarkOptions newmark;
    std::vector<double> x0;  // empty: start from rest
    std::vector<double> v0;
};

/// Integrates from (x0, v0) for discard_periods + 1 common periods and extracts the final one.
inline SteadyState run_to_steady_state(const SystemModel& model, double omega, const HarmonicSet& set,
                                       const SteadyRunOptions& opts = {}, Trajectory* keep = nullptr) {
    if (opts.steps_per_period < 4 || opts.discard_periods < 1) {
        throw ConfigError("steady-state run: steps_per_period >= 4 and discard_periods >= 1 required");
    }
    const double period = 2.0 * std::numbers::pi / model.base_frequency(omega);
    const double dt = period / opts.steps_per_period;
    const double t_end = (opts.discard_periods + 1) * period;
    const double record_from = (opts.discard_periods - 1) * period;
    const auto n = static_cast<Eigen::Index>(model.dofs());
    const auto initial = [n](const std::vector<double>& v) {
        return v.empty() ? Eigen::VectorXd(Eigen::VectorXd::Zero(n))
                         : Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    const Eigen::VectorXd x0 = initial(opts.x0);
    const Eigen::VectorXd v0 = initial(opts.v0);
    Trajectory traj = opts.method == Integrator::rk4
                          ? rk4(model, x0, v0, omega, t_end, dt, record_from)
                          : newmark(model, x0, v0, omega, t_end, dt, opts.newmark, record_from);
    SteadyState ss = steady_state_extract(traj, period, set, opts.discard_periods);
    if (keep) {
        *keep = std::move(traj);
    }
    return ss;
}

}  // namespace hbad
