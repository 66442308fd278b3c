#pragma once

// System definition for harmonic balance:
//
//   M x'' + (C + omega G) x' + K x + f_N(x'', x', x, tau) = F(tau, omega)
//
// in physical time, where omega is the excitation (rotor speed) parameter and
// tau = omega_base t is the phase over one common period, omega_base =
// omega / base_divisor(). G holds the speed-proportional (gyroscopic) part.
// f_N and F must be evaluable on both double and ad::Var; derive from
// ModelBase<Derived> and provide the two templates shown there.

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hbad/ad.hpp"
#include "hbad/error.hpp"

namespace hbad {

/// Physical-time kinematics of every DOF at one instant.
template <class T>
struct Kinematics {
    std::span<const T> acceleration;
    std::span<const T> velocity;
    std::span<const T> displacement;
};

using ParameterList = std::vector<std::pair<std::string, double>>;

class SystemModel {
  public:
    SystemModel(Eigen::MatrixXd mass, Eigen::MatrixXd damping, Eigen::MatrixXd gyroscopic,
                Eigen::MatrixXd stiffness)
        : mass_(std::move(mass)),
          damping_(std::move(damping)),
          gyroscopic_(std::move(gyroscopic)),
          stiffness_(std::move(stiffness)) {
        const auto n = mass_.rows();
        const auto square = [n](const Eigen::MatrixXd& m) { return m.rows() == n && m.cols() == n; };
        if (n == 0 || !square(mass_) || !square(damping_) || !square(gyroscopic_) || !square(stiffness_)) {
            throw ConfigError("system matrices must all be square with the same size");
        }
        has_gyroscopic_ = !gyroscopic_.isZero(0.0);
    }

    virtual ~SystemModel() = default;

    virtual std::string name() const = 0;

    std::size_t dofs() const noexcept { return static_cast<std::size_t>(mass_.rows()); }
    const Eigen::MatrixXd& mass() const noexcept { return mass_; }
    const Eigen::MatrixXd& damping() const noexcept { return damping_; }
    const Eigen::MatrixXd& gyroscopic() const noexcept { return gyroscopic_; }
    const Eigen::MatrixXd& stiffness() const noexcept { return stiffness_; }
    bool has_gyroscopic() const noexcept { return has_gyroscopic_; }

    /// C(omega) = C + omega G.
    Eigen::MatrixXd damping_at(double omega) const { return damping_ + omega * gyroscopic_; }

    /// omega_base = omega / base_divisor(); tau advances 2 pi per common period.
    virtual int base_divisor() const { return 1; }
    double base_frequency(double omega) const { return omega / base_divisor(); }

    virtual bool has_nonlinear_force() const { return true; }
    virtual bool force_uses_acceleration() const { return false; }

    virtual void nonlinear_force(const Kinematics<double>& state, double tau, double omega,
                                 std::span<double> out) const = 0;
    virtual void nonlinear_force(const Kinematics<ad::Var>& state, double tau, const ad::Var& omega,
                                 std::span<ad::Var> out) const = 0;
    virtual void excitation(double tau, double omega, std::span<double> out) const = 0;
    virtual void excitation(double tau, const ad::Var& omega, std::span<ad::Var> out) const = 0;

    /// Named scalar parameters, for output metadata.
    virtual ParameterList parameters() const { return {}; }

  protected:
    void require_positive_definite_mass() const {
        if (!mass_.isApprox(mass_.transpose()) || mass_.llt().info() != Eigen::Success) {
            throw ConfigError(name() + ": mass matrix must be symmetric positive definite");
        }
    }

  private:
    Eigen::MatrixXd mass_;
    Eigen::MatrixXd damping_;
    Eigen::MatrixXd gyroscopic_;
    Eigen::MatrixXd stiffness_;
    bool has_gyroscopic_ = false;
};

/// CRTP adapter. Derived provides
///   template <class T> void force(const Kinematics<T>&, double tau, const T& omega, std::span<T> out) const;
///   template <class T> void load(double tau, const T& omega, std::span<T> out) const;
template <class Derived>
class ModelBase : public SystemModel {
  public:
    using SystemModel::SystemModel;

    void nonlinear_force(const Kinematics<double>& state, double tau, double omega,
                         std::span<double> out) const override {
        self().template force<double>(state, tau, omega, out);
    }
    void nonlinear_force(const Kinematics<ad::Var>& state, double tau, const ad::Var& omega,
                         std::span<ad::Var> out) const override {
        self().template force<ad::Var>(state, tau, omega, out);
    }
    void excitation(double tau, double omega, std::span<double> out) const override {
        self().template load<double>(tau, omega, out);
    }
    void excitation(double tau, const ad::Var& omega, std::span<ad::Var> out) const override {
        self().template load<ad::Var>(tau, omega, out);
    }

  private:
    const Derived& self() const { return static_cast<const Derived&>(*this); }
};

/// Linear system with single-harmonic forcing F = f_cos cos(tau) + f_sin sin(tau).
class LinearModel final : public ModelBase<LinearModel> {
  public:
    LinearModel(Eigen::MatrixXd mass, Eigen::MatrixXd damping, Eigen::MatrixXd stiffness,
                Eigen::VectorXd force_cos, Eigen::VectorXd force_sin, std::string name = "linear")
        : ModelBase(std::move(mass), std::move(damping),
                    Eigen::MatrixXd::Zero(force_cos.size(), force_cos.size()), std::move(stiffness)),
          force_cos_(std::move(force_cos)),
          force_sin_(std::move(force_sin)),
          name_(std::move(name)) {
        if (force_cos_.size() != static_cast<Eigen::Index>(dofs()) ||
            force_sin_.size() != static_cast<Eigen::Index>(dofs())) {
            throw ConfigError("linear model: force vectors must have one entry per DOF");
        }
        require_positive_definite_mass();
    }

    /// Two-mass chain: ground -k1,c1- m1 -k2,c2- m2, force f cos(omega t) on m1.
    static std::shared_ptr<LinearModel> two_dof_chain(double m1, double m2, double k1, double k2,
                                                      double c1, double c2, double f) {
        for (double p : {m1, m2, k1, k2}) {
            if (!(p > 0.0)) {
                throw ConfigError("linear: masses and stiffnesses must be positive");
            }
        }
        if (c1 < 0.0 || c2 < 0.0) {
            throw ConfigError("linear: damping must be non-negative");
        }
        Eigen::Matrix2d m{{m1, 0.0}, {0.0, m2}};
        Eigen::Matrix2d c{{c1 + c2, -c2}, {-c2, c2}};
        Eigen::Matrix2d k{{k1 + k2, -k2}, {-k2, k2}};
        auto model = std::make_shared<LinearModel>(m, c, k, Eigen::Vector2d(f, 0.0), Eigen::Vector2d::Zero());
        model->params_ = {{"m1", m1}, {"m2", m2}, {"k1", k1}, {"k2", k2}, {"c1", c1}, {"c2", c2}, {"force", f}};
        return model;
    }

    std::string name() const override { return name_; }
    bool has_nonlinear_force() const override { return false; }
    ParameterList parameters() const override { return params_; }

    const Eigen::VectorXd& force_cos() const { return force_cos_; }
    const Eigen::VectorXd& force_sin() const { return force_sin_; }

    template <class T>
    void force(const Kinematics<T>&, double, const T&, std::span<T> out) const {
        std::fill(out.begin(), out.end(), T(0.0));
    }

    template <class T>
    void load(double tau, const T&, std::span<T> out) const {
        const double c = std::cos(tau);
        const double s = std::sin(tau);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = T(force_cos_[static_cast<Eigen::Index>(i)] * c + force_sin_[static_cast<Eigen::Index>(i)] * s);
        }
    }

  private:
    Eigen::VectorXd force_cos_;
    Eigen::VectorXd force_sin_;
    std::string name_;
    ParameterList params_;
};

}  // namespace hbad
