#pragma once

#include <memory>

#include "hbad/model.hpp"
#include "hbad/models/params.hpp"

namespace hbad {

/// x'' + 2 zeta x' + x + kappa x^3 = force cos(omega t), unit natural frequency.
struct DuffingParams {
    double zeta = 0.05;
    double kappa = 1.0;
    double force = 0.4;

    void validate() const {
        require_non_negative("duffing", "zeta", zeta);
    }
};

class DuffingModel final : public ModelBase<DuffingModel> {
  public:
    explicit DuffingModel(const DuffingParams& p)
        : ModelBase(Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Constant(1, 1, 2.0 * p.zeta),
                    Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Identity(1, 1)),
          params_(p) {
        params_.validate();
    }

    static std::shared_ptr<DuffingModel> create(const Overrides& overrides = {}) {
        DuffingParams p;
        apply_overrides("duffing", overrides, {{"zeta", &p.zeta}, {"kappa", &p.kappa}, {"force", &p.force}});
        return std::make_shared<DuffingModel>(p);
    }

    std::string name() const override { return "duffing"; }
    bool has_nonlinear_force() const override { return params_.kappa != 0.0; }
    ParameterList parameters() const override {
        return {{"zeta", params_.zeta}, {"kappa", params_.kappa}, {"force", params_.force}};
    }
    const DuffingParams& params() const { return params_; }

    template <class T>
    void force(const Kinematics<T>& s, double, const T&, std::span<T> out) const {
        const T& x = s.displacement[0];
        out[0] = params_.kappa * (x * x * x);
    }

    template <class T>
    void load(double tau, const T&, std::span<T> out) const {
        out[0] = T(params_.force * std::cos(tau));
    }

  private:
    DuffingParams params_;
};

}  // namespace hbad
