#pragma once

// Reduced-order dual-rotor surrogate: LP disk, LP rear journal, HP disk and a
// shared casing, each with x/y translation (8 DOF). The inter-shaft bearing
// (Hertz contacts with clearance and varying stiffness) joins the LP journal
// to the HP disk. Both disks hang on the casing, which carries the linear
// coupling between the rotors. The LP rotor turns at omega, the HP rotor at
// lambda omega with lambda = p / q, so the common period is 2 pi q / omega.

#include <memory>

#include "hbad/model.hpp"
#include "hbad/models/hertz.hpp"
#include "hbad/models/params.hpp"

namespace hbad {

/// Default values are illustrative, not measured data.
struct DualRotorParams {
    double mass_lp = 20.0;          // LP disk [kg]
    double mass_journal = 2.0;      // LP rear journal [kg]
    double mass_hp = 12.0;          // HP disk [kg]
    double mass_casing = 40.0;      // casing [kg]
    double k_lp = 4.8e5;            // LP disk - casing [N/m]
    double k_shaft = 1.6e6;         // LP disk - LP journal [N/m]
    double k_journal = 8.0e4;       // LP journal - ground [N/m]
    double k_hp = 2.7e5;            // HP disk - casing [N/m]
    double k_casing = 1.6e7;        // casing - ground [N/m]
    double damping_ratio = 2.2e-4;  // dashpot = damping_ratio * spring [s]
    double unbalance_lp = 2.0e-5;   // eccentricity of the LP disk [m]
    double unbalance_hp = 2.0e-5;   // eccentricity of the HP disk [m]
    int ratio_p = 6;                // lambda = p / q
    int ratio_q = 5;
    HertzBearingParams bearing{2.46e6, 1.5, 2.0e-5, 8, 0.125, 0.05};

    void validate() const {
        const std::string m = "dual_rotor";
        require_positive(m, "mass_lp", mass_lp);
        require_positive(m, "mass_journal", mass_journal);
        require_positive(m, "mass_hp", mass_hp);
        require_positive(m, "mass_casing", mass_casing);
        require_positive(m, "k_lp", k_lp);
        require_positive(m, "k_shaft", k_shaft);
        require_positive(m, "k_journal", k_journal);
        require_positive(m, "k_hp", k_hp);
        require_positive(m, "k_casing", k_casing);
        require_non_negative(m, "damping_ratio", damping_ratio);
        require_non_negative(m, "unbalance_lp", unbalance_lp);
        require_non_negative(m, "unbalance_hp", unbalance_hp);
        if (ratio_p < 1 || ratio_q < 1) {
            throw ConfigError(m + ": speed ratio p/q needs positive integers");
        }
        bearing.validate(m);
    }

    double speed_ratio() const { return static_cast<double>(ratio_p) / ratio_q; }
};

class DualRotorModel final : public ModelBase<DualRotorModel> {
  public:
    // DOF layout: node * 2 + {0: x, 1: y}
    enum Node : int { lp_disk = 0, lp_journal = 1, hp_disk = 2, casing = 3 };

    explicit DualRotorModel(const DualRotorParams& p)
        : ModelBase(mass_matrix(p), stiffness_matrix(p) * p.damping_ratio, Eigen::MatrixXd::Zero(8, 8),
                    stiffness_matrix(p)),
          params_(p) {
        params_.validate();
        require_positive_definite_mass();
    }

    static std::shared_ptr<DualRotorModel> create(const Overrides& overrides = {}) {
        DualRotorParams p;
        double ratio_p = p.ratio_p;
        double ratio_q = p.ratio_q;
        double balls = p.bearing.balls;
        apply_overrides("dual_rotor", overrides,
                        {{"mass_lp", &p.mass_lp},
                         {"mass_journal", &p.mass_journal},
                         {"mass_hp", &p.mass_hp},
                         {"mass_casing", &p.mass_casing},
                         {"k_lp", &p.k_lp},
                         {"k_shaft", &p.k_shaft},
                         {"k_journal", &p.k_journal},
                         {"k_hp", &p.k_hp},
                         {"k_casing", &p.k_casing},
                         {"damping_ratio", &p.damping_ratio},
                         {"unbalance_lp", &p.unbalance_lp},
                         {"unbalance_hp", &p.unbalance_hp},
                         {"ratio_p", &ratio_p},
                         {"ratio_q", &ratio_q},
                         {"contact_stiffness", &p.bearing.contact_stiffness},
                         {"exponent", &p.bearing.exponent},
                         {"bearing_clearance", &p.bearing.clearance},
                         {"balls", &balls},
                         {"cage_ratio", &p.bearing.cage_ratio},
                         {"stiffness_variation", &p.bearing.stiffness_variation}});
        p.ratio_p = as_count("dual_rotor", "ratio_p", ratio_p, 1);
        p.ratio_q = as_count("dual_rotor", "ratio_q", ratio_q, 1);
        p.bearing.balls = as_count("dual_rotor", "balls", balls, 1);
        return std::make_shared<DualRotorModel>(p);
    }

    std::string name() const override { return "dual_rotor"; }
    int base_divisor() const override { return params_.ratio_q; }
    const DualRotorParams& params() const { return params_; }

    ParameterList parameters() const override {
        const auto& p = params_;
        return {{"mass_lp", p.mass_lp},
                {"mass_journal", p.mass_journal},
                {"mass_hp", p.mass_hp},
                {"mass_casing", p.mass_casing},
                {"k_lp", p.k_lp},
                {"k_shaft", p.k_shaft},
                {"k_journal", p.k_journal},
                {"k_hp", p.k_hp},
                {"k_casing", p.k_casing},
                {"damping_ratio", p.damping_ratio},
                {"unbalance_lp", p.unbalance_lp},
                {"unbalance_hp", p.unbalance_hp},
                {"ratio_p", static_cast<double>(p.ratio_p)},
                {"ratio_q", static_cast<double>(p.ratio_q)},
                {"contact_stiffness", p.bearing.contact_stiffness},
                {"exponent", p.bearing.exponent},
                {"bearing_clearance", p.bearing.clearance},
                {"balls", static_cast<double>(p.bearing.balls)},
                {"cage_ratio", p.bearing.cage_ratio},
                {"stiffness_variation", p.bearing.stiffness_variation}};
    }

    /// Harmonic indices of the LP and HP unbalance on the base frequency.
    int lp_harmonic() const { return params_.ratio_q; }
    int hp_harmonic() const { return params_.ratio_p; }

    template <class T>
    void force(const Kinematics<T>& s, double tau, const T&, std::span<T> out) const {
        std::fill(out.begin(), out.end(), T(0.0));
        const T dx = s.displacement[2 * lp_journal] - s.displacement[2 * hp_disk];
        const T dy = s.displacement[2 * lp_journal + 1] - s.displacement[2 * hp_disk + 1];
        const auto f = hertz_bearing_force(dx, dy, tau, params_.bearing);
        out[2 * lp_journal] = f[0];
        out[2 * lp_journal + 1] = f[1];
        out[2 * hp_disk] = -f[0];
        out[2 * hp_disk + 1] = -f[1];
    }

    /// Rotating unbalance of both disks: LP at q tau, HP at p tau.
    template <class T>
    void load(double tau, const T& omega, std::span<T> out) const {
        std::fill(out.begin(), out.end(), T(0.0));
        const double lambda = params_.speed_ratio();
        const T w2 = omega * omega;
        const T lp = (params_.mass_lp * params_.unbalance_lp) * w2;
        const T hp = (params_.mass_hp * params_.unbalance_hp * lambda * lambda) * w2;
        const double phase_lp = params_.ratio_q * tau;
        const double phase_hp = params_.ratio_p * tau;
        out[2 * lp_disk] = lp * std::cos(phase_lp);
        out[2 * lp_disk + 1] = lp * std::sin(phase_lp);
        out[2 * hp_disk] = hp * std::cos(phase_hp);
        out[2 * hp_disk + 1] = hp * std::sin(phase_hp);
    }

  private:
    static Eigen::MatrixXd mass_matrix(const DualRotorParams& p) {
        Eigen::VectorXd d(8);
        d << p.mass_lp, p.mass_lp, p.mass_journal, p.mass_journal, p.mass_hp, p.mass_hp, p.mass_casing,
            p.mass_casing;
        return d.asDiagonal();
    }

    static Eigen::MatrixXd stiffness_matrix(const DualRotorParams& p) {
        Eigen::MatrixXd k = Eigen::MatrixXd::Zero(8, 8);
        const auto spring = [&k](int a, int b, double value) {
            for (int dir = 0; dir < 2; ++dir) {
                const int i = 2 * a + dir;
                k(i, i) += value;
                if (b >= 0) {
                    const int j = 2 * b + dir;
                    k(j, j) += value;
                    k(i, j) -= value;
                    k(j, i) -= value;
                }
            }
        };
        spring(lp_disk, casing, p.k_lp);
        spring(lp_disk, lp_journal, p.k_shaft);
        spring(lp_journal, -1, p.k_journal);
        spring(hp_disk, casing, p.k_hp);
        spring(casing, -1, p.k_casing);
        return k;
    }

    DualRotorParams params_;
};

}  // namespace hbad
