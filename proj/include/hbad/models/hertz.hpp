#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "hbad/ad.hpp"
#include "hbad/models/params.hpp"

namespace hbad {

/// Rolling-element bearing with radial clearance and Hertzian ball contacts.
struct HertzBearingParams {
    double contact_stiffness = 2.0e9;  // k_b [N/m^exponent]
    double exponent = 1.5;             // 3/2 ball, 10/9 roller
    double clearance = 5.0e-6;         // delta_0 [m]
    int balls = 8;                     // N_b
    double cage_ratio = 0.25;          // cage angle = cage_ratio * tau
    double stiffness_variation = 0.05; // relative amplitude of k_b(tau)

    void validate(const std::string& model) const {
        require_positive(model, "contact_stiffness", contact_stiffness);
        if (!(exponent > 1.0)) {
            throw ConfigError(model + ": Hertz exponent must exceed 1");
        }
        require_non_negative(model, "bearing_clearance", clearance);
        if (balls < 1) {
            throw ConfigError(model + ": ball count must be positive");
        }
        const double passes = balls * cage_ratio;
        if (std::abs(passes - std::round(passes)) > 1e-12) {
            throw ConfigError(model + ": balls * cage_ratio must be an integer for a periodic response");
        }
        if (stiffness_variation < 0.0 || stiffness_variation >= 1.0) {
            throw ConfigError(model + ": stiffness_variation must lie in [0, 1)");
        }
    }

    /// Cage angle of ball `i` at phase tau.
    double ball_angle(int i, double tau) const {
        return cage_ratio * tau + 2.0 * std::numbers::pi * i / balls;
    }

    /// k_b(tau) = k_b (1 + variation cos(N_b cage angle)).
    double stiffness_at(double tau) const {
        return contact_stiffness * (1.0 + stiffness_variation * std::cos(balls * cage_ratio * tau));
    }
};

/// Total contact force for relative journal displacement (dx, dy):
/// sum_i k_b(tau) max(dx cos phi_i + dy sin phi_i - delta_0, 0)^exponent (cos phi_i, sin phi_i).
template <class T>
std::array<T, 2> hertz_bearing_force(const T& dx, const T& dy, double tau, const HertzBearingParams& p) {
    const double kb = p.stiffness_at(tau);
    const auto nb = static_cast<std::size_t>(p.balls);
    std::vector<T> load(nb);
    std::vector<double> wx(nb), wy(nb);
    for (int i = 0; i < p.balls; ++i) {
        const double phi = p.ball_angle(i, tau);
        const double c = std::cos(phi);
        const double s = std::sin(phi);
        const T deflection = dx * c + dy * s - p.clearance;
        load[static_cast<std::size_t>(i)] = ad::pow(ad::positive_part(deflection), p.exponent);
        wx[static_cast<std::size_t>(i)] = kb * c;
        wy[static_cast<std::size_t>(i)] = kb * s;
    }
    return {ad::dot(wx, std::span<const T>(load)), ad::dot(wy, std::span<const T>(load))};
}

}  // namespace hbad
