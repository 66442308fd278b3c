#pragma once

// Four-DOF rigid rotor (x, y, theta_x, theta_y) on elastic supports with a
// short-bearing squeeze-film damper at distance l1 from the disk.

#include <array>
#include <cmath>
#include <memory>
#include <numbers>

#include "hbad/model.hpp"
#include "hbad/models/params.hpp"
#include "hbad/quadrature.hpp"

namespace hbad {

/// Default values are illustrative, not measured data.
struct SfdRotorParams {
    double mass = 10.0;               // m [kg]
    double damping = 50.0;            // c [N s/m]
    double stiffness = 1.0e6;         // k [N/m]
    double inertia_diametral = 0.05;  // J_d [kg m^2]
    double inertia_polar = 0.09;      // J_p [kg m^2]
    double l1 = 0.10;                 // [m]
    double l2 = 0.15;                 // [m]
    double eccentricity = 2.0e-5;     // e [m]
    double viscosity = 0.02;          // mu [Pa s]
    double radius = 0.05;             // R [m]
    double land_length = 0.01;        // L [m]
    double clearance = 2.0e-4;        // delta_c [m]
    int quadrature_order = 32;

    void validate(bool allow_zero_eccentricity = true) const {
        const std::string m = "sfd_rotor";
        require_positive(m, "mass", mass);
        require_positive(m, "damping", damping);
        require_positive(m, "stiffness", stiffness);
        require_positive(m, "inertia_diametral", inertia_diametral);
        require_positive(m, "inertia_polar", inertia_polar);
        require_positive(m, "l1", l1);
        require_positive(m, "l2", l2);
        if (allow_zero_eccentricity) {
            require_non_negative(m, "eccentricity", eccentricity);
        } else {
            require_positive(m, "eccentricity", eccentricity);
        }
        require_positive(m, "viscosity", viscosity);
        require_positive(m, "radius", radius);
        require_positive(m, "land_length", land_length);
        require_positive(m, "clearance", clearance);
        if (quadrature_order < 2) {
            throw ConfigError("sfd_rotor: quadrature_order must be >= 2");
        }
        if (!(inertia_polar < 2.0 * inertia_diametral)) {
            throw ConfigError("sfd_rotor: inertia_polar must be below 2 * inertia_diametral");
        }
    }

    /// mu R L^3 / delta_c^2.
    double film_constant() const { return viscosity * radius * std::pow(land_length, 3) / (clearance * clearance); }
};

/// Sommerfeld angle gamma(theta) with 1 + d cos(theta) = (1 - d^2) / (1 - d cos(gamma)),
/// i.e. tan(gamma / 2) = m tan(theta / 2), m = sqrt((1 - d) / (1 + d)). Continuous
/// and increasing in theta, with gamma - theta in (-pi, pi).
template <class T>
T sommerfeld_angle(const T& theta, const T& m) {
    return theta + 2.0 * ad::atan2((m - 1.0) * ad::sin(theta), (1.0 + m) + (1.0 - m) * ad::cos(theta));
}

namespace detail {

inline void check_film_ratio(double dr) {
    if (!(dr < 1.0)) {
        throw DomainError("sfd_force", "film rupture: journal reaches the housing (delta_r >= 1)");
    }
    if (dr < 0.0) {
        throw DomainError("sfd_force", "negative eccentricity ratio");
    }
}

}  // namespace detail

/// I_3^{ln} = integral over [theta1, theta1 + pi] of sin^l cos^n / (1 + delta_r cos)^3.
/// In the Sommerfeld angle the integrand becomes
/// (1 - d^2)^((l - 5) / 2) sin^l(g) (cos(g) - d)^n (1 - d cos(g))^(2 - l - n),
/// a trigonometric polynomial for l + n <= 2, so Gauss-Legendre stays exact
/// up to rounding for every 0 <= delta_r < 1.
template <class T>
T sommerfeld_integral(int l, int n, const T& delta_r, const T& theta1, const GaussLegendre& rule) {
    if (l < 0 || l > 2 || n < 0 || n > 2) {
        throw std::invalid_argument("sommerfeld_integral: exponents must be in 0..2");
    }
    detail::check_film_ratio(ad::value_of(delta_r));
    const T q = ad::sqrt(1.0 - delta_r * delta_r);
    const T m = q / (1.0 + delta_r);
    const T a = sommerfeld_angle(theta1, m);
    const T half = 0.5 * (sommerfeld_angle(theta1 + std::numbers::pi, m) - a);
    T total(0.0);
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const T g = a + half * (1.0 + rule.nodes[i]);
        const T s = ad::sin(g);
        const T c = ad::cos(g) - delta_r;
        const T w = 1.0 - delta_r * ad::cos(g);
        T term(rule.weights[i]);
        for (int k = 0; k < l; ++k) term = term * s;
        for (int k = 0; k < n; ++k) term = term * c;
        for (int k = l + n; k < 2; ++k) term = term * w;
        for (int k = 2; k < l + n; ++k) term = term / w;
        total = total + term;
    }
    T scale(1.0);
    for (int k = l; k < 5; ++k) scale = scale * q;
    return half * total / scale;
}

/// The three integrals I^{11}, I^{02}, I^{20} sharing one set of quadrature nodes.
template <class T>
std::array<T, 3> sommerfeld_set(const T& delta_r, const T& theta1, const GaussLegendre& rule) {
    detail::check_film_ratio(ad::value_of(delta_r));
    const T q = ad::sqrt(1.0 - delta_r * delta_r);
    const T m = q / (1.0 + delta_r);
    const T a = sommerfeld_angle(theta1, m);
    const T half = 0.5 * (sommerfeld_angle(theta1 + std::numbers::pi, m) - a);
    const std::size_t nodes = rule.size();
    std::vector<T> w11(nodes), w02(nodes), w20(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        const T g = a + half * (1.0 + rule.nodes[i]);
        const T s = ad::sin(g);
        const T c = ad::cos(g) - delta_r;
        w11[i] = s * c;
        w02[i] = c * c;
        w20[i] = s * s;
    }
    const T q2 = q * q;
    const T q3 = q2 * q;
    return {half * ad::dot(rule.weights, std::span<const T>(w11)) / (q2 * q2),
            half * ad::dot(rule.weights, std::span<const T>(w02)) / (q3 * q2),
            half * ad::dot(rule.weights, std::span<const T>(w20)) / q3};
}

template <class T>
struct SfdState {
    T x, y, theta_x, theta_y;
    T dx, dy, dtheta_x, dtheta_y;
};

template <class T>
struct SfdForce {
    T fx, fy;          // Cartesian components
    T fr, ft;          // radial / tangential
    T psi;             // precession angle
    T theta1;          // start of the active film
    T delta_r;         // eccentricity ratio
};

/// Short-bearing film force. The journal-centre radius is regularized as
/// sqrt(u^2 + v^2 + eps^2), eps = 1e-12 delta_c, and the active film starts at
/// theta1 = atan2(-d(delta_e)/dt, delta_e dpsi/dt).
template <class T>
SfdForce<T> sfd_force(const SfdState<T>& s, const SfdRotorParams& p, const GaussLegendre& rule) {
    const T u = s.x + s.theta_y * p.l1;
    const T v = s.y - s.theta_x * p.l1;
    const T du = s.dx + s.dtheta_y * p.l1;
    const T dv = s.dy - s.dtheta_x * p.l1;
    const double eps = 1e-12 * p.clearance;
    const T r2 = u * u + v * v + eps * eps;
    const T delta_e = ad::sqrt(r2);
    if (!(ad::value_of(delta_e) < p.clearance)) {
        throw DomainError("sfd_force", "journal contacts the damper housing (delta_e >= delta_c)");
    }
    const T delta_r = delta_e / p.clearance;
    const T ddelta_e = (u * du + v * dv) / delta_e;
    const T ddelta_r = ddelta_e / p.clearance;
    const T psi = ad::atan2(v, u);
    const T dpsi = (u * dv - v * du) / r2;
    const T theta1 = ad::atan2(-ddelta_e, delta_e * dpsi);
    const auto [i11, i02, i20] = sommerfeld_set(delta_r, theta1, rule);
    const double kf = p.film_constant();
    const T fr = kf * (i11 * dpsi * delta_r + i02 * ddelta_r);
    const T ft = kf * (i20 * dpsi * delta_r + i11 * ddelta_r);
    const T cos_psi = u / delta_e;
    const T sin_psi = v / delta_e;
    return {fr * cos_psi - ft * sin_psi, fr * sin_psi + ft * cos_psi, fr, ft, psi, theta1, delta_r};
}

class SfdRotorModel final : public ModelBase<SfdRotorModel> {
  public:
    explicit SfdRotorModel(const SfdRotorParams& p)
        : ModelBase(mass_matrix(p), damping_matrix(p), gyroscopic_matrix(p), stiffness_matrix(p)),
          params_(p),
          rule_(p.quadrature_order) {
        params_.validate();
        require_positive_definite_mass();
    }

    static std::shared_ptr<SfdRotorModel> create(const Overrides& overrides = {}) {
        SfdRotorParams p;
        double order = p.quadrature_order;
        apply_overrides("sfd_rotor", overrides,
                        {{"mass", &p.mass},
                         {"damping", &p.damping},
                         {"stiffness", &p.stiffness},
                         {"inertia_diametral", &p.inertia_diametral},
                         {"inertia_polar", &p.inertia_polar},
                         {"l1", &p.l1},
                         {"l2", &p.l2},
                         {"eccentricity", &p.eccentricity},
                         {"viscosity", &p.viscosity},
                         {"radius", &p.radius},
                         {"land_length", &p.land_length},
                         {"clearance", &p.clearance},
                         {"quadrature_order", &order}});
        p.quadrature_order = as_count("sfd_rotor", "quadrature_order", order, 2);
        return std::make_shared<SfdRotorModel>(p);
    }

    std::string name() const override { return "sfd_rotor"; }
    const SfdRotorParams& params() const { return params_; }
    const GaussLegendre& rule() const { return rule_; }

    ParameterList parameters() const override {
        const auto& p = params_;
        return {{"mass", p.mass},
                {"damping", p.damping},
                {"stiffness", p.stiffness},
                {"inertia_diametral", p.inertia_diametral},
                {"inertia_polar", p.inertia_polar},
                {"l1", p.l1},
                {"l2", p.l2},
                {"eccentricity", p.eccentricity},
                {"viscosity", p.viscosity},
                {"radius", p.radius},
                {"land_length", p.land_length},
                {"clearance", p.clearance},
                {"quadrature_order", static_cast<double>(p.quadrature_order)}};
    }

    template <class T>
    void force(const Kinematics<T>& s, double, const T&, std::span<T> out) const {
        const SfdState<T> st{s.displacement[0], s.displacement[1], s.displacement[2], s.displacement[3],
                             s.velocity[0],     s.velocity[1],     s.velocity[2],     s.velocity[3]};
        const SfdForce<T> f = sfd_force(st, params_, rule_);
        out[0] = f.fx;
        out[1] = f.fy;
        out[2] = -(f.fy * params_.l1);
        out[3] = f.fx * params_.l1;
    }

    /// Unbalance m e omega^2 (cos omega t, sin omega t).
    template <class T>
    void load(double tau, const T& omega, std::span<T> out) const {
        const T amp = (params_.mass * params_.eccentricity) * (omega * omega);
        out[0] = amp * std::cos(tau);
        out[1] = amp * std::sin(tau);
        out[2] = T(0.0);
        out[3] = T(0.0);
    }

  private:
    static Eigen::MatrixXd mass_matrix(const SfdRotorParams& p) {
        Eigen::Vector4d d(p.mass, p.mass, p.inertia_diametral, p.inertia_diametral);
        return d.asDiagonal();
    }

    // Shared sparsity of the damping and stiffness blocks, scaled by c or k.
    static Eigen::MatrixXd support_matrix(const SfdRotorParams& p, double coeff, double translational) {
        const double d12 = p.l1 - p.l2;
        const double rot = p.l1 * p.l1 + p.l2 * p.l2;
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
        m(0, 0) = translational * coeff;
        m(0, 3) = coeff * d12;
        m(1, 1) = translational * coeff;
        m(1, 2) = -coeff * d12;
        m(2, 1) = -coeff * d12;
        m(2, 2) = coeff * rot;
        m(3, 0) = coeff * d12;
        m(3, 3) = coeff * rot;
        return m;
    }

    static Eigen::MatrixXd damping_matrix(const SfdRotorParams& p) { return support_matrix(p, p.damping, 2.0); }
    static Eigen::MatrixXd stiffness_matrix(const SfdRotorParams& p) { return support_matrix(p, p.stiffness, 1.0); }

    static Eigen::MatrixXd gyroscopic_matrix(const SfdRotorParams& p) {
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(4, 4);
        g(2, 3) = p.inertia_polar;
        g(3, 2) = -p.inertia_polar;
        return g;
    }

    SfdRotorParams params_;
    GaussLegendre rule_;
};

}  // namespace hbad
