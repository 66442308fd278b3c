#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hbad/hb.hpp"
#include "hbad/models/builtin.hpp"
#include "hbad/models/hertz.hpp"
#include "oracles.hpp"

using namespace hbad;

namespace {

// Film force straight from the short-bearing relations with adaptive quadrature.
std::array<double, 2> film_force_oracle(const SfdState<double>& s, const SfdRotorParams& p) {
    const double u = s.x + s.theta_y * p.l1;
    const double v = s.y - s.theta_x * p.l1;
    const double du = s.dx + s.dtheta_y * p.l1;
    const double dv = s.dy - s.dtheta_x * p.l1;
    const double de = std::hypot(u, v);
    const double dde = (u * du + v * dv) / de;
    const double dpsi = (u * dv - v * du) / (de * de);
    const double dr = de / p.clearance;
    const double ddr = dde / p.clearance;
    const double th1 = std::atan2(-dde, de * dpsi);
    const double k = p.viscosity * p.radius * std::pow(p.land_length, 3) / (p.clearance * p.clearance);
    const double i11 = oracle::sommerfeld(1, 1, dr, th1);
    const double i02 = oracle::sommerfeld(0, 2, dr, th1);
    const double i20 = oracle::sommerfeld(2, 0, dr, th1);
    const double fr = k * (i11 * dpsi * dr + i02 * ddr);
    const double ft = k * (i20 * dpsi * dr + i11 * ddr);
    return {fr * u / de - ft * v / de, fr * v / de + ft * u / de};
}

SfdState<double> random_state(std::mt19937_64& rng, const SfdRotorParams& p, double max_ratio) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double r = 0.5 * (1.0 + unit(rng)) * max_ratio * p.clearance;
    const double a = std::numbers::pi * unit(rng);
    const double th = 0.2 * r / p.l1;
    SfdState<double> s{};
    s.theta_x = th * unit(rng);
    s.theta_y = th * unit(rng);
    // Pick (x, y) so the journal centre sits at radius r.
    s.x = r * std::cos(a) - s.theta_y * p.l1;
    s.y = r * std::sin(a) + s.theta_x * p.l1;
    const double vel = 300.0 * p.clearance;
    s.dx = vel * unit(rng);
    s.dy = vel * unit(rng);
    s.dtheta_x = vel / p.l1 * 0.1 * unit(rng);
    s.dtheta_y = vel / p.l1 * 0.1 * unit(rng);
    return s;
}

}  // namespace

// ------------------------------------------------------------- residual ---

TEST(Residual, LinearModelAtExactFrfIsZero) {
    const auto model = make_builtin("linear");
    const auto& lin = dynamic_cast<const LinearModel&>(*model);
    const HbProblem prob(model, HarmonicSet::contiguous(3));
    const double w = 0.83;
    const Eigen::VectorXcd x = oracle::frf(lin.mass(), lin.damping(), lin.stiffness(), lin.force_cos(), w);
    std::vector<double> a(prob.unknowns(), 0.0);
    for (std::size_t i = 0; i < 2; ++i) {
        // x = Re(X e^{i tau}) = Re X cos tau - Im X sin tau
        a[i * prob.coeffs_per_dof() + prob.set().cos_slot(1)] = x[static_cast<Eigen::Index>(i)].real();
        a[i * prob.coeffs_per_dof() + prob.set().sin_slot(1)] = -x[static_cast<Eigen::Index>(i)].imag();
    }
    const auto r = residual_samples<double>(prob, a, w);
    for (double v : r) EXPECT_LT(std::abs(v), 1e-10);
}

TEST(Residual, ZeroStateGivesNegativeForcing) {
    const auto model = make_builtin("duffing", {{"force", 0.7}});
    const HbProblem prob(model, HarmonicSet::contiguous(3));
    const auto r = residual_samples<double>(prob, std::vector<double>(prob.unknowns(), 0.0), 1.1);
    for (std::size_t k = 0; k < prob.samples(); ++k) {
        EXPECT_NEAR(r[k], -0.7 * std::cos(prob.tables().grid().tau(k)), 1e-15);
    }
}

TEST(Residual, DuffingCubicTermSamples) {
    const auto model = make_builtin("duffing", {{"zeta", 0.0}, {"force", 0.0}, {"kappa", 2.0}});
    const HbProblem prob(model, HarmonicSet::contiguous(3));
    std::vector<double> a(prob.unknowns(), 0.0);
    a[prob.set().cos_slot(1)] = 1.0;
    const auto with = residual_samples<double>(prob, a, 1.0, true);
    const auto without = residual_samples<double>(prob, a, 1.0, false);
    for (std::size_t k = 0; k < prob.samples(); ++k) {
        EXPECT_NEAR(with[k] - without[k], 2.0 * std::pow(std::cos(prob.tables().grid().tau(k)), 3), 1e-14);
    }
}

// ------------------------------------------------------------ sommerfeld ---

TEST(Sommerfeld, TrivialValuesAtZeroEccentricity) {
    const GaussLegendre rule(32);
    EXPECT_NEAR(sommerfeld_integral(0, 0, 0.0, 0.0, rule), std::numbers::pi, 1e-14);
    EXPECT_NEAR(sommerfeld_integral(1, 1, 0.0, 0.0, rule), 0.0, 1e-14);
}

TEST(Sommerfeld, I20AtHalfMatchesAdaptiveOracleAtOrder64) {
    const GaussLegendre rule(64);
    const double ref = oracle::sommerfeld(2, 0, 0.5, 0.0);
    EXPECT_NEAR(sommerfeld_integral(2, 0, 0.5, 0.0, rule), ref, 1e-8 * std::abs(ref));
}

TEST(Sommerfeld, AllExponentsAndRatiosMatchAdaptiveOracle) {
    const GaussLegendre rule(32);
    for (int l = 0; l <= 2; ++l)
        for (int n = 0; n <= 2; ++n)
            for (int i = 0; i <= 9; ++i) {
                const double d = 0.1 * i;
                for (double th : {0.0, 0.7, -2.1}) {
                    const double ref = oracle::sommerfeld(l, n, d, th);
                    const double got = sommerfeld_integral(l, n, d, th, rule);
                    ASSERT_LE(std::abs(got - ref), 1e-8 * std::max(1.0, std::abs(ref)))
                        << "l=" << l << " n=" << n << " d=" << d << " theta1=" << th;
                }
            }
}

TEST(Sommerfeld, SharedNodeSetMatchesSingleIntegrals) {
    const GaussLegendre rule(32);
    const auto set = sommerfeld_set(0.4, 0.3, rule);
    EXPECT_NEAR(set[0], sommerfeld_integral(1, 1, 0.4, 0.3, rule), 1e-13);
    EXPECT_NEAR(set[1], sommerfeld_integral(0, 2, 0.4, 0.3, rule), 1e-13);
    EXPECT_NEAR(set[2], sommerfeld_integral(2, 0, 0.4, 0.3, rule), 1e-13);
}

TEST(Sommerfeld, RuptureIsADomainError) {
    EXPECT_THROW(sommerfeld_integral(0, 0, 1.0, 0.0, GaussLegendre(8)), DomainError);
}

// -------------------------------------------------------------- sfd force ---

TEST(SfdForce, VanishesAtTheCentre) {
    const SfdRotorParams p;
    const GaussLegendre rule(p.quadrature_order);
    const auto f = sfd_force(SfdState<double>{}, p, rule);
    EXPECT_EQ(f.fx, 0.0);
    EXPECT_EQ(f.fy, 0.0);
    SfdState<double> whirl{};
    whirl.x = 1e-6 * p.clearance;
    whirl.dy = 1e-6 * p.clearance * 100.0;
    const auto g = sfd_force(whirl, p, rule);
    // Near the centre the film acts as a linear damper: force proportional to whirl radius.
    SfdState<double> twice = whirl;
    twice.x *= 2.0;
    twice.dy *= 2.0;
    const auto g2 = sfd_force(twice, p, rule);
    EXPECT_NEAR(std::hypot(g2.fx, g2.fy), 2.0 * std::hypot(g.fx, g.fy), 1e-6 * std::hypot(g.fx, g.fy));
}

TEST(SfdForce, CircularWhirlMatchesBruteForceOracle) {
    const SfdRotorParams p;
    const GaussLegendre rule(p.quadrature_order);
    const double w = 250.0;
    const double r = 0.3 * p.clearance;
    for (double phase : {0.0, 1.0, 2.5, -2.0}) {
        SfdState<double> s{};
        s.x = r * std::cos(phase);
        s.y = r * std::sin(phase);
        s.dx = -w * r * std::sin(phase);
        s.dy = w * r * std::cos(phase);
        const auto f = sfd_force(s, p, rule);
        const auto ref = film_force_oracle(s, p);
        const double mag = std::hypot(ref[0], ref[1]);
        EXPECT_NEAR(std::hypot(f.fx, f.fy), mag, 1e-6 * mag);
        EXPECT_NEAR(f.fx, ref[0], 1e-6 * mag);
        EXPECT_NEAR(f.fy, ref[1], 1e-6 * mag);
    }
}

TEST(SfdForce, ContactWithHousingIsADomainError) {
    const SfdRotorParams p;
    SfdState<double> s{};
    s.x = 1.01 * p.clearance;
    EXPECT_THROW(sfd_force(s, p, GaussLegendre(8)), DomainError);
}

TEST(SfdProperty, RotationEquivariance) {
    const SfdRotorParams p;
    const GaussLegendre rule(p.quadrature_order);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    for (int i = 0; i < 100; ++i) {
        const auto s = random_state(rng, p, 0.8);
        const double a = angle(rng);
        const double c = std::cos(a);
        const double sn = std::sin(a);
        // (x, y) and (theta_y, -theta_x) rotate together as plane vectors.
        SfdState<double> r = s;
        r.x = c * s.x - sn * s.y;
        r.y = sn * s.x + c * s.y;
        r.dx = c * s.dx - sn * s.dy;
        r.dy = sn * s.dx + c * s.dy;
        const double ty = c * s.theta_y + sn * s.theta_x;
        const double mtx = sn * s.theta_y - c * s.theta_x;
        r.theta_y = ty;
        r.theta_x = -mtx;
        const double dty = c * s.dtheta_y + sn * s.dtheta_x;
        const double mdtx = sn * s.dtheta_y - c * s.dtheta_x;
        r.dtheta_y = dty;
        r.dtheta_x = -mdtx;
        const auto f = sfd_force(s, p, rule);
        const auto g = sfd_force(r, p, rule);
        const double ex = c * f.fx - sn * f.fy;
        const double ey = sn * f.fx + c * f.fy;
        const double mag = std::hypot(f.fx, f.fy);
        ASSERT_NEAR(g.fx, ex, 1e-9 * mag) << i;
        ASSERT_NEAR(g.fy, ey, 1e-9 * mag) << i;
    }
}

TEST(SfdProperty, AdPartialsMatchFiniteDifferences) {
    const SfdRotorParams p;
    const GaussLegendre rule(p.quadrature_order);
    std::mt19937_64 rng(23);
    for (int i = 0; i < 100; ++i) {
        const auto s = random_state(rng, p, 0.8);
        const std::vector<double> x{s.x, s.y, s.theta_x, s.theta_y, s.dx, s.dy, s.dtheta_x, s.dtheta_y};
        const auto jac = ad::jacobian(
            [&](std::span<const ad::Var> v) {
                const SfdState<ad::Var> st{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
                const auto f = sfd_force(st, p, rule);
                return std::vector<ad::Var>{f.fx, f.fy};
            },
            x);
        const auto fd = oracle::fd_jacobian(
            [&](const std::vector<double>& v) {
                const SfdState<double> st{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
                const auto f = sfd_force(st, p, rule);
                return Eigen::Vector2d(f.fx, f.fy);
            },
            x, 1e-5, 1e-7);
        // Scale each column by its natural unit so the relative check is meaningful.
        for (Eigen::Index c = 0; c < 8; ++c) {
            const double col = std::max(jac.col(c).cwiseAbs().maxCoeff(), fd.col(c).cwiseAbs().maxCoeff());
            for (Eigen::Index r = 0; r < 2; ++r) {
                ASSERT_NEAR(jac(r, c), fd(r, c), 1e-5 * col + 1e-300) << "state " << i << " entry " << r << "," << c;
            }
        }
    }
}

// ------------------------------------------------------------------ hertz ---

TEST(Hertz, ZeroInsideTheClearance) {
    const HertzBearingParams p;
    for (double tau : {0.0, 0.4, 2.0}) {
        const auto f = hertz_bearing_force(0.5 * p.clearance, -0.3 * p.clearance, tau, p);
        EXPECT_EQ(f[0], 0.0);
        EXPECT_EQ(f[1], 0.0);
    }
}

TEST(Hertz, BoundaryOfTheDeadband) {
    HertzBearingParams p;
    p.balls = 1;
    p.cage_ratio = 1.0;
    const auto f = hertz_bearing_force(p.clearance, 0.0, 0.0, p);
    EXPECT_EQ(f[0], 0.0);
    EXPECT_EQ(f[1], 0.0);
}

TEST(Hertz, MatchesDirectSummation) {
    const HertzBearingParams p;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-4.0 * p.clearance, 4.0 * p.clearance);
    for (int i = 0; i < 200; ++i) {
        const double dx = u(rng);
        const double dy = u(rng);
        const double tau = 0.05 * i;
        const auto f = hertz_bearing_force(dx, dy, tau, p);
        const auto ref = oracle::hertz_sum(dx, dy, tau, p);
        const double scale = std::max(1.0, std::hypot(ref[0], ref[1]));
        EXPECT_NEAR(f[0], ref[0], 1e-13 * scale);
        EXPECT_NEAR(f[1], ref[1], 1e-13 * scale);
    }
}

TEST(Hertz, ContinuousAcrossTheClearanceBoundary) {
    HertzBearingParams p;
    p.balls = 1;
    p.cage_ratio = 1.0;
    double previous = INFINITY;
    for (double eps : {1e-6, 1e-8, 1e-10, 1e-12}) {
        const auto f = hertz_bearing_force(p.clearance * (1.0 + eps), 0.0, 0.0, p);
        EXPECT_GT(f[0], 0.0);
        EXPECT_LT(f[0], previous);
        previous = f[0];
    }
    EXPECT_LT(previous, 1e-6);
}

TEST(Hertz, AdPartialsMatchFiniteDifferencesOutsideKinks) {
    const HertzBearingParams p;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-3.0 * p.clearance, 3.0 * p.clearance);
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> x{u(rng), u(rng)};
        const double tau = 0.3 * i;
        const auto jac = ad::jacobian(
            [&](std::span<const ad::Var> v) {
                const auto f = hertz_bearing_force(v[0], v[1], tau, p);
                return std::vector<ad::Var>{f[0], f[1]};
            },
            x);
        const auto fd = oracle::fd_jacobian(
            [&](const std::vector<double>& v) {
                const auto f = hertz_bearing_force(v[0], v[1], tau, p);
                return Eigen::Vector2d(f[0], f[1]);
            },
            x, 1e-4, 1e-6);
        const double scale = std::max(1.0, jac.cwiseAbs().maxCoeff());
        for (Eigen::Index r = 0; r < 2; ++r)
            for (Eigen::Index c = 0; c < 2; ++c) ASSERT_NEAR(jac(r, c), fd(r, c), 1e-5 * scale);
    }
}

// ---------------------------------------------------------- bundled models ---

TEST(BundledModels, DuffingDefaults) {
    const auto m = DuffingModel::create();
    EXPECT_EQ(m->params().zeta, 0.05);
    EXPECT_EQ(m->params().kappa, 1.0);
    EXPECT_EQ(m->params().force, 0.4);
}

TEST(BundledModels, MassMatricesAreSymmetricPositiveDefinite) {
    for (const auto& name : builtin_models()) {
        const auto m = make_builtin(name);
        EXPECT_TRUE(m->mass().isApprox(m->mass().transpose())) << name;
        EXPECT_EQ(m->mass().llt().info(), Eigen::Success) << name;
    }
}

TEST(BundledModels, ForcesArePure) {
    std::mt19937_64 rng(6);
    for (const auto& name : builtin_models()) {
        const auto m = make_builtin(name);
        const std::size_t n = m->dofs();
        const double scale = name == "duffing" || name == "linear" ? 1.0 : 1e-5;
        const auto acc = oracle::random_vector(rng, n, scale);
        const auto vel = oracle::random_vector(rng, n, 100 * scale);
        const auto disp = oracle::random_vector(rng, n, scale);
        std::vector<double> f1(n), f2(n);
        const Kinematics<double> k{acc, vel, disp};
        m->nonlinear_force(k, 0.7, 200.0, f1);
        m->nonlinear_force(k, 1.3, 200.0, f2);  // interleave another evaluation
        m->nonlinear_force(k, 0.7, 200.0, f2);
        EXPECT_EQ(f1, f2) << name;
    }
}

TEST(BundledModels, SfdWithoutUnbalanceRestsAtTheCentre) {
    const auto model = make_builtin("sfd_rotor", {{"eccentricity", 0.0}});
    const HbProblem prob(model, HarmonicSet::contiguous(3));
    const auto res = newton_solve(prob, std::vector<double>(prob.unknowns(), 0.0), 250.0);
    EXPECT_TRUE(res.report.converged);
    for (double c : res.coeffs) EXPECT_EQ(c, 0.0);
}

TEST(BundledModels, DualRotorExcitesBaseHarmonicsFiveAndSix) {
    const auto model = make_builtin("dual_rotor");
    EXPECT_EQ(model->base_divisor(), 5);
    const HarmonicSet set = HarmonicSet::contiguous(12);
    const BasisTables t(set, TimeGrid::for_set(set));
    std::vector<double> samples(model->dofs() * t.samples());
    std::vector<double> load(model->dofs());
    for (std::size_t k = 0; k < t.samples(); ++k) {
        model->excitation(t.grid().tau(k), 150.0, load);
        for (std::size_t i = 0; i < model->dofs(); ++i) samples[i * t.samples() + k] = load[i];
    }
    const auto c = dft<double>(samples, model->dofs(), t);
    std::set<int> active;
    for (std::size_t i = 0; i < model->dofs(); ++i)
        for (std::size_t pos = 0; pos < set.size(); ++pos) {
            const double mag = pos == 0 ? std::abs(c[i * set.coeffs_per_dof()])
                                        : std::hypot(c[i * set.coeffs_per_dof() + set.cos_slot(pos)],
                                                     c[i * set.coeffs_per_dof() + set.sin_slot(pos)]);
            if (mag > 1e-9) active.insert(set.indices()[pos]);
        }
    EXPECT_EQ(active, (std::set<int>{5, 6}));
}

TEST(BundledModels, InvalidParametersAreRejected) {
    EXPECT_THROW(make_builtin("linear", {{"m1", -1.0}}), ConfigError);
    EXPECT_THROW(make_builtin("sfd_rotor", {{"mass", -1.0}}), ConfigError);
    EXPECT_THROW(make_builtin("sfd_rotor", {{"inertia_polar", 0.2}}), ConfigError);
    EXPECT_THROW(make_builtin("dual_rotor", {{"exponent", 1.0}}), ConfigError);
    EXPECT_THROW(make_builtin("dual_rotor", {{"bearing_clearance", -1e-6}}), ConfigError);
    EXPECT_THROW(make_builtin("duffing", {{"mass", 1.0}}), ConfigError);
    EXPECT_THROW(make_builtin("no_such_model"), ConfigError);
}
