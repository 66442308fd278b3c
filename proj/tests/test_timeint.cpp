#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hbad/hb.hpp"
#include "hbad/models/builtin.hpp"
#include "hbad/timeint.hpp"
#include "oracles.hpp"

using namespace hbad;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double energy(const SystemModel& m, const Trajectory& tr, std::size_t k) {
    const auto n = static_cast<Eigen::Index>(tr.dofs);
    const Eigen::VectorXd x = Eigen::VectorXd::Map(tr.displacement.data() + k * tr.dofs, n);
    const Eigen::VectorXd v = Eigen::VectorXd::Map(tr.velocity.data() + k * tr.dofs, n);
    return 0.5 * v.dot(m.mass() * v) + 0.5 * x.dot(m.stiffness() * x);
}

double shortest_natural_period(const SystemModel& m) {
    const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(m.stiffness(), m.mass());
    return two_pi / std::sqrt(es.eigenvalues().maxCoeff());
}

Eigen::VectorXd zeros(std::size_t n) { return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)); }

double first_harmonic(const SteadyState& s, const HarmonicSet& set, std::size_t dof) {
    const std::size_t per = set.coeffs_per_dof();
    return std::hypot(s.coeffs[dof * per + set.cos_slot(1)], s.coeffs[dof * per + set.sin_slot(1)]);
}

}  // namespace

TEST(Rk4, ConvergesAtFourthOrder) {
    const auto model = make_builtin("duffing");
    const double w = 1.3;
    const double t_end = two_pi / w * 3.0;
    const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 0.5);
    const Eigen::VectorXd v0 = Eigen::VectorXd::Zero(1);
    const auto end_x = [&](double dt) { return rk4(*model, x0, v0, w, t_end, dt).displacement.back(); };
    const double base = t_end / 150.0;
    const double ref = end_x(base / 32.0);
    const double e1 = std::abs(end_x(base) - ref);
    const double e2 = std::abs(end_x(base / 2.0) - ref);
    EXPECT_GE(std::log2(e1 / e2), 3.8) << e1 << " " << e2;
}

TEST(Newmark, UnconditionallyStableAtAQuarterOfTheShortestPeriod) {
    const auto model = make_builtin("linear", {{"c1", 0.0}, {"c2", 0.0}, {"force", 0.0}});
    const double dt = shortest_natural_period(*model) / 4.0;
    Eigen::VectorXd x0(2);
    x0 << 1.0, -0.5;
    const Trajectory tr = newmark(*model, x0, zeros(2), 1.0, 2000 * dt, dt);
    const double e0 = energy(*model, tr, 0);
    for (std::size_t k = 0; k < tr.size(); ++k) ASSERT_LT(energy(*model, tr, k), 1.0001 * e0) << k;
}

TEST(Newmark, EnergyDriftOverOneHundredPeriodsIsSmall) {
    const auto model = make_builtin("linear", {{"c1", 0.0}, {"c2", 0.0}, {"force", 0.0}});
    const double t = shortest_natural_period(*model);
    Eigen::VectorXd x0(2);
    x0 << 0.3, 0.7;
    const Trajectory tr = newmark(*model, x0, zeros(2), 1.0, 100.0 * t, t / 50.0);
    const double e0 = energy(*model, tr, 0);
    EXPECT_LT(std::abs(energy(*model, tr, tr.size() - 1) - e0), 1e-3 * e0);
}

TEST(Newmark, ZeroInputStaysAtRest) {
    const auto model = make_builtin("linear", {{"force", 0.0}});
    const Trajectory tr = newmark(*model, zeros(2), zeros(2), 1.0, 10.0, 0.01);
    const Trajectory rk = rk4(*model, zeros(2), zeros(2), 1.0, 10.0, 0.01);
    for (double x : tr.displacement) ASSERT_EQ(x, 0.0);
    for (double x : rk.displacement) ASSERT_EQ(x, 0.0);
}

TEST(Newmark, RejectsBadParameters) {
    const auto model = make_builtin("linear");
    NewmarkOptions bad;
    bad.gamma = 0.4;
    EXPECT_THROW(newmark(*model, zeros(2), zeros(2), 1.0, 1.0, 0.01, bad), ConfigError);
    EXPECT_THROW(newmark(*model, zeros(3), zeros(3), 1.0, 1.0, 0.01), ConfigError);
    EXPECT_THROW(rk4(*model, zeros(2), zeros(2), 1.0, 1.0, 0.0), ConfigError);
}

TEST(SteadyState, LinearIntegratorsMatchTheClosedFormResponse) {
    const auto model = make_builtin("linear");
    const auto& lin = dynamic_cast<const LinearModel&>(*model);
    const HarmonicSet set = HarmonicSet::contiguous(3);
    for (double w : {0.4, 1.2}) {
        const Eigen::VectorXcd x = oracle::frf(lin.mass(), lin.damping(), lin.stiffness(), lin.force_cos(), w);
        SteadyRunOptions ro;
        ro.method = Integrator::rk4;
        const SteadyState r = run_to_steady_state(*model, w, set, ro);
        ro.method = Integrator::newmark;
        const SteadyState n = run_to_steady_state(*model, w, set, ro);
        ASSERT_TRUE(r.steady);
        ASSERT_TRUE(n.steady);
        for (std::size_t i = 0; i < 2; ++i) {
            const double ref = std::abs(x[static_cast<Eigen::Index>(i)]);
            EXPECT_NEAR(first_harmonic(r, set, i), ref, 1e-3 * ref) << w;
            EXPECT_NEAR(first_harmonic(n, set, i), first_harmonic(r, set, i), 5e-3 * ref) << w;
        }
    }
}

TEST(SteadyState, IntegratorsAgreeOnDuffingAwayFromResonanceAndMatchHb) {
    const auto model = make_builtin("duffing");
    const HbProblem prob(model, HarmonicSet::contiguous(7));
    for (double w : {0.5, 2.8}) {
        SteadyRunOptions ro;
        ro.method = Integrator::rk4;
        const SteadyState r = run_to_steady_state(*model, w, prob.set(), ro);
        ro.method = Integrator::newmark;
        const SteadyState n = run_to_steady_state(*model, w, prob.set(), ro);
        ASSERT_TRUE(r.steady && n.steady);
        EXPECT_NEAR(n.amplitude[0], r.amplitude[0], 0.01 * r.amplitude[0]) << w;
        const auto hb = newton_solve(prob, linear_response(prob, w), w);
        ASSERT_TRUE(hb.report.converged);
        const double scale = std::abs(hb.coeffs[prob.set().cos_slot(1)]) + std::abs(hb.coeffs[prob.set().sin_slot(1)]);
        for (std::size_t k = 0; k < 3; ++k) {
            EXPECT_NEAR(r.coeffs[k], hb.coeffs[k], 0.01 * scale) << w << " slot " << k;
        }
    }
}

TEST(SteadyStateExtract, RecoversSyntheticCoefficients) {
    const HarmonicSet set = HarmonicSet::contiguous(3);
    const double period = 2.0;
    Trajectory tr;
    tr.dofs = 1;
    tr.dt = period / 64.0;
    for (int k = 0; k <= 3 * 64; ++k) {
        const double t = k * tr.dt;
        const double tau = two_pi * t / period;
        Eigen::VectorXd x(1);
        x << 0.3 + std::cos(tau) + 0.2 * std::sin(3.0 * tau);
        tr.push(t, x, Eigen::VectorXd::Zero(1));
    }
    const SteadyState s = steady_state_extract(tr, period, set, 2);
    EXPECT_TRUE(s.steady);
    EXPECT_NEAR(s.period_mismatch, 0.0, 1e-12);
    const double expected[] = {0.3, 1.0, 0.0, 0.0, 0.0, 0.0, 0.2};
    ASSERT_EQ(s.coeffs.size(), 7u);
    for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(s.coeffs[i], expected[i], 1e-12) << i;
}

TEST(SteadyStateExtract, FlagsGrowthAndRejectsMisfitPeriods) {
    const HarmonicSet set = HarmonicSet::contiguous(1);
    Trajectory tr;
    tr.dofs = 1;
    tr.dt = 0.1;
    for (int k = 0; k <= 40; ++k) {
        const double t = k * tr.dt;
        tr.push(t, Eigen::VectorXd::Constant(1, std::exp(0.5 * t) * std::cos(two_pi * t)), Eigen::VectorXd::Zero(1));
    }
    const SteadyState s = steady_state_extract(tr, 1.0, set, 2);
    EXPECT_FALSE(s.steady);
    EXPECT_GT(s.period_mismatch, 0.01);
    EXPECT_THROW(steady_state_extract(tr, 1.05, set, 2), ConfigError);
    EXPECT_THROW(steady_state_extract(tr, 1.0, set, 10), ConfigError);
}
