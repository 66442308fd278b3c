// A user-defined model: two masses coupled by a hardening spring, the first
// one grounded through a quadratic-cubic spring. The force is written once as
// a template; the AD tape differentiates it for the HB Jacobian, the
// continuation tangent and the Floquet analysis.

#include <cstdio>
#include <memory>

#include "hbad/continuation.hpp"
#include "hbad/hb.hpp"
#include "hbad/model.hpp"

namespace {

class CoupledOscillator final : public hbad::ModelBase<CoupledOscillator> {
  public:
    CoupledOscillator()
        : ModelBase(Eigen::Matrix2d{{1.0, 0.0}, {0.0, 0.5}}, Eigen::Matrix2d{{0.06, -0.02}, {-0.02, 0.02}},
                    Eigen::Matrix2d::Zero(), Eigen::Matrix2d{{1.6, -0.6}, {-0.6, 0.6}}) {
        require_positive_definite_mass();
    }

    std::string name() const override { return "coupled_oscillator"; }

    template <class T>
    void force(const hbad::Kinematics<T>& s, double, const T&, std::span<T> out) const {
        const T& x1 = s.displacement[0];
        const T rel = s.displacement[1] - x1;
        const T coupling = 0.5 * (rel * rel * rel);
        out[0] = 0.1 * (x1 * x1) + 0.8 * (x1 * x1 * x1) - coupling;
        out[1] = coupling;
    }

    template <class T>
    void load(double tau, const T&, std::span<T> out) const {
        out[0] = T(0.15 * std::cos(tau));
        out[1] = T(0.0);
    }
};

}  // namespace

int main() {
    const hbad::HbProblem prob(std::make_shared<CoupledOscillator>(), hbad::HarmonicSet::contiguous(5));

    const hbad::BranchPoint seed = hbad::solve_point(prob, 0.3);
    if (!seed.report.converged) {
        std::fprintf(stderr, "seed did not converge: %s\n", seed.report.message.c_str());
        return 2;
    }
    hbad::TraceOptions opts;
    opts.omega_min = 0.2;
    opts.omega_max = 2.5;
    opts.ds_max = 0.1;
    const hbad::Branch branch = hbad::trace(prob, seed, opts);

    std::printf("omega,amp_1,amp_2,stable,fold\n");
    for (const auto& p : branch.points) {
        std::printf("%.6f,%.6e,%.6e,%d,%d\n", p.omega, p.amplitude[0], p.amplitude[1],
                    p.stability == hbad::Stability::stable ? 1 : 0, p.fold ? 1 : 0);
    }
    std::fprintf(stderr, "%zu points, %zu folds\n", branch.points.size(), branch.folds.size());
    return 0;
}
