#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hbad/model.hpp"
#include "hbad/models/dual_rotor.hpp"
#include "hbad/models/duffing.hpp"
#include "hbad/models/params.hpp"
#include "hbad/models/sfd_rotor.hpp"

namespace hbad {

inline std::vector<std::string> builtin_models() { return {"duffing", "sfd_rotor", "dual_rotor", "linear"}; }

/// Two-DOF linear chain with parameters m1, m2, k1, k2, c1, c2, force.
inline std::shared_ptr<const SystemModel> make_linear_chain(const Overrides& overrides = {}) {
    double m1 = 1.0, m2 = 0.5, k1 = 1.0, k2 = 0.8, c1 = 0.05, c2 = 0.03, force = 1.0;
    apply_overrides("linear", overrides,
                    {{"m1", &m1}, {"m2", &m2}, {"k1", &k1}, {"k2", &k2}, {"c1", &c1}, {"c2", &c2}, {"force", &force}});
    return LinearModel::two_dof_chain(m1, m2, k1, k2, c1, c2, force);
}

/// Builds a bundled model by name with parameter overrides.
inline std::shared_ptr<const SystemModel> make_builtin(const std::string& name, const Overrides& overrides = {}) {
    if (name == "duffing") {
        return DuffingModel::create(overrides);
    }
    if (name == "sfd_rotor") {
        return SfdRotorModel::create(overrides);
    }
    if (name == "dual_rotor") {
        return DualRotorModel::create(overrides);
    }
    if (name == "linear") {
        return make_linear_chain(overrides);
    }
    throw ConfigError("unknown model '" + name + "'");
}

}  // namespace hbad
