#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hbad/error.hpp"

namespace hbad {

using Overrides = std::map<std::string, double>;

/// Writes each override into the matching named field; unknown names are an error.
inline void apply_overrides(const std::string& model, const Overrides& overrides,
                            const std::vector<std::pair<std::string, double*>>& fields) {
    for (const auto& [key, value] : overrides) {
        bool found = false;
        for (const auto& [name, target] : fields) {
            if (name == key) {
                if (!std::isfinite(value)) {
                    throw ConfigError(model + ": parameter '" + key + "' must be finite");
                }
                *target = value;
                found = true;
                break;
            }
        }
        if (!found) {
            throw ConfigError(model + ": unknown parameter '" + key + "'");
        }
    }
}

inline int as_count(const std::string& model, const std::string& name, double value, int minimum) {
    if (value != std::floor(value) || value < minimum || value > 1e6) {
        throw ConfigError(model + ": parameter '" + name + "' must be an integer >= " +
                          std::to_string(minimum));
    }
    return static_cast<int>(value);
}

inline void require_positive(const std::string& model, const std::string& name, double value) {
    if (!(value > 0.0)) {
        throw ConfigError(model + ": parameter '" + name + "' must be positive");
    }
}

inline void require_non_negative(const std::string& model, const std::string& name, double value) {
    if (!(value >= 0.0)) {
        throw ConfigError(model + ": parameter '" + name + "' must be non-negative");
    }
}

}  // namespace hbad
