#pragma once

// Truncated Fourier representation over an explicit harmonic-index set.
//
// Coefficient layout per DOF, for indices {0, j_1, ..., j_m}:
//   (a_0, a_{j_1}, ..., a_{j_m}, b_{j_1}, ..., b_{j_m})
// so x(tau) = a_0 + sum_j a_j cos(j tau) + b_j sin(j tau). Multi-DOF vectors
// are flattened DOF-major.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hbad/ad.hpp"
#include "hbad/error.hpp"

namespace hbad {

class HarmonicSet {
  public:
    /// `indices` must be strictly increasing, non-negative and start at 0.
    explicit HarmonicSet(std::vector<int> indices) : indices_(std::move(indices)) {
        if (indices_.empty() || indices_.front() != 0) {
            throw ConfigError("harmonic set must start with the DC index 0");
        }
        for (std::size_t i = 1; i < indices_.size(); ++i) {
            if (indices_[i] <= indices_[i - 1]) {
                throw ConfigError("harmonic indices must be strictly increasing");
            }
        }
    }

    /// {0, 1, ..., order}.
    static HarmonicSet contiguous(int order) {
        if (order < 0) {
            throw ConfigError("harmonic order must be non-negative");
        }
        std::vector<int> idx(static_cast<std::size_t>(order) + 1);
        std::iota(idx.begin(), idx.end(), 0);
        return HarmonicSet(std::move(idx));
    }

    /// Combination tones of two excitations at q and p times the base
    /// frequency: { |a q + b p| : |a| + |b| <= order } limited to `cutoff`.
    static HarmonicSet dual_frequency(int p, int q, int cutoff, int order = 3) {
        if (p <= 0 || q <= 0 || cutoff < std::max(p, q) || order < 1) {
            throw ConfigError("dual-frequency set needs p, q > 0, cutoff >= max(p, q), order >= 1");
        }
        std::set<int> found{0};
        for (int a = -order; a <= order; ++a) {
            for (int b = -order; b <= order; ++b) {
                if (std::abs(a) + std::abs(b) > order) {
                    continue;
                }
                const int k = std::abs(a * q + b * p);
                if (k <= cutoff) {
                    found.insert(k);
                }
            }
        }
        return HarmonicSet(std::vector<int>(found.begin(), found.end()));
    }

    std::span<const int> indices() const noexcept { return indices_; }
    std::size_t size() const noexcept { return indices_.size(); }
    int k_max() const noexcept { return indices_.back(); }
    std::size_t coeffs_per_dof() const noexcept { return 2 * indices_.size() - 1; }

    /// Slot of the cosine coefficient of the harmonic at position `pos` (pos >= 1).
    std::size_t cos_slot(std::size_t pos) const noexcept { return pos; }
    /// Slot of the sine coefficient of the harmonic at position `pos` (pos >= 1).
    std::size_t sin_slot(std::size_t pos) const noexcept { return indices_.size() - 1 + pos; }

    /// Position of harmonic `k` in the set, or size() if absent.
    std::size_t position(int k) const {
        const auto it = std::lower_bound(indices_.begin(), indices_.end(), k);
        return (it != indices_.end() && *it == k) ? static_cast<std::size_t>(it - indices_.begin())
                                                  : indices_.size();
    }

    bool contains(int k) const { return position(k) < indices_.size(); }

    friend bool operator==(const HarmonicSet&, const HarmonicSet&) = default;

  private:
    std::vector<int> indices_;
};

/// N equispaced samples tau_k = 2 pi k / N of one normalized period.
class TimeGrid {
  public:
    explicit TimeGrid(std::size_t samples) : samples_(samples) {
        if (samples_ < 1) {
            throw ConfigError("time grid needs at least one sample");
        }
    }

    /// Smallest power of two >= 4 k_max (at least 4), unless `override_samples` > 0.
    static TimeGrid for_set(const HarmonicSet& set, std::size_t override_samples = 0) {
        if (override_samples > 0) {
            return TimeGrid(override_samples);
        }
        const std::size_t need = std::max<std::size_t>(4, 4 * static_cast<std::size_t>(set.k_max()));
        std::size_t n = 1;
        while (n < need) {
            n *= 2;
        }
        return TimeGrid(n);
    }

    std::size_t size() const noexcept { return samples_; }
    double tau(std::size_t k) const noexcept {
        return 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples_);
    }

  private:
    std::size_t samples_;
};

/// Basis values and their tau-derivatives at an arbitrary phase, in the
/// per-DOF coefficient layout.
inline void basis_at(const HarmonicSet& set, double tau, int order, std::span<double> out) {
    const std::size_t h = set.size();
    out[0] = order == 0 ? 1.0 : 0.0;
    for (std::size_t p = 1; p < h; ++p) {
        const double j = set.indices()[p];
        const double c = std::cos(j * tau);
        const double s = std::sin(j * tau);
        double vc = 0.0;
        double vs = 0.0;
        switch (order) {
            case 0: vc = c; vs = s; break;
            case 1: vc = -j * s; vs = j * c; break;
            case 2: vc = -j * j * c; vs = -j * j * s; break;
            default: throw std::invalid_argument("derivative order must be 0, 1 or 2");
        }
        out[set.cos_slot(p)] = vc;
        out[set.sin_slot(p)] = vs;
    }
}

/// Precomputed basis tables on a grid.
class BasisTables {
  public:
    BasisTables(HarmonicSet set, TimeGrid grid) : set_(std::move(set)), grid_(grid) {
        if (grid_.size() < 4 * static_cast<std::size_t>(set_.k_max())) {
            throw ConfigError("time grid too coarse: N = " + std::to_string(grid_.size()) +
                              " < 4 k_max = " + std::to_string(4 * set_.k_max()));
        }
        const std::size_t n = grid_.size();
        const std::size_t c = set_.coeffs_per_dof();
        for (int order = 0; order < 3; ++order) {
            auto& table = basis_[static_cast<std::size_t>(order)];
            table.resize(n * c);
            for (std::size_t k = 0; k < n; ++k) {
                basis_at(set_, grid_.tau(k), order, std::span<double>(table).subspan(k * c, c));
            }
        }
        projection_.resize(c * n);
        const double scale0 = 1.0 / static_cast<double>(n);
        const double scale = 2.0 / static_cast<double>(n);
        for (std::size_t slot = 0; slot < c; ++slot) {
            for (std::size_t k = 0; k < n; ++k) {
                const double b = basis_[0][k * c + slot];
                projection_[slot * n + k] = (slot == 0 ? scale0 : scale) * b;
            }
        }
    }

    const HarmonicSet& set() const noexcept { return set_; }
    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t coeffs_per_dof() const noexcept { return set_.coeffs_per_dof(); }
    std::size_t samples() const noexcept { return grid_.size(); }

    /// Basis row at sample k for derivative order 0, 1 or 2 (length coeffs_per_dof).
    std::span<const double> row(int order, std::size_t k) const {
        const std::size_t c = coeffs_per_dof();
        return std::span<const double>(basis_.at(static_cast<std::size_t>(order))).subspan(k * c, c);
    }

    /// Projection weights of one coefficient slot over all samples (length N).
    std::span<const double> projection(std::size_t slot) const {
        const std::size_t n = samples();
        return std::span<const double>(projection_).subspan(slot * n, n);
    }

  private:
    HarmonicSet set_;
    TimeGrid grid_;
    std::array<std::vector<double>, 3> basis_;
    std::vector<double> projection_;
};

/// Samples of the `order`-th tau-derivative of each DOF; result is dofs x N, DOF-major.
template <class T>
std::vector<T> evaluate(std::span<const T> coeffs, std::size_t dofs, const BasisTables& tables,
                        int order) {
    const std::size_t c = tables.coeffs_per_dof();
    const std::size_t n = tables.samples();
    if (coeffs.size() != dofs * c) {
        throw std::invalid_argument("evaluate: coefficient vector has length " +
                                    std::to_string(coeffs.size()) + ", expected " +
                                    std::to_string(dofs * c));
    }
    if (order < 0 || order > 2) {
        throw std::invalid_argument("evaluate: derivative order must be 0, 1 or 2");
    }
    std::vector<T> out(dofs * n);
    for (std::size_t i = 0; i < dofs; ++i) {
        const auto row_coeffs = coeffs.subspan(i * c, c);
        for (std::size_t k = 0; k < n; ++k) {
            out[i * n + k] = ad::dot(tables.row(order, k), row_coeffs);
        }
    }
    return out;
}

/// Projection of dofs x N samples onto the harmonic set:
/// c_0 = (1/N) sum R, c_j = (2/N) sum R cos j tau_k, d_j = (2/N) sum R sin j tau_k.
template <class T>
std::vector<T> dft(std::span<const T> samples, std::size_t dofs, const BasisTables& tables) {
    const std::size_t c = tables.coeffs_per_dof();
    const std::size_t n = tables.samples();
    if (samples.size() != dofs * n) {
        throw std::invalid_argument("dft: sample array has wrong shape");
    }
    std::vector<T> out(dofs * c);
    for (std::size_t i = 0; i < dofs; ++i) {
        const auto row_samples = samples.subspan(i * n, n);
        for (std::size_t slot = 0; slot < c; ++slot) {
            out[i * c + slot] = ad::dot(tables.projection(slot), row_samples);
        }
    }
    return out;
}

/// Value (order 0) or tau-derivative of one DOF at an arbitrary phase.
inline double evaluate_at(std::span<const double> dof_coeffs, const HarmonicSet& set, double tau,
                          int order) {
    std::vector<double> basis(set.coeffs_per_dof());
    basis_at(set, tau, order, basis);
    return ad::dot(basis, dof_coeffs);
}

/// max over tau of |x(tau)| for one DOF: grid scan followed by Newton polishing
/// of the stationary points, so single-harmonic signals give sqrt(a^2 + b^2) + ...
/// to rounding accuracy.
inline double peak_amplitude(std::span<const double> dof_coeffs, const HarmonicSet& set,
                             std::size_t scan_points = 0) {
    if (set.size() == 1) {
        return std::abs(dof_coeffs[0]);
    }
    const std::size_t m = scan_points > 0 ? scan_points : std::max<std::size_t>(64, 16 * set.k_max());
    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<double> vals(m);
    for (std::size_t k = 0; k < m; ++k) {
        vals[k] = std::abs(evaluate_at(dof_coeffs, set, two_pi * static_cast<double>(k) / static_cast<double>(m), 0));
    }
    double best = *std::max_element(vals.begin(), vals.end());
    for (std::size_t k = 0; k < m; ++k) {
        const double prev = vals[(k + m - 1) % m];
        const double next = vals[(k + 1) % m];
        if (vals[k] < prev || vals[k] < next) {
            continue;
        }
        double tau = two_pi * static_cast<double>(k) / static_cast<double>(m);
        const double h = two_pi / static_cast<double>(m);
        const double lo = tau - h;
        const double hi = tau + h;
        for (int it = 0; it < 30; ++it) {
            const double d1 = evaluate_at(dof_coeffs, set, tau, 1);
            const double d2 = evaluate_at(dof_coeffs, set, tau, 2);
            if (d2 == 0.0) {
                break;
            }
            const double step = d1 / d2;
            tau = std::clamp(tau - step, lo, hi);
            if (std::abs(step) < 1e-15) {
                break;
            }
        }
        best = std::max(best, std::abs(evaluate_at(dof_coeffs, set, tau, 0)));
    }
    return best;
}

}  // namespace hbad
