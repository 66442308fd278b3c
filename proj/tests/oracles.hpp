#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these reuse library numerics beyond plain model evaluation.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "hbad/hb.hpp"
#include "hbad/models/hertz.hpp"

namespace oracle {

/// Central-difference Jacobian with step h_j = rel_step * max(floor, |x_j|).
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const std::vector<double>&)>& f,
                                   std::vector<double> x, double rel_step = 1e-6, double floor = 1.0) {
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd jac(f0.size(), static_cast<Eigen::Index>(x.size()));
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double h = rel_step * std::max(floor, std::abs(x[j]));
        const double keep = x[j];
        x[j] = keep + h;
        const Eigen::VectorXd fp = f(x);
        x[j] = keep - h;
        const Eigen::VectorXd fm = f(x);
        x[j] = keep;
        jac.col(static_cast<Eigen::Index>(j)) = (fp - fm) / (2.0 * h);
    }
    return jac;
}

/// Five-point central-difference Jacobian with a fixed absolute step per column.
inline Eigen::MatrixXd fd_jacobian5(const std::function<Eigen::VectorXd(const std::vector<double>&)>& f,
                                    std::vector<double> x, double h) {
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd jac(f0.size(), static_cast<Eigen::Index>(x.size()));
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double keep = x[j];
        const auto at = [&](double d) {
            x[j] = keep + d;
            Eigen::VectorXd v = f(x);
            x[j] = keep;
            return v;
        };
        jac.col(static_cast<Eigen::Index>(j)) = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
    }
    return jac;
}

/// Central differences on steps h0 / 2^k, Richardson-extrapolated to fourth order.
/// Per entry, keeps the extrapolate whose neighbour on the ladder agrees best, with
/// the roundoff term 2 eps |f_i| / h added so tiny steps cannot win on quantized noise.
inline Eigen::MatrixXd fd_jacobian_ladder(const std::function<Eigen::VectorXd(const std::vector<double>&)>& f,
                                          std::vector<double> x, double h0, int levels = 10) {
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd jac(f0.size(), static_cast<Eigen::Index>(x.size()));
    const double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double keep = x[j];
        std::vector<Eigen::VectorXd> d;
        for (int k = 0; k < levels; ++k) {
            const double h = std::ldexp(h0, -k);
            x[j] = keep + h;
            const Eigen::VectorXd fp = f(x);
            x[j] = keep - h;
            const Eigen::VectorXd fm = f(x);
            x[j] = keep;
            d.push_back((fp - fm) / (2.0 * h));
        }
        std::vector<Eigen::VectorXd> r;
        for (int k = 0; k + 1 < levels; ++k) r.push_back((4.0 * d[k + 1] - d[k]) / 3.0);
        for (Eigen::Index i = 0; i < f0.size(); ++i) {
            double best = INFINITY;
            double value = r[0][i];
            for (std::size_t k = 0; k + 1 < r.size(); ++k) {
                const double h = std::ldexp(h0, -static_cast<int>(k) - 2);
                const double gap = std::abs(r[k + 1][i] - r[k][i]) + 4.0 * eps * std::abs(f0[i]) / h;
                if (gap < best) {
                    best = gap;
                    value = r[k + 1][i];
                }
            }
            jac(i, static_cast<Eigen::Index>(j)) = value;
        }
    }
    return jac;
}

/// Central difference of a scalar function.
inline double fd(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Adaptive Simpson quadrature with Richardson correction.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
    const std::function<double(double, double, double, double, double, double, double, int)> rec =
        [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps, int depth) {
            const double mid = 0.5 * (lo + hi);
            const double lm = 0.5 * (lo + mid);
            const double rm = 0.5 * (mid + hi);
            const double flm = f(lm);
            const double frm = f(rm);
            const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
            const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
            const double diff = left + right - whole;
            if (depth <= 0 || std::abs(diff) <= 15.0 * eps) {
                return left + right + diff / 15.0;
            }
            return rec(lo, mid, flo, flm, fmid, left, 0.5 * eps, depth - 1) +
                   rec(mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth - 1);
        };
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return rec(a, b, fa, fm, fb, whole, tol, 50);
}

/// I^{ln} = integral over [theta1, theta1 + pi] of sin^l cos^n / (1 + d cos)^3.
inline double sommerfeld(int l, int n, double d, double theta1) {
    return adaptive_simpson(
        [&](double th) {
            return std::pow(std::sin(th), l) * std::pow(std::cos(th), n) / std::pow(1.0 + d * std::cos(th), 3);
        },
        theta1, theta1 + std::numbers::pi, 1e-13);
}

/// Brute-force projection of samples x(tau_k), tau_k = 2 pi k / N, onto cos/sin of harmonic j.
inline std::pair<double, double> dft_harmonic(const std::vector<double>& samples, int j) {
    const auto n = static_cast<double>(samples.size());
    double c = 0.0;
    double s = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const double tau = 2.0 * std::numbers::pi * static_cast<double>(k) / n;
        c += samples[k] * std::cos(j * tau);
        s += samples[k] * std::sin(j * tau);
    }
    return j == 0 ? std::pair{c / n, 0.0} : std::pair{2.0 * c / n, 2.0 * s / n};
}

/// Complex response X = (K - w^2 M + i w C)^{-1} F for x = Re(X e^{i w t}).
inline Eigen::VectorXcd frf(const Eigen::MatrixXd& m, const Eigen::MatrixXd& c, const Eigen::MatrixXd& k,
                            const Eigen::VectorXd& f, double w) {
    const std::complex<double> i(0.0, 1.0);
    const Eigen::MatrixXcd d = k.cast<std::complex<double>>() - (w * w) * m.cast<std::complex<double>>() +
                               (i * w) * c.cast<std::complex<double>>();
    return d.partialPivLu().solve(f.cast<std::complex<double>>());
}

/// Single-harmonic (first-order HB) Duffing amplitudes at w: real roots a > 0 of
/// ((1 - w^2) a + 3/4 kappa a^3)^2 + (2 zeta w a)^2 = f^2, as a cubic in a^2.
inline std::vector<double> duffing_single_harmonic(double zeta, double kappa, double force, double w) {
    const double p = 1.0 - w * w;
    const double q = 0.75 * kappa;
    const double r = 2.0 * zeta * w;
    // q^2 u^3 + 2 p q u^2 + (p^2 + r^2) u - f^2 = 0, u = a^2
    const double a3 = q * q;
    const double a2 = 2.0 * p * q;
    const double a1 = p * p + r * r;
    const double a0 = -force * force;
    Eigen::Matrix3d companion = Eigen::Matrix3d::Zero();
    companion(0, 0) = -a2 / a3;
    companion(0, 1) = -a1 / a3;
    companion(0, 2) = -a0 / a3;
    companion(1, 0) = 1.0;
    companion(2, 1) = 1.0;
    const Eigen::Vector3cd roots = companion.eigenvalues();
    std::vector<double> amps;
    for (const auto& z : roots) {
        if (std::abs(z.imag()) < 1e-9 * (1.0 + std::abs(z.real())) && z.real() > 0.0) {
            amps.push_back(std::sqrt(z.real()));
        }
    }
    std::sort(amps.begin(), amps.end());
    return amps;
}

/// Discriminant of the cubic above; > 0 means three real roots.
inline double duffing_discriminant(double zeta, double kappa, double force, double w) {
    const double p = 1.0 - w * w;
    const double q = 0.75 * kappa;
    const double r = 2.0 * zeta * w;
    const double a = q * q;
    const double b = 2.0 * p * q;
    const double c = p * p + r * r;
    const double d = -force * force;
    return 18 * a * b * c * d - 4 * b * b * b * d + b * b * c * c - 4 * a * c * c * c - 27 * a * a * d * d;
}

/// Number of sign changes of the discriminant over a fine frequency grid.
inline int duffing_fold_count(double zeta, double kappa, double force, double w0, double w1, int grid = 20000) {
    int changes = 0;
    double prev = duffing_discriminant(zeta, kappa, force, w0);
    for (int i = 1; i <= grid; ++i) {
        const double w = w0 + (w1 - w0) * i / grid;
        const double cur = duffing_discriminant(zeta, kappa, force, w);
        if ((cur > 0.0) != (prev > 0.0)) {
            ++changes;
        }
        prev = cur;
    }
    return changes;
}

/// Direct per-ball summation of the bearing force.
inline std::array<double, 2> hertz_sum(double dx, double dy, double tau, const hbad::HertzBearingParams& p) {
    const double kb = p.contact_stiffness * (1.0 + p.stiffness_variation * std::cos(p.balls * p.cage_ratio * tau));
    double fx = 0.0;
    double fy = 0.0;
    for (int i = 0; i < p.balls; ++i) {
        const double phi = p.cage_ratio * tau + 2.0 * std::numbers::pi * i / p.balls;
        const double delta = dx * std::cos(phi) + dy * std::sin(phi) - p.clearance;
        if (delta > 0.0) {
            const double load = kb * std::pow(delta, p.exponent);
            fx += load * std::cos(phi);
            fy += load * std::sin(phi);
        }
    }
    return {fx, fy};
}

/// Local maxima of a sampled curve that rise above both neighbouring minima
/// by at least `prominence` times the global maximum.
inline std::vector<std::size_t> prominent_maxima(const std::vector<double>& y, double prominence) {
    std::vector<std::size_t> peaks;
    if (y.size() < 3) {
        return peaks;
    }
    const double top = *std::max_element(y.begin(), y.end());
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (!(y[i] >= y[i - 1] && y[i] > y[i + 1])) {
            continue;
        }
        double left = y[i];
        for (std::size_t j = i; j-- > 0;) {
            if (y[j] > y[i]) break;
            left = std::min(left, y[j]);
        }
        double right = y[i];
        for (std::size_t j = i + 1; j < y.size(); ++j) {
            if (y[j] > y[i]) break;
            right = std::min(right, y[j]);
        }
        if (y[i] - std::max(left, right) >= prominence * top) {
            peaks.push_back(i);
        }
    }
    return peaks;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> v(n);
    for (double& x : v) {
        x = u(rng);
    }
    return v;
}

}  // namespace oracle
