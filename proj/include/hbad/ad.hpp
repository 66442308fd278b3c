#pragma once

// Scalar reverse-mode automatic differentiation.
//
// A Tape records every elementary operation applied to Var values. Each node
// keeps its operand indices and local partial derivatives, so a single reverse
// sweep from an output yields the gradient of that output with respect to all
// registered inputs. Constants (Vars built from plain doubles) never reach the
// tape.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hbad/error.hpp"

namespace hbad::ad {

enum class Op : std::uint8_t {
    input,
    add,
    sub,
    mul,
    div,
    neg,
    sin,
    cos,
    atan2,
    sqrt,
    pow,
    exp,
    log,
    abs,
    positive_part,
    dot,
};

constexpr std::string_view op_name(Op op) {
    switch (op) {
        case Op::input: return "input";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::mul: return "mul";
        case Op::div: return "div";
        case Op::neg: return "neg";
        case Op::sin: return "sin";
        case Op::cos: return "cos";
        case Op::atan2: return "atan2";
        case Op::sqrt: return "sqrt";
        case Op::pow: return "pow";
        case Op::exp: return "exp";
        case Op::log: return "log";
        case Op::abs: return "abs";
        case Op::positive_part: return "positive_part";
        case Op::dot: return "dot";
    }
    return "unknown";
}

inline DomainError domain_error(Op op, const std::string& what) {
    return DomainError(std::string(op_name(op)), what);
}

/// Bases below this value are lifted before a fractional power with exponent < 1.
inline constexpr double kPowerFloor = 1e-14;

using Index = std::int32_t;
inline constexpr Index kConstant = -1;

using DenseJacobian = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Tape;

/// A value together with its node handle on the owning tape.
class Var {
  public:
    Var() = default;
    Var(double value) : value_(value) {}  // NOLINT: constants convert implicitly

    double value() const noexcept { return value_; }
    Index index() const noexcept { return index_; }
    Tape* tape() const noexcept { return tape_; }
    bool is_constant() const noexcept { return index_ == kConstant; }

    Var& operator+=(const Var& rhs);
    Var& operator-=(const Var& rhs);
    Var& operator*=(const Var& rhs);
    Var& operator/=(const Var& rhs);

  private:
    friend class Tape;
    Var(double value, Index index, Tape* tape) : value_(value), index_(index), tape_(tape) {}

    double value_ = 0.0;
    Index index_ = kConstant;
    Tape* tape_ = nullptr;
};

/// Append-only operation record. Vars keep a pointer to their tape, so a tape
/// is pinned in memory for its whole lifetime.
class Tape {
  public:
    Tape() { offsets_.push_back(0); }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Registers a new independent variable.
    Var input(double value) {
        if (!std::isfinite(value)) {
            throw domain_error(Op::input, "non-finite input value");
        }
        const Index idx = push_node(Op::input);
        inputs_.push_back(idx);
        return Var(value, idx, this);
    }

    std::span<const Index> inputs() const noexcept { return inputs_; }
    std::size_t size() const noexcept { return ops_.size(); }
    std::size_t operand_count() const noexcept { return args_.size(); }
    Op op(Index node) const { return ops_.at(static_cast<std::size_t>(node)); }

    void reserve(std::size_t nodes, std::size_t operands) {
        ops_.reserve(nodes);
        offsets_.reserve(nodes + 1);
        args_.reserve(operands);
        partials_.reserve(operands);
    }

    void clear() {
        ops_.clear();
        offsets_.assign(1, 0);
        args_.clear();
        partials_.clear();
        inputs_.clear();
    }

    Var unary(Op op, double value, const Var& a, double da) {
        check_partial(op, da);
        if (a.is_constant()) {
            return Var(value);
        }
        check_owner(a);
        args_.push_back(a.index_);
        partials_.push_back(da);
        return Var(value, push_node(op), this);
    }

    Var binary(Op op, double value, const Var& a, double da, const Var& b, double db) {
        check_partial(op, da);
        check_partial(op, db);
        if (!a.is_constant()) {
            check_owner(a);
            args_.push_back(a.index_);
            partials_.push_back(da);
        }
        if (!b.is_constant()) {
            check_owner(b);
            args_.push_back(b.index_);
            partials_.push_back(db);
        }
        if (args_.size() == offsets_.back()) {
            return Var(value);
        }
        return Var(value, push_node(op), this);
    }

    /// Records sum_i weights[i] * values[i] as a single node.
    Var dot(std::span<const double> weights, std::span<const Var> values) {
        if (weights.size() != values.size()) {
            throw std::invalid_argument("ad::dot: size mismatch");
        }
        double total = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            total += weights[i] * values[i].value_;
            if (weights[i] != 0.0 && !values[i].is_constant()) {
                check_owner(values[i]);
                args_.push_back(values[i].index_);
                partials_.push_back(weights[i]);
            }
        }
        if (args_.size() == offsets_.back()) {
            return Var(total);
        }
        return Var(total, push_node(Op::dot), this);
    }

    /// One reverse sweep from `output`; on return adjoint[i] = d(output)/d(node i).
    void backward(Index output, std::vector<double>& adjoint) const {
        if (output < 0 || static_cast<std::size_t>(output) >= ops_.size()) {
            throw std::out_of_range("ad::Tape::backward: output not on tape");
        }
        const auto end = static_cast<std::size_t>(output) + 1;
        if (adjoint.size() < end) {
            adjoint.resize(end);
        }
        std::fill(adjoint.begin(), adjoint.begin() + static_cast<std::ptrdiff_t>(end), 0.0);
        adjoint[end - 1] = 1.0;
        for (std::size_t i = end; i-- > 0;) {
            const double a = adjoint[i];
            if (a == 0.0) {
                continue;
            }
            for (std::uint32_t p = offsets_[i]; p < offsets_[i + 1]; ++p) {
                adjoint[static_cast<std::size_t>(args_[p])] += a * partials_[p];
            }
        }
    }

    /// d(output)/d(input) for every registered input, in registration order.
    std::vector<double> gradient(const Var& output) const {
        std::vector<double> grad(inputs_.size(), 0.0);
        if (output.is_constant()) {
            return grad;
        }
        check_owner(output);
        std::vector<double> adjoint;
        backward(output.index_, adjoint);
        for (std::size_t j = 0; j < inputs_.size(); ++j) {
            const auto node = static_cast<std::size_t>(inputs_[j]);
            grad[j] = node < adjoint.size() ? adjoint[node] : 0.0;
        }
        return grad;
    }

    /// Dense Jacobian of `outputs` with respect to all registered inputs,
    /// one reverse sweep per output.
    DenseJacobian jacobian(std::span<const Var> outputs) const {
        DenseJacobian jac = DenseJacobian::Zero(static_cast<Eigen::Index>(outputs.size()),
                                                static_cast<Eigen::Index>(inputs_.size()));
        std::vector<double> adjoint(ops_.size(), 0.0);
        for (std::size_t r = 0; r < outputs.size(); ++r) {
            if (outputs[r].is_constant()) {
                continue;
            }
            check_owner(outputs[r]);
            backward(outputs[r].index_, adjoint);
            const auto limit = static_cast<Index>(outputs[r].index_);
            for (std::size_t j = 0; j < inputs_.size(); ++j) {
                if (inputs_[j] <= limit) {
                    jac(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
                        adjoint[static_cast<std::size_t>(inputs_[j])];
                }
            }
        }
        return jac;
    }

  private:
    Index push_node(Op op) {
        if (ops_.size() >= static_cast<std::size_t>(std::numeric_limits<Index>::max())) {
            throw std::length_error("ad::Tape: node limit exceeded");
        }
        ops_.push_back(op);
        offsets_.push_back(static_cast<std::uint32_t>(args_.size()));
        return static_cast<Index>(ops_.size() - 1);
    }

    void check_owner(const Var& v) const {
        if (v.tape_ != this) {
            throw std::logic_error("ad: Var combined with a Var from a different tape");
        }
    }

    static void check_partial(Op op, double d) {
        if (!std::isfinite(d)) {
            throw domain_error(op, "non-finite local partial");
        }
    }

    std::vector<Op> ops_;
    std::vector<std::uint32_t> offsets_;
    std::vector<Index> args_;
    std::vector<double> partials_;
    std::vector<Index> inputs_;
};

namespace detail {

inline Tape* owner(const Var& a) { return a.tape(); }

inline Tape* owner(const Var& a, const Var& b) {
    Tape* ta = a.tape();
    Tape* tb = b.tape();
    if (ta && tb && ta != tb) {
        throw std::logic_error("ad: Var combined with a Var from a different tape");
    }
    return ta ? ta : tb;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Arithmetic

inline Var operator+(const Var& a, const Var& b) {
    Tape* t = detail::owner(a, b);
    const double v = a.value() + b.value();
    return t ? t->binary(Op::add, v, a, 1.0, b, 1.0) : Var(v);
}

inline Var operator-(const Var& a, const Var& b) {
    Tape* t = detail::owner(a, b);
    const double v = a.value() - b.value();
    return t ? t->binary(Op::sub, v, a, 1.0, b, -1.0) : Var(v);
}

inline Var operator*(const Var& a, const Var& b) {
    Tape* t = detail::owner(a, b);
    const double v = a.value() * b.value();
    return t ? t->binary(Op::mul, v, a, b.value(), b, a.value()) : Var(v);
}

inline Var operator/(const Var& a, const Var& b) {
    if (b.value() == 0.0) {
        throw domain_error(Op::div, "division by zero");
    }
    Tape* t = detail::owner(a, b);
    const double inv = 1.0 / b.value();
    const double v = a.value() * inv;
    return t ? t->binary(Op::div, v, a, inv, b, -v * inv) : Var(v);
}

inline Var operator-(const Var& a) {
    Tape* t = detail::owner(a);
    return t ? t->unary(Op::neg, -a.value(), a, -1.0) : Var(-a.value());
}

inline Var operator+(const Var& a) { return a; }

inline Var& Var::operator+=(const Var& rhs) { return *this = *this + rhs; }
inline Var& Var::operator-=(const Var& rhs) { return *this = *this - rhs; }
inline Var& Var::operator*=(const Var& rhs) { return *this = *this * rhs; }
inline Var& Var::operator/=(const Var& rhs) { return *this = *this / rhs; }

// Comparisons act on values only; the branch taken is what gets differentiated.
inline bool operator<(const Var& a, const Var& b) { return a.value() < b.value(); }
inline bool operator>(const Var& a, const Var& b) { return a.value() > b.value(); }
inline bool operator<=(const Var& a, const Var& b) { return a.value() <= b.value(); }
inline bool operator>=(const Var& a, const Var& b) { return a.value() >= b.value(); }
inline bool operator==(const Var& a, const Var& b) { return a.value() == b.value(); }
inline bool operator!=(const Var& a, const Var& b) { return a.value() != b.value(); }

// ---------------------------------------------------------------------------
// Elementary functions. Each has a double overload with identical domain rules
// so model code templated on the scalar type behaves the same on both paths.

inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }

inline double atan2(double y, double x) {
    if (y == 0.0 && x == 0.0) {
        return 0.0;
    }
    return std::atan2(y, x);
}

inline double sqrt(double x) {
    if (x < 0.0) {
        throw domain_error(Op::sqrt, "negative argument");
    }
    return std::sqrt(x);
}

inline double pow(double x, double exponent) {
    if (x < 0.0) {
        if (exponent != std::floor(exponent)) {
            throw domain_error(Op::pow, "negative base with non-integer exponent");
        }
        return std::pow(x, exponent);
    }
    if (exponent < 1.0 && x < kPowerFloor) {
        x = kPowerFloor;
    }
    return std::pow(x, exponent);
}

inline double exp(double x) { return std::exp(x); }

inline double log(double x) {
    if (x <= 0.0) {
        throw domain_error(Op::log, "non-positive argument");
    }
    return std::log(x);
}

inline double abs(double x) { return std::abs(x); }
inline double positive_part(double x) { return x > 0.0 ? x : 0.0; }

inline Var sin(const Var& x) {
    Tape* t = detail::owner(x);
    const double v = std::sin(x.value());
    return t ? t->unary(Op::sin, v, x, std::cos(x.value())) : Var(v);
}

inline Var cos(const Var& x) {
    Tape* t = detail::owner(x);
    const double v = std::cos(x.value());
    return t ? t->unary(Op::cos, v, x, -std::sin(x.value())) : Var(v);
}

/// Four-quadrant arctangent. At the origin the value and both partials are 0.
inline Var atan2(const Var& y, const Var& x) {
    Tape* t = detail::owner(y, x);
    const double yv = y.value();
    const double xv = x.value();
    const double r2 = xv * xv + yv * yv;
    const double v = atan2(yv, xv);
    if (!t) {
        return Var(v);
    }
    if (r2 == 0.0) {
        return t->binary(Op::atan2, v, y, 0.0, x, 0.0);
    }
    return t->binary(Op::atan2, v, y, xv / r2, x, -yv / r2);
}

inline Var sqrt(const Var& x) {
    Tape* t = detail::owner(x);
    const double v = sqrt(x.value());
    if (!t) {
        return Var(v);
    }
    if (v == 0.0) {
        throw domain_error(Op::sqrt, "derivative undefined at zero");
    }
    return t->unary(Op::sqrt, v, x, 0.5 / v);
}

/// x^exponent for a real exponent. Bases below kPowerFloor are lifted when
/// exponent < 1 so the partial stays finite.
inline Var pow(const Var& x, double exponent) {
    Tape* t = detail::owner(x);
    double base = x.value();
    const double v = pow(base, exponent);
    if (!t) {
        return Var(v);
    }
    if (exponent < 1.0 && base >= 0.0 && base < kPowerFloor) {
        base = kPowerFloor;
    }
    double d = 0.0;
    if (exponent == 0.0) {
        d = 0.0;
    } else if (base == 0.0) {
        d = exponent == 1.0 ? 1.0 : 0.0;
    } else {
        d = exponent * std::pow(base, exponent - 1.0);
    }
    return t->unary(Op::pow, v, x, d);
}

inline Var exp(const Var& x) {
    Tape* t = detail::owner(x);
    const double v = std::exp(x.value());
    return t ? t->unary(Op::exp, v, x, v) : Var(v);
}

inline Var log(const Var& x) {
    Tape* t = detail::owner(x);
    const double v = log(x.value());
    return t ? t->unary(Op::log, v, x, 1.0 / x.value()) : Var(v);
}

/// |x| with subgradient 0 at the kink.
inline Var abs(const Var& x) {
    Tape* t = detail::owner(x);
    const double xv = x.value();
    const double d = xv > 0.0 ? 1.0 : (xv < 0.0 ? -1.0 : 0.0);
    return t ? t->unary(Op::abs, std::abs(xv), x, d) : Var(std::abs(xv));
}

/// max(x, 0) with subgradient 0 at the kink.
inline Var positive_part(const Var& x) {
    Tape* t = detail::owner(x);
    const double xv = x.value();
    const double v = xv > 0.0 ? xv : 0.0;
    return t ? t->unary(Op::positive_part, v, x, xv > 0.0 ? 1.0 : 0.0) : Var(v);
}

// ---------------------------------------------------------------------------
// Linear combinations, recorded as one node on the tape.

inline double dot(std::span<const double> weights, std::span<const double> values) {
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        total += weights[i] * values[i];
    }
    return total;
}

inline Var dot(std::span<const double> weights, std::span<const Var> values) {
    Tape* t = nullptr;
    for (const Var& v : values) {
        if (v.tape()) {
            t = v.tape();
            break;
        }
    }
    if (!t) {
        double total = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            total += weights[i] * values[i].value();
        }
        return Var(total);
    }
    return t->dot(weights, values);
}

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

template <class T>
inline constexpr bool is_var = std::is_same_v<std::remove_cvref_t<T>, Var>;

// ---------------------------------------------------------------------------

/// Dense Jacobian of `fn` at `point`: one forward recording, one reverse sweep
/// per output. `fn` maps std::span<const Var> to a std::vector<Var>.
template <class Fn>
DenseJacobian jacobian(Fn&& fn, std::span<const double> point) {
    Tape tape;
    std::vector<Var> inputs;
    inputs.reserve(point.size());
    for (double x : point) {
        inputs.push_back(tape.input(x));
    }
    const std::vector<Var> outputs = fn(std::span<const Var>(inputs));
    return tape.jacobian(outputs);
}

}  // namespace hbad::ad
