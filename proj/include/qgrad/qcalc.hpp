#pragma once

/**
 * @file qcalc.hpp
 * @brief Jackson q-derivative primitives.
 *
 * The q-derivative of a scalar function is the slope of the secant through
 * (x, f(x)) and (qx, f(qx)):
 *
 *     D_q f(x) = (f(qx) - f(x)) / (qx - x),   q != 1, x != 0
 *
 * For a function of n variables every coordinate gets its own parameter q_i
 * and the q-gradient collects the n partial q-derivatives. At x_i = 0 or
 * q_i = 1 the partial reduces to the classical partial derivative, which is
 * approximated here by a forward difference so that the shared F(x) value is
 * reused and one q-gradient always costs exactly n + 1 objective calls.
 */

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qgrad {

using Vector = std::vector<double>;

/// Default forward-difference step for the classical-limit partials.
inline constexpr double kDefaultFdStep = 1e-8;

/// Relative width below which a secant denominator counts as degenerate.
inline constexpr double kDegenerateTol = 1e-15;

template <typename F>
concept ScalarFunction = requires(F f, double x) {
    { f(x) } -> std::convertible_to<double>;
};

template <typename F>
concept VectorFunction = requires(F f, std::span<const double> x) {
    { f(x) } -> std::convertible_to<double>;
};

/// Vector of per-coordinate q parameters. An entry equal to exactly 1 is the
/// sentinel for "use the classical partial derivative".
class QVector {
public:
    QVector() = default;
    explicit QVector(std::size_t n, double value = 1.0) : q_(n, value) { check_all(); }
    explicit QVector(Vector q) : q_(std::move(q)) { check_all(); }
    QVector(std::initializer_list<double> q) : q_(q) { check_all(); }

    [[nodiscard]] std::size_t size() const noexcept { return q_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return q_[i]; }
    [[nodiscard]] bool is_sentinel(std::size_t i) const { return q_[i] == 1.0; }
    [[nodiscard]] std::span<const double> values() const noexcept { return q_; }

    void set(std::size_t i, double value) {
        if (!std::isfinite(value))
            throw std::invalid_argument("QVector: non-finite q entry");
        q_.at(i) = value;
    }

    static QVector sentinel(std::size_t n) { return QVector(n, 1.0); }

private:
    void check_all() const {
        for (double v : q_)
            if (!std::isfinite(v))
                throw std::invalid_argument("QVector: non-finite q entry");
    }

    Vector q_;
};

/// Objective wrapper that counts evaluations. One instance must not be shared
/// between concurrent callers; the counter is plain mutable state.
template <VectorFunction Fn>
class EvalCounted {
public:
    explicit EvalCounted(Fn fn) : fn_(std::move(fn)) {}

    double operator()(std::span<const double> x) {
        ++count_;
        return static_cast<double>(fn_(x));
    }

    [[nodiscard]] std::uint64_t count() const noexcept { return count_; }
    void reset() noexcept { count_ = 0; }

    [[nodiscard]] const Fn& function() const noexcept { return fn_; }

private:
    Fn fn_;
    std::uint64_t count_ = 0;
};

using ObjectiveFn = std::function<double(std::span<const double>)>;
using CountedObjective = EvalCounted<ObjectiveFn>;

template <typename T>
struct is_eval_counted : std::false_type {};
template <typename Fn>
struct is_eval_counted<EvalCounted<Fn>> : std::true_type {};

template <typename T>
concept CountedFunction = is_eval_counted<std::remove_cvref_t<T>>::value;

/// q-analogue of the integer n: (q^n - 1) / (q - 1).
inline double q_number(int n, double q) {
    if (q == 1.0)
        throw std::invalid_argument("q_number: q must differ from 1 (the limit is n)");
    return (std::pow(q, n) - 1.0) / (q - 1.0);
}

/// Jackson derivative of a scalar function. Exactly two calls to f.
template <ScalarFunction F>
double q_derivative_1d(F&& f, double x, double q) {
    if (x == 0.0)
        throw std::invalid_argument("q_derivative_1d: x must be nonzero");
    if (q == 1.0)
        throw std::invalid_argument("q_derivative_1d: q must differ from 1");
    const double qx = q * x;
    return (static_cast<double>(f(qx)) - static_cast<double>(f(x))) / (qx - x);
}

/// True when the secant x_i -> q_i x_i is too short to resolve, including the
/// exact limits x_i = 0 and q_i = 1.
inline bool is_degenerate_secant(double x_i, double q_i) {
    if (x_i == 0.0 || q_i == 1.0)
        return true;
    return std::abs(q_i * x_i - x_i) < kDegenerateTol * std::max(1.0, std::abs(x_i));
}

namespace detail {

inline void require_positive_step(double h) {
    if (!(h > 0.0) || !std::isfinite(h))
        throw std::invalid_argument("finite-difference step must be positive and finite");
}

// Partial q-derivative given a precomputed F(x). Costs one evaluation.
template <CountedFunction Obj>
double q_partial_with_base(Obj& F, Vector& x, std::size_t i, double q_i, double h,
                           double fx) {
    const double xi = x[i];
    double moved;
    if (is_degenerate_secant(xi, q_i))
        moved = xi + h;
    else
        moved = q_i * xi;
    x[i] = moved;
    const double f_moved = F(x);
    x[i] = xi;
    return (f_moved - fx) / (moved - xi);
}

}  // namespace detail

/// First-order partial q-derivative along coordinate i (0-based). Falls back to
/// a forward difference with step h when x_i = 0 or q_i = 1. Two evaluations.
template <CountedFunction Obj>
double q_partial(Obj& F, std::span<const double> x, std::size_t i, double q_i,
                 double h = kDefaultFdStep) {
    if (i >= x.size())
        throw std::invalid_argument("q_partial: coordinate index out of range");
    detail::require_positive_step(h);
    Vector work(x.begin(), x.end());
    const double fx = F(work);
    return detail::q_partial_with_base(F, work, i, q_i, h, fx);
}

/// q-gradient vector. F(x) is evaluated once and shared, so the cost is n + 1.
template <CountedFunction Obj>
Vector q_gradient(Obj& F, std::span<const double> x, const QVector& q,
                  double h = kDefaultFdStep) {
    if (q.size() != x.size())
        throw std::invalid_argument("q_gradient: dim(q) = " + std::to_string(q.size()) +
                                    " but dim(x) = " + std::to_string(x.size()));
    detail::require_positive_step(h);
    Vector work(x.begin(), x.end());
    const double fx = F(work);
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        g[i] = detail::q_partial_with_base(F, work, i, q[i], h, fx);
    return g;
}

/// Forward-difference gradient, n + 1 evaluations.
template <CountedFunction Obj>
Vector classical_gradient_fd(Obj& F, std::span<const double> x, double h = kDefaultFdStep) {
    return q_gradient(F, x, QVector::sentinel(x.size()), h);
}

}  // namespace qgrad
