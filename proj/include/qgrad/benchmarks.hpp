#pragma once

// Benchmark objectives: Ellipsoidal, Schwefel, generalized Rosenbrock, Ackley,
// Rastrigin and rotated Rastrigin, each with its known minimizer and a
// global-basin predicate used to classify runs on multimodal landscapes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qgrad/qcalc.hpp"

namespace qgrad::bench {

inline double ellipsoidal(std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        s += static_cast<double>(i + 1) * x[i] * x[i];
    return s;
}

inline double schwefel(std::span<const double> x) {
    double s = 0.0;
    double prefix = 0.0;
    for (double xi : x) {
        prefix += xi;
        s += prefix * prefix;
    }
    return s;
}

inline double rosenbrock(std::span<const double> x) {
    if (x.size() < 2)
        throw std::invalid_argument("rosenbrock: dimension must be at least 2");
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double a = x[i] * x[i] - x[i + 1];
        const double b = 1.0 - x[i];
        s += 100.0 * a * a + b * b;
    }
    return s;
}

// Evaluated in the textbook order; at the origin this yields -4.44e-16 rather
// than 0 in double precision.
inline double ackley(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    double sq = 0.0;
    double cs = 0.0;
    for (double xi : x) {
        sq += xi * xi;
        cs += std::cos(2.0 * std::numbers::pi * xi);
    }
    return 20.0 + std::numbers::e - 20.0 * std::exp(-0.2 * std::sqrt(sq / n)) -
           std::exp(cs / n);
}

inline double rastrigin(std::span<const double> x) {
    double s = 10.0 * static_cast<double>(x.size());
    for (double xi : x)
        s += xi * xi - 10.0 * std::cos(2.0 * std::numbers::pi * xi);
    return s;
}

/// One-dimensional double well: shallow local minimum near 0, global minimum
/// near 3, separated by a local maximum near 1.35.
inline double double_well(double x) {
    return 2.0 - (std::exp(-x * x) + 2.0 * std::exp(-(x - 3.0) * (x - 3.0)));
}

/// Sparse block rotation with A(i,i) = 4/5, A(i,i+1) = 3/5 for odd i and
/// A(i,i-1) = -3/5 for even i (1-based). Consecutive (odd, even) rows form
/// 2x2 rotation blocks. For odd n the last row has only its diagonal.
class RotationMatrix {
public:
    explicit RotationMatrix(std::size_t n) : n_(n) {
        if (n == 0)
            throw std::invalid_argument("RotationMatrix: dimension must be positive");
    }

    [[nodiscard]] std::size_t dim() const noexcept { return n_; }

    /// Entry (row, col) with 0-based indices.
    [[nodiscard]] double at(std::size_t row, std::size_t col) const {
        if (row >= n_ || col >= n_)
            throw std::out_of_range("RotationMatrix::at");
        if (row == col)
            return kDiag;
        // 0-based even row is a 1-based odd row
        if (row % 2 == 0 && col == row + 1)
            return kOff;
        if (row % 2 == 1 && col + 1 == row)
            return -kOff;
        return 0.0;
    }

    void apply(std::span<const double> x, std::span<double> y) const {
        if (x.size() != n_ || y.size() != n_)
            throw std::invalid_argument("RotationMatrix::apply: dimension mismatch");
        for (std::size_t r = 0; r < n_; ++r) {
            if (r % 2 == 0)
                y[r] = kDiag * x[r] + (r + 1 < n_ ? kOff * x[r + 1] : 0.0);
            else
                y[r] = kDiag * x[r] - kOff * x[r - 1];
        }
    }

    [[nodiscard]] Vector apply(std::span<const double> x) const {
        Vector y(n_);
        apply(x, y);
        return y;
    }

    static constexpr double kDiag = 4.0 / 5.0;
    static constexpr double kOff = 3.0 / 5.0;

private:
    std::size_t n_;
};

inline double rotated_rastrigin(std::span<const double> x, const RotationMatrix& A) {
    return rastrigin(A.apply(x));
}

/// Named objective with its known optimum and global-basin predicate.
struct ObjectiveFunction {
    std::string name;
    std::size_t dim = 0;
    ObjectiveFn eval;
    Vector x_star;
    double f_star = 0.0;
    std::function<bool(std::span<const double>)> basin;

    double operator()(std::span<const double> x) const {
        if (x.size() != dim)
            throw std::invalid_argument(name + ": expected dimension " + std::to_string(dim) +
                                        ", got " + std::to_string(x.size()));
        return eval(x);
    }

    [[nodiscard]] CountedObjective counted() const {
        return CountedObjective(ObjectiveFn([f = *this](std::span<const double> x) {
            return f(x);
        }));
    }
};

inline double max_abs(std::span<const double> x) {
    double m = 0.0;
    for (double v : x)
        m = std::max(m, std::abs(v));
    return m;
}

/// Registry identifiers accepted by the command line.
inline const std::vector<std::string>& function_names() {
    static const std::vector<std::string> names{"elp", "sch", "ros", "ackl", "rtg", "rrtg"};
    return names;
}

inline std::string joined_function_names() {
    std::string out;
    for (const auto& n : function_names()) {
        if (!out.empty())
            out += ", ";
        out += n;
    }
    return out;
}

inline ObjectiveFunction make_function(std::string_view name, std::size_t n = 20) {
    if (n == 0)
        throw std::invalid_argument("dimension must be positive");
    ObjectiveFunction f;
    f.name = std::string(name);
    f.dim = n;
    f.x_star = Vector(n, 0.0);

    // Unimodal: accuracy is the real criterion.
    auto accurate = [](ObjectiveFn g) {
        return [g = std::move(g)](std::span<const double> x) { return g(x) < 1e-8; };
    };

    if (name == "elp") {
        f.eval = ellipsoidal;
        f.basin = accurate(ellipsoidal);
    } else if (name == "sch") {
        f.eval = schwefel;
        f.basin = accurate(schwefel);
    } else if (name == "ros") {
        if (n < 2)
            throw std::invalid_argument("ros: dimension must be at least 2");
        f.eval = rosenbrock;
        f.x_star = Vector(n, 1.0);
        f.basin = [](std::span<const double> x) {
            double m = 0.0;
            for (double v : x)
                m = std::max(m, std::abs(v - 1.0));
            return m < 0.5;
        };
    } else if (name == "ackl") {
        f.eval = ackley;
        f.f_star = ackley(f.x_star);
        f.basin = [](std::span<const double> x) { return max_abs(x) < 0.5; };
    } else if (name == "rtg") {
        f.eval = rastrigin;
        f.basin = [](std::span<const double> x) { return max_abs(x) < 0.5; };
    } else if (name == "rrtg") {
        RotationMatrix A(n);
        f.eval = [A](std::span<const double> x) { return rotated_rastrigin(x, A); };
        f.basin = [A](std::span<const double> x) { return max_abs(A.apply(x)) < 0.5; };
    } else {
        throw std::invalid_argument("unknown function '" + std::string(name) +
                                    "'; valid names: " + joined_function_names());
    }
    return f;
}

inline bool in_global_basin(const ObjectiveFunction& f, std::span<const double> x) {
    if (x.size() != f.dim)
        throw std::invalid_argument("in_global_basin: dimension mismatch");
    return f.basin(x);
}

/// Starting point with every coordinate uniform on [lo, hi] (default [-10, -5]).
template <class Rng>
Vector initial_point(std::size_t n, Rng& rng, double lo = -10.0, double hi = -5.0) {
    if (n == 0)
        throw std::invalid_argument("initial_point: dimension must be positive");
    std::uniform_real_distribution<double> u(lo, hi);
    Vector x(n);
    for (auto& v : x)
        v = u(rng);
    return x;
}

}  // namespace qgrad::bench
