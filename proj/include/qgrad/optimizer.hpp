#pragma once

/**
 * @file optimizer.hpp
 * @brief q-gradient descent and the classical steepest-descent baseline.
 *
 * One q-gradient iteration:
 *
 *   1. for every coordinate draw s_i ~ Normal(x_i, sigma_k) and set
 *      q_i = s_i / x_i (sentinel 1 when x_i is ~0),
 *   2. g = q-gradient of F at x^k,
 *   3. x^{k+1} = x^k - alpha_k * g / |g|,  |g| the max-abs norm by default
 *      (see StepNorm),
 *   4. sigma_{k+1} = beta * sigma_k,  alpha_{k+1} = beta * alpha_k.
 *
 * Large sigma makes the secants long and the direction nearly random, which
 * lets the iterate jump across local minima. As sigma shrinks the secants
 * collapse onto tangents and the method becomes steepest descent with a
 * vanishing step. The iteration is not a descent method: F may increase.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qgrad/qcalc.hpp"

namespace qgrad {

using Rng = std::mt19937_64;

/// |x_i| at or below this emits the q_i = 1 sentinel.
inline constexpr double kZeroCoordinate = 1e-12;

/// Gradient norm below which the q-gradient counts as stationary.
inline constexpr double kStationaryNorm = 1e-12;

/// How the q-gradient is scaled before the step.
///  - max_abs:   g / max_i |g_i|, the largest coordinate move is alpha_k
///  - euclidean: g / |g|_2, the step has Euclidean length alpha_k
///  - none:      raw g, x - alpha_k * g
enum class StepNorm { max_abs, euclidean, none };

inline const char* to_string(StepNorm s) {
    switch (s) {
        case StepNorm::euclidean: return "euclidean";
        case StepNorm::none: return "none";
        case StepNorm::max_abs: break;
    }
    return "max_abs";
}

struct QGradientConfig {
    double sigma0 = 1.0;
    double alpha0 = 1.0;
    double beta = 0.9;
    std::uint64_t max_evals = 1'000'000;
    double target = 1e-20;
    std::size_t dim = 20;
    double fd_step = kDefaultFdStep;
    int max_redraws = 10;
    double sigma_floor = 0.0;

    StepNorm step_norm = StepNorm::max_abs;

    /// Force every q_i to the sentinel 1, i.e. fixed-schedule gradient descent.
    bool classical_only = false;

    void validate() const {
        auto fail = [](const std::string& what) {
            throw std::invalid_argument("QGradientConfig: " + what);
        };
        if (!(sigma0 > 0.0) || !std::isfinite(sigma0))
            fail("sigma0 must be positive and finite");
        if (!(alpha0 > 0.0) || !std::isfinite(alpha0))
            fail("alpha0 must be positive and finite");
        if (!(beta > 0.0 && beta < 1.0))
            fail("beta must lie in (0, 1)");
        if (max_evals < 1)
            fail("max_evals must be at least 1");
        if (dim < 1)
            fail("dim must be at least 1");
        if (!(fd_step > 0.0) || !std::isfinite(fd_step))
            fail("fd_step must be positive and finite");
        if (max_redraws < 1)
            fail("max_redraws must be at least 1");
        if (!(sigma_floor >= 0.0))
            fail("sigma_floor must be non-negative");
        if (std::isnan(target))
            fail("target must not be NaN");
    }
};

struct OptimizerState {
    Vector x;
    double f_x = std::numeric_limits<double>::quiet_NaN();
    double sigma_k = 0.0;
    double alpha_k = 0.0;
    std::uint64_t iteration = 0;
    double best_f = std::numeric_limits<double>::infinity();
    Vector best_x;
    /// Set when the last step found no usable q-gradient and kept x.
    bool stalled = false;

    void record(double f) {
        f_x = f;
        if (std::isfinite(f) && f < best_f) {
            best_f = f;
            best_x = x;
        }
    }
};

enum class SuccessMode { none, accuracy, basin };

inline const char* to_string(SuccessMode m) {
    switch (m) {
        case SuccessMode::accuracy: return "accuracy";
        case SuccessMode::basin: return "basin";
        case SuccessMode::none: break;
    }
    return "none";
}

struct RunResult {
    std::uint64_t evals_used = 0;
    double best_f = std::numeric_limits<double>::infinity();
    Vector best_x;
    bool success = false;
    SuccessMode mode = SuccessMode::none;
    std::uint64_t iterations = 0;
    std::uint64_t seed = 0;

    bool operator==(const RunResult&) const = default;
};

using BasinPredicate = std::function<bool(std::span<const double>)>;

/// Accuracy first, then basin membership of the best point.
inline void classify(RunResult& r, double target, const BasinPredicate& basin) {
    if (r.best_f < target)
        r.mode = SuccessMode::accuracy;
    else if (basin && !r.best_x.empty() && basin(r.best_x))
        r.mode = SuccessMode::basin;
    else
        r.mode = SuccessMode::none;
    r.success = r.mode != SuccessMode::none;
}

/// Draws q so that q_i x_i ~ Normal(x_i, sigma).
template <class R>
QVector sample_q(std::span<const double> x, double sigma, R& rng, int max_redraws = 10) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("sample_q: sigma must be positive");
    QVector q = QVector::sentinel(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::abs(x[i]) <= kZeroCoordinate)
            continue;
        std::normal_distribution<double> normal(x[i], sigma);
        for (int attempt = 0; attempt <= max_redraws; ++attempt) {
            const double qi = normal(rng) / x[i];
            if (std::isfinite(qi) && !is_degenerate_secant(x[i], qi)) {
                q.set(i, qi);
                break;
            }
        }
    }
    return q;
}

inline double cool(double value, double beta) {
    if (!(value > 0.0))
        throw std::invalid_argument("cool: value must be positive");
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("cool: beta must lie in (0, 1)");
    return beta * value;
}

inline double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double e : v)
        s += e * e;
    return std::sqrt(s);
}

inline double norm_inf(std::span<const double> v) {
    double m = 0.0;
    for (double e : v)
        m = std::max(m, std::abs(e));
    return m;
}

inline OptimizerState initial_state(const QGradientConfig& cfg, std::span<const double> x0) {
    cfg.validate();
    if (x0.size() != cfg.dim)
        throw std::invalid_argument("x0 has dimension " + std::to_string(x0.size()) +
                                    ", config expects " + std::to_string(cfg.dim));
    OptimizerState s;
    s.x.assign(x0.begin(), x0.end());
    s.best_x = s.x;
    s.sigma_k = cfg.sigma0;
    s.alpha_k = cfg.alpha0;
    return s;
}

namespace detail {

// n secant evaluations around x given the known F(x).
template <CountedFunction Obj>
Vector q_gradient_at(Obj& F, Vector& x, double fx, const QVector& q, double h) {
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        g[i] = q_partial_with_base(F, x, i, q[i], h, fx);
    return g;
}

inline bool finite_all(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
}

}  // namespace detail

/// One q-gradient iteration with a caller-supplied q sampler
/// `draw_q(x, sigma) -> QVector`. Requires state.f_x = F(state.x) (set by
/// `optimize`, or evaluated here if missing). Costs n + 1 evaluations per
/// accepted step plus n per stationary redraw; redraws stop early rather than
/// overrun cfg.max_evals.
template <CountedFunction Obj, class Sampler>
OptimizerState descend_step_with(OptimizerState state, Obj& F, const QGradientConfig& cfg,
                                 Sampler&& draw_q) {
    const std::size_t n = state.x.size();
    if (n != cfg.dim)
        throw std::invalid_argument("descend_step: state dimension does not match config");

    if (std::isnan(state.f_x))
        state.record(F(state.x));

    const double sigma = std::max(state.sigma_k, cfg.sigma_floor);
    // Classical-limit partials use a difference step no longer than the
    // current secant scale, otherwise near-zero coordinates dominate |g|.
    const double h = std::min(cfg.fd_step, sigma);

    Vector g;
    double gnorm = 0.0;
    bool usable = false;
    for (int attempt = 0; attempt <= cfg.max_redraws; ++attempt) {
        // each attempt needs n probes, and the step needs one more evaluation
        if (F.count() + n + 1 > cfg.max_evals)
            break;
        const QVector q = cfg.classical_only ? QVector::sentinel(n)
                                             : QVector(draw_q(std::span<const double>(state.x), sigma));
        g = detail::q_gradient_at(F, state.x, state.f_x, q, h);
        gnorm = norm2(g);
        if (detail::finite_all(g) && std::isfinite(gnorm) && gnorm >= kStationaryNorm) {
            usable = true;
            break;
        }
    }

    state.stalled = !usable;
    if (usable) {
        double scale = state.alpha_k;
        if (cfg.step_norm == StepNorm::max_abs)
            scale /= norm_inf(g);
        else if (cfg.step_norm == StepNorm::euclidean)
            scale /= gnorm;
        for (std::size_t i = 0; i < n; ++i)
            state.x[i] -= scale * g[i];
        state.record(F(state.x));
    }

    state.sigma_k = cool(state.sigma_k, cfg.beta);
    state.alpha_k = cool(state.alpha_k, cfg.beta);
    ++state.iteration;
    return state;
}

/// One q-gradient iteration with Gaussian q sampling.
template <CountedFunction Obj, class R>
OptimizerState descend_step(OptimizerState state, Obj& F, const QGradientConfig& cfg, R& rng) {
    return descend_step_with(std::move(state), F, cfg,
                             [&](std::span<const double> x, double sigma) {
                                 return sample_q(x, sigma, rng, cfg.max_redraws);
                             });
}

/// Runs q-gradient descent until best F < cfg.target or the evaluation budget
/// cannot pay for another iteration. `basin`, when given, lets runs that end
/// near the global minimizer count as successful.
template <CountedFunction Obj, class R>
RunResult optimize(Obj& F, const QGradientConfig& cfg, std::span<const double> x0, R& rng,
                   const BasinPredicate& basin = {}) {
    OptimizerState state = initial_state(cfg, x0);
    const std::uint64_t start = F.count();
    const std::uint64_t n = cfg.dim;

    // budget accounting below is relative to this run
    QGradientConfig run_cfg = cfg;
    run_cfg.max_evals = start + cfg.max_evals;

    state.record(F(state.x));
    while (state.best_f >= cfg.target && F.count() + n + 1 <= run_cfg.max_evals) {
        const std::uint64_t before = F.count();
        state = descend_step(std::move(state), F, run_cfg, rng);
        if (F.count() == before)
            break;
    }

    RunResult r;
    r.evals_used = F.count() - start;
    r.best_f = state.best_f;
    r.best_x = state.best_x;
    r.iterations = state.iteration;
    classify(r, cfg.target, basin);
    return r;
}

template <CountedFunction Obj>
RunResult optimize(Obj& F, const QGradientConfig& cfg, std::span<const double> x0,
                   std::uint64_t seed, const BasinPredicate& basin = {}) {
    Rng rng(seed);
    RunResult r = optimize(F, cfg, x0, rng, basin);
    r.seed = seed;
    return r;
}

struct LineSearchResult {
    double t = 0.0;
    double value = 0.0;
    int evals = 0;
};

/// Golden-section search for a local minimizer of phi on [a, b]. Uses at most
/// max_iters + 2 evaluations of phi.
template <ScalarFunction Phi>
LineSearchResult golden_section_search(Phi&& phi, double a, double b, double tol,
                                       int max_iters) {
    if (!(a < b))
        throw std::invalid_argument("golden_section: requires a < b");
    if (!(tol > 0.0))
        throw std::invalid_argument("golden_section: tol must be positive");
    if (max_iters < 1)
        throw std::invalid_argument("golden_section: max_iters must be positive");

    constexpr double inv_phi = std::numbers::phi - 1.0;  // 0.618...
    LineSearchResult r;
    auto eval = [&](double t) {
        const double v = static_cast<double>(phi(t));
        ++r.evals;
        if (!std::isfinite(v))
            throw std::domain_error("golden_section: non-finite objective at t = " +
                                    std::to_string(t));
        return v;
    };

    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    for (int it = 0; it < max_iters && (b - a) > tol; ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    if (fc <= fd) {
        r.t = c;
        r.value = fc;
    } else {
        r.t = d;
        r.value = fd;
    }
    return r;
}

template <ScalarFunction Phi>
double golden_section(Phi&& phi, double a, double b, double tol = 1e-10, int max_iters = 100) {
    return golden_section_search(std::forward<Phi>(phi), a, b, tol, max_iters).t;
}

struct SteepestDescentConfig {
    double alpha_max = 10.0;
    double line_tol = 1e-10;
    int line_max_iters = 100;
    /// Bracket shrinks tried when the line search finds no decrease.
    int bracket_shrinks = 20;
    std::uint64_t max_evals = 1'000'000;
    std::uint64_t max_iterations = std::numeric_limits<std::uint64_t>::max();
    double target = 1e-20;
    double fd_step = kDefaultFdStep;
};

/// Classical steepest descent with a golden-section line search along
/// d = -grad F on [0, alpha_max]. Steps are only accepted when they lower F.
template <CountedFunction Obj>
RunResult steepest_descent(Obj& F, std::span<const double> x0, const SteepestDescentConfig& cfg,
                           const BasinPredicate& basin = {},
                           std::vector<double>* trace = nullptr) {
    if (x0.empty())
        throw std::invalid_argument("steepest_descent: empty starting point");
    if (!(cfg.alpha_max > 0.0))
        throw std::invalid_argument("steepest_descent: alpha_max must be positive");

    const std::uint64_t start = F.count();
    const std::uint64_t n = x0.size();
    const std::uint64_t per_iter = n + static_cast<std::uint64_t>(cfg.line_max_iters) + 2;
    auto used = [&] { return F.count() - start; };

    Vector x(x0.begin(), x0.end());
    double fx = F(x);
    RunResult r;
    r.best_f = fx;
    r.best_x = x;
    if (trace)
        trace->push_back(fx);

    Vector trial(n);
    while (r.best_f >= cfg.target && r.iterations < cfg.max_iterations &&
           used() + per_iter <= cfg.max_evals) {
        Vector g = detail::q_gradient_at(F, x, fx, QVector::sentinel(n), cfg.fd_step);
        if (!detail::finite_all(g) || norm2(g) < kStationaryNorm)
            break;

        auto phi = [&](double t) {
            for (std::size_t i = 0; i < n; ++i)
                trial[i] = x[i] - t * g[i];
            const double v = F(trial);
            return std::isfinite(v) ? v : std::numeric_limits<double>::max();
        };

        bool moved = false;
        double upper = cfg.alpha_max;
        for (int shrink = 0; shrink <= cfg.bracket_shrinks; ++shrink, upper *= 0.1) {
            if (used() + static_cast<std::uint64_t>(cfg.line_max_iters) + 2 > cfg.max_evals)
                break;
            const auto ls = golden_section_search(phi, 0.0, upper, cfg.line_tol * upper / cfg.alpha_max,
                                                  cfg.line_max_iters);
            if (ls.value < fx) {
                for (std::size_t i = 0; i < n; ++i)
                    x[i] -= ls.t * g[i];
                fx = ls.value;
                moved = true;
                break;
            }
        }
        if (!moved)
            break;
        ++r.iterations;
        if (trace)
            trace->push_back(fx);
        if (fx < r.best_f) {
            r.best_f = fx;
            r.best_x = x;
        }
    }

    r.evals_used = used();
    classify(r, cfg.target, basin);
    return r;
}

}  // namespace qgrad
