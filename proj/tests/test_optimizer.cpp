#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <gtest/gtest.h>

#include "qgrad/benchmarks.hpp"
#include "qgrad/optimizer.hpp"

using namespace qgrad;

namespace {

double sphere(std::span<const double> x) {
    double s = 0.0;
    for (double v : x)
        s += v * v;
    return s;
}

double well(std::span<const double> x) { return bench::double_well(x[0]); }

CountedObjective counted(ObjectiveFn f) { return CountedObjective(std::move(f)); }

QGradientConfig config(std::size_t dim, double sigma0, double alpha0, double beta) {
    QGradientConfig c;
    c.dim = dim;
    c.sigma0 = sigma0;
    c.alpha0 = alpha0;
    c.beta = beta;
    return c;
}

}  // namespace

// ---------------------------------------------------------------- sample_q

TEST(SampleQ, TendsToOneAsSigmaVanishes) {
    Rng rng(1);
    const std::vector<double> x{1.0, 1.0};
    for (double sigma : {1e-3, 1e-6, 1e-9}) {
        const auto q = sample_q(x, sigma, rng);
        for (std::size_t i = 0; i < 2; ++i)
            EXPECT_LE(std::abs(q[i] - 1.0), 10.0 * sigma);
    }
}

TEST(SampleQ, ZeroCoordinateIsSentinel) {
    Rng rng(2);
    for (double sigma : {1e-3, 1.0, 100.0}) {
        const auto q = sample_q(std::vector<double>{0.0, 5.0}, sigma, rng);
        EXPECT_TRUE(q.is_sentinel(0));
        EXPECT_EQ(q[0], 1.0);
        EXPECT_FALSE(q.is_sentinel(1));
    }
    const auto q = sample_q(std::vector<double>{1e-13}, 1.0, rng);
    EXPECT_TRUE(q.is_sentinel(0));
}

TEST(SampleQ, ReplaysSeededStream) {
    Rng rng(42);
    const auto q = sample_q(std::vector<double>{2.0}, 1.0, rng);

    Rng replay(42);
    std::normal_distribution<double> normal(2.0, 1.0);
    const double s = normal(replay);
    EXPECT_EQ(q[0], s / 2.0);
}

TEST(SampleQ, RejectsNonPositiveSigma) {
    Rng rng(3);
    EXPECT_THROW(sample_q(std::vector<double>{1.0}, 0.0, rng), std::invalid_argument);
}

TEST(SampleQ, SpreadMatchesSigma) {
    Rng rng(4);
    const double x = 3.0, sigma = 0.5;
    double sum = 0.0, sq = 0.0;
    const int draws = 20000;
    for (int t = 0; t < draws; ++t) {
        const double s = sample_q(std::vector<double>{x}, sigma, rng)[0] * x;
        sum += s;
        sq += s * s;
    }
    const double mean = sum / draws;
    EXPECT_NEAR(mean, x, 0.02);
    EXPECT_NEAR(std::sqrt(sq / draws - mean * mean), sigma, 0.02);
}

// -------------------------------------------------------------------- cool

TEST(Cool, Examples) {
    EXPECT_EQ(cool(1.0, 0.5), 0.5);

    double s = 0.4;
    for (int k = 0; k < 10; ++k)
        s = cool(s, 0.86);
    // oracle: ten repeated multiplications, computed independently
    EXPECT_NEAR(s, 0.08852063155521227, 1e-15);

    EXPECT_THROW(cool(1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(cool(0.0, 0.5), std::invalid_argument);
    auto cfg = config(2, 1.0, 1.0, 1.0);
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Config, Validation) {
    EXPECT_NO_THROW(config(2, 1.0, 1.0, 0.5).validate());
    EXPECT_THROW(config(2, 0.0, 1.0, 0.5).validate(), std::invalid_argument);
    EXPECT_THROW(config(2, 1.0, -1.0, 0.5).validate(), std::invalid_argument);
    EXPECT_THROW(config(2, 1.0, 1.0, 0.0).validate(), std::invalid_argument);
    EXPECT_THROW(config(0, 1.0, 1.0, 0.5).validate(), std::invalid_argument);
    auto c = config(2, 1.0, 1.0, 0.5);
    c.max_evals = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

// ------------------------------------------------------------ descend_step

TEST(DescendStep, SentinelStepOnSphere) {
    auto F = counted(sphere);
    auto cfg = config(2, 1.0, 1.0, 0.5);
    cfg.classical_only = true;
    cfg.step_norm = StepNorm::euclidean;
    Rng rng(5);
    auto s = descend_step(initial_state(cfg, std::vector<double>{3.0, 4.0}), F, cfg, rng);
    EXPECT_NEAR(s.x[0], 2.4, 1e-7);
    EXPECT_NEAR(s.x[1], 3.2, 1e-7);
    EXPECT_EQ(s.iteration, 1u);
    EXPECT_EQ(s.sigma_k, 0.5);
    EXPECT_EQ(s.alpha_k, 0.5);
    EXPECT_EQ(F.count(), 4u);  // F(x), two probes, F(x_new)
    EXPECT_NEAR(s.best_f, 2.4 * 2.4 + 3.2 * 3.2, 1e-6);
}

TEST(DescendStep, MaxNormMovesLargestComponentByAlpha) {
    auto F = counted(sphere);
    auto cfg = config(2, 1.0, 1.0, 0.5);
    cfg.classical_only = true;
    Rng rng(5);
    auto s = descend_step(initial_state(cfg, std::vector<double>{3.0, 4.0}), F, cfg, rng);
    EXPECT_NEAR(s.x[0], 2.25, 1e-7);
    EXPECT_NEAR(s.x[1], 3.0, 1e-7);
}

TEST(DescendStep, StationaryGuardKeepsX) {
    auto F = counted([](std::span<const double>) { return 7.0; });
    auto cfg = config(3, 1.0, 1.0, 0.5);
    Rng rng(6);
    const std::vector<double> x0{1.0, -2.0, 3.0};
    auto s = descend_step(initial_state(cfg, x0), F, cfg, rng);
    EXPECT_EQ(s.x, x0);
    EXPECT_TRUE(s.stalled);
    EXPECT_EQ(s.sigma_k, 0.5);
    EXPECT_EQ(s.alpha_k, 0.5);
    EXPECT_EQ(s.iteration, 1u);
    EXPECT_EQ(F.count(), 1u + 3u * static_cast<unsigned>(cfg.max_redraws + 1));
}

TEST(DescendStep, DoubleWellLeapsRightWithQTwo) {
    auto F = counted(well);
    auto cfg = config(1, 2.0, 1.0, 0.95);
    auto s = descend_step_with(initial_state(cfg, std::vector<double>{1.0}), F, cfg,
                               [](std::span<const double>, double) { return QVector{2.0}; });
    EXPECT_GT(s.x[0], 1.0);

    // a classical step from the same point goes left
    cfg.classical_only = true;
    auto c = descend_step_with(initial_state(cfg, std::vector<double>{1.0}), F, cfg,
                               [](std::span<const double>, double) { return QVector{2.0}; });
    EXPECT_LT(c.x[0], 1.0);
}

TEST(DescendStep, NonFiniteIterateIsAcceptedButNotBest) {
    auto F = counted([](std::span<const double> x) {
        return x[0] < 0.0 ? std::numeric_limits<double>::quiet_NaN() : x[0] * x[0];
    });
    auto cfg = config(1, 1.0, 1.0, 0.5);
    cfg.classical_only = true;
    Rng rng(7);
    auto s = descend_step(initial_state(cfg, std::vector<double>{0.5}), F, cfg, rng);
    EXPECT_NEAR(s.x[0], -0.5, 1e-12);
    EXPECT_TRUE(std::isnan(s.f_x));
    EXPECT_EQ(s.best_f, 0.25);
    EXPECT_EQ(s.best_x, std::vector<double>{0.5});
}

TEST(DescendStep, DimensionMismatch) {
    auto F = counted(sphere);
    auto cfg = config(2, 1.0, 1.0, 0.5);
    Rng rng(8);
    auto s = initial_state(cfg, std::vector<double>{1.0, 1.0});
    s.x.push_back(1.0);
    EXPECT_THROW(descend_step(s, F, cfg, rng), std::invalid_argument);
    EXPECT_THROW(initial_state(cfg, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(DescendStep, ScheduleLaw) {
    const auto f = bench::make_function("rtg", 20);
    auto F = f.counted();
    auto cfg = config(20, 21.0, 0.3, 0.9995);
    Rng rng(9);
    auto s = initial_state(cfg, bench::initial_point(20, rng));
    for (int k = 1; k <= 500; ++k) {
        s = descend_step(std::move(s), F, cfg, rng);
        const double law = std::pow(cfg.beta, k);
        EXPECT_NEAR(s.sigma_k / cfg.sigma0, law, 1e-12 * law);
        EXPECT_NEAR(s.alpha_k / cfg.alpha0, law, 1e-12 * law);
    }
}

TEST(DescendStep, ClassicalLimitMatchesGradientStep) {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (const auto& name : bench::function_names()) {
        const auto f = bench::make_function(name, 6);
        auto cfg = config(6, 1.0, 1e-3, 0.9);
        cfg.classical_only = true;
        cfg.step_norm = StepNorm::none;
        std::vector<double> x(6);
        for (auto& v : x)
            v = u(rng);

        auto F = f.counted();
        Rng r(0);
        const auto s = descend_step(initial_state(cfg, x), F, cfg, r);

        auto G = f.counted();
        const auto g = classical_gradient_fd(G, x, cfg.fd_step);
        for (std::size_t i = 0; i < 6; ++i)
            EXPECT_NEAR(s.x[i], x[i] - cfg.alpha0 * g[i], 1e-10) << name;
    }
}

TEST(DescendStep, NotADescentMethod) {
    int increases = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto F = counted(well);
        auto cfg = config(1, 2.0, 1.0, 0.95);
        Rng rng(seed);
        auto s = initial_state(cfg, std::vector<double>{1.0});
        s.record(F(s.x));
        for (int k = 0; k < 50; ++k) {
            const double before = s.f_x;
            s = descend_step(std::move(s), F, cfg, rng);
            if (s.f_x > before)
                ++increases;
        }
    }
    EXPECT_GE(increases, 1);
}

// ----------------------------------------------------------------- optimize

TEST(Optimize, StartsAtMinimizer) {
    auto F = counted(sphere);
    auto cfg = config(3, 1.0, 1.0, 0.5);
    const auto r = optimize(F, cfg, std::vector<double>(3, 0.0), 11);
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.mode, SuccessMode::accuracy);
    EXPECT_EQ(r.evals_used, 1u);
    EXPECT_EQ(r.iterations, 0u);
    EXPECT_EQ(r.best_f, 0.0);
    EXPECT_EQ(r.seed, 11u);
}

TEST(Optimize, EllipsoidalTableOneSettings) {
    const auto f = bench::make_function("elp", 20);
    auto F = f.counted();
    auto cfg = config(20, 0.4, 38.0, 0.86);
    Rng rng(12);
    const auto x0 = bench::initial_point(20, rng);
    const auto r = optimize(F, cfg, x0, rng, f.basin);
    EXPECT_TRUE(r.success);
    EXPECT_LT(r.best_f, 1e-20);
    EXPECT_LT(r.evals_used, 20000u);
    EXPECT_GT(r.evals_used, 1000u);
}

TEST(Optimize, RejectsBadConfigBeforeEvaluating) {
    auto F = counted(sphere);
    auto cfg = config(2, 1.0, 1.0, 1.0);
    EXPECT_THROW(optimize(F, cfg, std::vector<double>{1.0, 1.0}, 1), std::invalid_argument);
    cfg.beta = 1.5;
    EXPECT_THROW(optimize(F, cfg, std::vector<double>{1.0, 1.0}, 1), std::invalid_argument);
    EXPECT_EQ(F.count(), 0u);
}

TEST(Optimize, NeverExceedsBudget) {
    for (const auto& name : bench::function_names()) {
        const auto f = bench::make_function(name, 5);
        for (std::uint64_t budget : {1u, 2u, 6u, 7u, 13u, 100u, 1001u, 5000u}) {
            auto F = f.counted();
            auto cfg = config(5, 1.0, 1.0, 0.99);
            cfg.max_evals = budget;
            Rng rng(budget);
            const auto x0 = bench::initial_point(5, rng);
            const auto r = optimize(F, cfg, x0, rng, f.basin);
            EXPECT_LE(r.evals_used, budget) << name;
            EXPECT_EQ(r.evals_used, F.count()) << name;
        }
    }
}

TEST(Optimize, StalledRunsStillRespectBudget) {
    auto F = counted([](std::span<const double>) { return 1.0; });
    auto cfg = config(4, 1.0, 1.0, 0.9);
    cfg.max_evals = 500;
    const auto r = optimize(F, cfg, std::vector<double>(4, 1.0), 3);
    EXPECT_LE(r.evals_used, 500u);
    EXPECT_FALSE(r.success);
}

TEST(Optimize, BudgetIsPerRun) {
    const auto f = bench::make_function("rtg", 4);
    auto F = f.counted();
    auto cfg = config(4, 1.0, 1.0, 0.99);
    cfg.max_evals = 300;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto r = optimize(F, cfg, std::vector<double>(4, -7.0), seed);
        EXPECT_LE(r.evals_used, 300u);
        EXPECT_GT(r.evals_used, 250u);
    }
}

TEST(Optimize, Deterministic) {
    const auto f = bench::make_function("rrtg", 10);
    auto cfg = config(10, 30.0, 0.5, 0.999);
    cfg.max_evals = 20000;
    Rng init(13);
    const auto x0 = bench::initial_point(10, init);
    auto F1 = f.counted();
    auto F2 = f.counted();
    const auto a = optimize(F1, cfg, x0, 99, f.basin);
    const auto b = optimize(F2, cfg, x0, 99, f.basin);
    EXPECT_EQ(a, b);
    auto F3 = f.counted();
    EXPECT_NE(optimize(F3, cfg, x0, 100, f.basin).best_x, a.best_x);
}

TEST(Optimize, BasinSuccess) {
    const auto f = bench::make_function("ros", 2);
    auto F = f.counted();
    auto cfg = config(2, 0.1, 0.1, 0.99);
    cfg.max_evals = 50;
    const auto r = optimize(F, cfg, std::vector<double>{1.1, 1.1}, 1, f.basin);
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.mode, SuccessMode::basin);
}

// ----------------------------------------------------------- golden section

TEST(GoldenSection, Examples) {
    EXPECT_NEAR(golden_section([](double t) { return (t - 2) * (t - 2); }, 0.0, 5.0, 1e-6), 2.0,
                1e-6);
    EXPECT_NEAR(golden_section([](double t) { return t; }, 0.0, 1.0, 1e-6), 0.0, 1e-6);

    // oracle: grid search, coarse pass then 1e-7 resolution around the winner
    auto phi = [](double t) { return std::cos(t); };
    const double two_pi = 2.0 * std::numbers::pi;
    double best = 0.0;
    for (double t = 0.0; t <= two_pi; t += 1e-3)
        if (phi(t) < phi(best))
            best = t;
    double fine = best;
    for (double t = best - 1e-3; t <= best + 1e-3; t += 1e-7)
        if (phi(t) < phi(fine))
            fine = t;
    EXPECT_NEAR(golden_section(phi, 0.0, two_pi, 1e-6), fine, 1e-5);
    EXPECT_NEAR(fine, std::numbers::pi, 1e-5);
}

TEST(GoldenSection, EvaluationBudget) {
    for (int iters : {1, 5, 30, 100}) {
        int calls = 0;
        auto phi = [&](double t) {
            ++calls;
            return std::sin(3.0 * t) + t * t;
        };
        const auto r = golden_section_search(phi, -2.0, 2.0, 1e-14, iters);
        EXPECT_LE(calls, iters + 2);
        EXPECT_EQ(r.evals, calls);
    }
}

TEST(GoldenSection, Errors) {
    auto phi = [](double t) { return t * t; };
    EXPECT_THROW(golden_section(phi, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(golden_section(phi, 0.0, 1.0, 0.0), std::invalid_argument);
    EXPECT_THROW(golden_section(phi, 0.0, 1.0, 1e-6, 0), std::invalid_argument);
    EXPECT_THROW(golden_section([](double) { return std::nan(""); }, 0.0, 1.0), std::domain_error);
    EXPECT_THROW(golden_section([](double t) { return 1.0 / (t - 0.5 + 0.5 - t); }, 0.0, 1.0),
                 std::domain_error);
}

// -------------------------------------------------------- steepest descent

TEST(SteepestDescent, Sphere) {
    auto F = counted(sphere);
    SteepestDescentConfig cfg;
    const auto r = steepest_descent(F, std::vector<double>{3.0, 4.0}, cfg);
    EXPECT_LT(r.best_f, 1e-10);
    EXPECT_LT(r.iterations, 100u);
    EXPECT_LE(r.evals_used, cfg.max_evals);
}

TEST(SteepestDescent, DoubleWellIsTrapped) {
    auto F = counted(well);
    SteepestDescentConfig cfg;
    cfg.target = -std::numeric_limits<double>::infinity();
    const auto r = steepest_descent(F, std::vector<double>{1.0}, cfg);
    EXPECT_LT(std::abs(r.best_x[0]), 0.01);
    EXPECT_NEAR(r.best_f, bench::double_well(0.0), 1e-3);
}

TEST(SteepestDescent, MonotoneOnRosenbrock) {
    auto F = counted(bench::rosenbrock);
    SteepestDescentConfig cfg;
    cfg.max_evals = 200000;
    std::vector<double> trace;
    const auto r = steepest_descent(F, std::vector<double>{-1.2, 1.0}, cfg, {}, &trace);
    ASSERT_GE(trace.size(), 10u);
    for (std::size_t k = 1; k < trace.size(); ++k)
        EXPECT_LE(trace[k], trace[k - 1]);
    EXPECT_LT(r.best_f, 24.2);
    EXPECT_LE(r.evals_used, cfg.max_evals);
}

TEST(SteepestDescent, Budget) {
    const auto f = bench::make_function("rtg", 20);
    for (std::uint64_t budget : {1u, 50u, 500u, 5000u}) {
        auto F = f.counted();
        SteepestDescentConfig cfg;
        cfg.max_evals = budget;
        const auto r = steepest_descent(F, std::vector<double>(20, -7.3), cfg);
        EXPECT_LE(r.evals_used, budget);
    }
}
