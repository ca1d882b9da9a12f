#pragma once

/**
 * @file harness.hpp
 * @brief Seeded multi-run experiments, summary statistics and reporting.
 *
 * Run r of an experiment owns an RNG seeded with base_seed + r. That RNG
 * draws the starting point uniformly from [-10, -5]^n and then drives the
 * optimizer, so every run is reproducible on its own and the experiment is a
 * pure function of its spec.
 *
 * Summary statistics follow the usual benchmark-table layout: best, median
 * and worst evaluation counts are taken over successful runs only (median of
 * an even count is the lower-middle element), and F(x_best) is the lowest
 * objective value seen in any run.
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qgrad/benchmarks.hpp"
#include "qgrad/optimizer.hpp"

namespace qgrad::harness {

enum class Algorithm { qgradient, steepest_descent };

inline const char* to_string(Algorithm a) {
    return a == Algorithm::steepest_descent ? "sd" : "qgrad";
}

inline Algorithm parse_algorithm(std::string_view s) {
    if (s == "qgrad" || s == "q-gradient")
        return Algorithm::qgradient;
    if (s == "sd" || s == "steepest-descent")
        return Algorithm::steepest_descent;
    throw std::invalid_argument("unknown algorithm '" + std::string(s) +
                                "'; valid: qgrad, sd");
}

inline StepNorm parse_step_norm(std::string_view s) {
    if (s == "max" || s == "max_abs")
        return StepNorm::max_abs;
    if (s == "l2" || s == "euclidean")
        return StepNorm::euclidean;
    if (s == "none")
        return StepNorm::none;
    throw std::invalid_argument("unknown step norm '" + std::string(s) +
                                "'; valid: max, l2, none");
}

struct ExperimentSpec {
    std::string function = "elp";
    std::uint64_t runs = 50;
    QGradientConfig config;
    std::uint64_t base_seed = 1;
    Algorithm algorithm = Algorithm::qgradient;
    SteepestDescentConfig sd;  // max_evals / target / fd_step come from `config`
    unsigned threads = 1;

    [[nodiscard]] std::uint64_t seed_for(std::uint64_t run) const { return base_seed + run; }
};

struct ExperimentSummary {
    std::string function;
    std::string algorithm;
    std::optional<std::uint64_t> best;
    std::optional<std::uint64_t> median;
    std::optional<std::uint64_t> worst;
    std::uint64_t success_count = 0;
    std::uint64_t total_runs = 0;
    double f_best_overall = std::numeric_limits<double>::infinity();
    std::vector<RunResult> per_run;

    bool operator==(const ExperimentSummary&) const = default;
};

/// Aggregates per-run results. Order of `results` does not affect the
/// statistics; per_run keeps the given order.
inline ExperimentSummary summarize(const std::vector<RunResult>& results) {
    if (results.empty())
        throw std::invalid_argument("summarize: no results");
    ExperimentSummary s;
    s.total_runs = results.size();
    s.per_run = results;
    std::vector<std::uint64_t> evals;
    for (const auto& r : results) {
        s.f_best_overall = std::min(s.f_best_overall, r.best_f);
        if (r.success) {
            ++s.success_count;
            evals.push_back(r.evals_used);
        }
    }
    if (!evals.empty()) {
        std::sort(evals.begin(), evals.end());
        s.best = evals.front();
        s.median = evals[(evals.size() - 1) / 2];
        s.worst = evals.back();
    }
    return s;
}

/// Table 1 settings for the registered functions, with the accuracy target
/// (1e-15 for Ackley, whose double-precision value at the origin is -4.4e-16).
inline QGradientConfig default_config(std::string_view function, std::size_t dim = 20) {
    QGradientConfig c;
    c.dim = dim;
    if (function == "elp") {
        c.sigma0 = 0.4; c.alpha0 = 38.0; c.beta = 0.86;
    } else if (function == "sch") {
        c.sigma0 = 0.1; c.alpha0 = 1.0; c.beta = 0.997;
    } else if (function == "ros") {
        c.sigma0 = 0.1; c.alpha0 = 0.1; c.beta = 0.9995;
    } else if (function == "ackl") {
        c.sigma0 = 20.0; c.alpha0 = 12.0; c.beta = 0.90;
        c.target = 1e-15;
    } else if (function == "rtg") {
        c.sigma0 = 21.0; c.alpha0 = 0.3; c.beta = 0.9995;
    } else if (function == "rrtg") {
        c.sigma0 = 30.0; c.alpha0 = 0.5; c.beta = 0.999;
    } else {
        throw std::invalid_argument("unknown function '" + std::string(function) +
                                    "'; valid names: " + bench::joined_function_names());
    }
    return c;
}

inline RunResult run_single(const ExperimentSpec& spec, const bench::ObjectiveFunction& f,
                            std::uint64_t run) {
    const std::uint64_t seed = spec.seed_for(run);
    Rng rng(seed);
    const Vector x0 = bench::initial_point(f.dim, rng);
    auto F = f.counted();
    RunResult r;
    if (spec.algorithm == Algorithm::qgradient) {
        r = optimize(F, spec.config, x0, rng, f.basin);
    } else {
        SteepestDescentConfig sd = spec.sd;
        sd.max_evals = spec.config.max_evals;
        sd.target = spec.config.target;
        sd.fd_step = spec.config.fd_step;
        r = steepest_descent(F, x0, sd, f.basin);
    }
    r.seed = seed;
    return r;
}

inline ExperimentSummary run_experiment(const ExperimentSpec& spec) {
    if (spec.runs < 1)
        throw std::invalid_argument("run_experiment: runs must be at least 1");
    const bench::ObjectiveFunction f = bench::make_function(spec.function, spec.config.dim);
    spec.config.validate();

    std::vector<RunResult> results(spec.runs);
    const unsigned workers =
        static_cast<unsigned>(std::clamp<std::uint64_t>(spec.threads, 1, spec.runs));
    if (workers == 1) {
        for (std::uint64_t r = 0; r < spec.runs; ++r)
            results[r] = run_single(spec, f, r);
    } else {
        std::atomic<std::uint64_t> next{0};
        std::vector<std::exception_ptr> errors(workers);
        {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < workers; ++w)
                pool.emplace_back([&, w] {
                    try {
                        for (std::uint64_t r = next++; r < spec.runs; r = next++)
                            results[r] = run_single(spec, f, r);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
        }
        for (auto& e : errors)
            if (e)
                std::rethrow_exception(e);
    }

    ExperimentSummary s = summarize(results);
    s.function = spec.function;
    s.algorithm = to_string(spec.algorithm);
    return s;
}

/// Reads a flat `key = value` file. Blank lines and lines starting with '#'
/// are skipped; keys may be written with or without a leading "--".
inline std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in) {
    auto trim = [](std::string t) {
        const auto b = t.find_first_not_of(" \t\r");
        if (b == std::string::npos)
            return std::string();
        const auto e = t.find_last_not_of(" \t\r");
        return t.substr(b, e - b + 1);
    };
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line.front() == '#')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        while (!key.empty() && key.front() == '-')
            key.erase(key.begin());
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Published reference rows

struct ReferenceRow {
    std::string function;
    std::string method;
    std::optional<std::uint64_t> best;  // nullopt where the table reports 10^6
    std::optional<std::uint64_t> median;
    std::optional<std::uint64_t> worst;
    double f_best = 0.0;
    std::uint64_t success = 0;
    std::uint64_t runs = 0;  // 0 when the table gives no denominator
};

struct ReferenceParams {
    std::string function;
    double sigma0, alpha0, beta;
};

struct ReferenceTable {
    std::vector<ReferenceRow> rows;
    std::vector<ReferenceParams> params;

    [[nodiscard]] std::vector<ReferenceRow> rows_for(std::string_view function) const {
        std::vector<ReferenceRow> out;
        for (const auto& r : rows)
            if (r.function == function)
                out.push_back(r);
        return out;
    }

    [[nodiscard]] const ReferenceRow& find(std::string_view function,
                                           std::string_view method) const {
        for (const auto& r : rows)
            if (r.function == function && r.method == method)
                return r;
        throw std::invalid_argument("no reference row for " + std::string(function) + " / " +
                                    std::string(method));
    }
};

inline const ReferenceTable& published_results() {
    using U = std::optional<std::uint64_t>;
    const U none;
    static const ReferenceTable table{
        {
            {"elp", "G3-PCX", U{5826}, U{6800}, U{7728}, 1e-20, 10, 10},
            {"elp", "SPC-vSBX", U{49084}, U{50952}, U{57479}, 1e-20, 10, 10},
            {"elp", "SPC-PNX", U{36360}, U{39360}, U{40905}, 1e-20, 10, 10},
            {"elp", "q-Gradient", U{5905}, U{7053}, U{7381}, 1e-20, 50, 50},
            {"sch", "G3-PCX", U{13988}, U{15602}, U{17188}, 1e-20, 10, 10},
            {"sch", "SPC-vSBX", U{260442}, U{294231}, U{334743}, 1e-20, 10, 10},
            {"sch", "SPC-PNX", U{236342}, U{283321}, U{299301}, 1e-20, 10, 10},
            {"sch", "q-Gradient", U{289174}, U{296103}, U{299178}, 1e-20, 50, 50},
            {"ros", "G3-PCX", U{16508}, U{21452}, U{25520}, 1e-20, 36, 50},
            {"ros", "SPC-vSBX", none, none, none, 1e-4, 48, 50},
            {"ros", "SPC-PNX", none, none, none, 1e-10, 38, 50},
            {"ros", "q-Gradient", none, none, none, 1e-10, 50, 50},
            {"ackl", "G3-PCX", none, none, none, 3.959, 0, 0},
            {"ackl", "SPC-vSBX", U{57463}, U{63899}, U{65902}, 1e-10, 10, 10},
            {"ackl", "SPC-PNX", U{45736}, U{48095}, U{49392}, 1e-10, 10, 10},
            {"ackl", "q-Gradient", U{11850}, U{12465}, U{13039}, 1e-15, 50, 50},
            {"rtg", "G3-PCX", none, none, none, 15.936, 0, 0},
            {"rtg", "SPC-vSBX", U{260685}, U{306819}, U{418482}, 1e-20, 6, 10},
            {"rtg", "SPC-PNX", none, none, none, 4.975, 0, 0},
            {"rtg", "q-Gradient", U{676050}, U{692450}, U{705037}, 1e-20, 48, 50},
            {"rrtg", "G3-PCX", none, none, none, 309.429, 0, 0},
            {"rrtg", "SPC-vSBX", none, none, none, 8.955, 0, 0},
            {"rrtg", "SPC-PNX", none, none, none, 3.980, 0, 0},
            {"rrtg", "q-Gradient", U{541857}, U{545957}, U{549114}, 1e-20, 20, 50},
        },
        {
            {"elp", 0.4, 38.0, 0.86},
            {"sch", 0.1, 1.0, 0.997},
            {"ros", 0.1, 0.1, 0.9995},
            {"ackl", 20.0, 12.0, 0.90},
            {"rtg", 21.0, 0.3, 0.9995},
            {"rrtg", 30.0, 0.5, 0.999},
        },
    };
    return table;
}

inline std::string success_text(std::uint64_t count, std::uint64_t runs) {
    if (runs == 0)
        return std::to_string(count);
    return std::to_string(count) + "/" + std::to_string(runs);
}

// ---------------------------------------------------------------------------
// Comparison report

struct ComparisonRow {
    std::string method;
    std::optional<std::uint64_t> best, median, worst;
    double f_best = 0.0;
    std::string success;
    // ours / reference, when both sides have a count
    std::optional<double> best_ratio, median_ratio, worst_ratio;
};

struct ComparisonReport {
    std::string function;
    std::vector<ComparisonRow> rows;  // first row is ours
};

inline ComparisonReport compare_to_reference(const ExperimentSummary& summary,
                                             const ReferenceTable& reference) {
    const auto refs = reference.rows_for(summary.function);
    if (refs.empty())
        throw std::invalid_argument("no reference rows for function '" + summary.function + "'");

    auto ratio = [](const std::optional<std::uint64_t>& ours,
                    const std::optional<std::uint64_t>& theirs) -> std::optional<double> {
        if (!ours || !theirs || *theirs == 0)
            return std::nullopt;
        return static_cast<double>(*ours) / static_cast<double>(*theirs);
    };

    ComparisonReport rep;
    rep.function = summary.function;
    rep.rows.push_back({std::string("this run (") + summary.algorithm + ")", summary.best,
                        summary.median, summary.worst, summary.f_best_overall,
                        success_text(summary.success_count, summary.total_runs), {}, {}, {}});
    for (const auto& r : refs) {
        ComparisonRow row{r.method, r.best, r.median, r.worst, r.f_best,
                          success_text(r.success, r.runs), ratio(summary.best, r.best),
                          ratio(summary.median, r.median), ratio(summary.worst, r.worst)};
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Output

enum class Format { csv, json, table };

inline Format parse_format(std::string_view s) {
    if (s == "csv")
        return Format::csv;
    if (s == "json")
        return Format::json;
    if (s == "table")
        return Format::table;
    throw std::invalid_argument("unknown format '" + std::string(s) + "'; valid: csv, json, table");
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    std::string s = os.str();
    for (int p = 1; p < 17; ++p) {
        std::ostringstream t;
        t << std::setprecision(p) << v;
        if (std::stod(t.str()) == v)
            return t.str();
    }
    return s;
}

inline std::string format_count(const std::optional<std::uint64_t>& v) {
    return v ? std::to_string(*v) : "-";
}

inline void write_csv(std::ostream& os, const ExperimentSummary& s) {
    os << "seed,evals_used,best_f,success,iterations\n";
    for (const auto& r : s.per_run)
        os << r.seed << ',' << r.evals_used << ',' << format_double(r.best_f) << ','
           << (r.success ? 1 : 0) << ',' << r.iterations << '\n';
    // summary row: median evaluations, best F overall, success ratio
    os << "summary," << (s.median ? std::to_string(*s.median) : "") << ','
       << format_double(s.f_best_overall) << ',' << s.success_count << '/' << s.total_runs
       << ",\n";
}

namespace detail {

inline nlohmann::json number_or_null(double v) {
    if (std::isfinite(v))
        return v;
    return nullptr;
}

inline double number_from(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

inline nlohmann::json count_or_null(const std::optional<std::uint64_t>& v) {
    if (v)
        return *v;
    return nullptr;
}

inline std::optional<std::uint64_t> count_from(const nlohmann::json& j) {
    if (j.is_null())
        return std::nullopt;
    return j.get<std::uint64_t>();
}

inline SuccessMode parse_mode(const std::string& s) {
    if (s == "accuracy")
        return SuccessMode::accuracy;
    if (s == "basin")
        return SuccessMode::basin;
    return SuccessMode::none;
}

}  // namespace detail

inline nlohmann::json to_json(const RunResult& r) {
    return {{"seed", r.seed},
            {"evals_used", r.evals_used},
            {"best_f", detail::number_or_null(r.best_f)},
            {"best_x", r.best_x},
            {"success", r.success},
            {"mode", to_string(r.mode)},
            {"iterations", r.iterations}};
}

inline nlohmann::json to_json(const ExperimentSummary& s) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : s.per_run)
        runs.push_back(to_json(r));
    return {{"function", s.function},
            {"algorithm", s.algorithm},
            {"best", detail::count_or_null(s.best)},
            {"median", detail::count_or_null(s.median)},
            {"median_convention", "lower-middle over successful runs"},
            {"worst", detail::count_or_null(s.worst)},
            {"success_count", s.success_count},
            {"total_runs", s.total_runs},
            {"f_best_overall", detail::number_or_null(s.f_best_overall)},
            {"per_run", std::move(runs)}};
}

inline RunResult run_from_json(const nlohmann::json& j) {
    RunResult r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.evals_used = j.at("evals_used").get<std::uint64_t>();
    r.best_f = detail::number_from(j.at("best_f"));
    r.best_x = j.at("best_x").get<Vector>();
    r.success = j.at("success").get<bool>();
    r.mode = detail::parse_mode(j.at("mode").get<std::string>());
    r.iterations = j.at("iterations").get<std::uint64_t>();
    return r;
}

inline ExperimentSummary summary_from_json(const nlohmann::json& j) {
    ExperimentSummary s;
    s.function = j.at("function").get<std::string>();
    s.algorithm = j.at("algorithm").get<std::string>();
    s.best = detail::count_from(j.at("best"));
    s.median = detail::count_from(j.at("median"));
    s.worst = detail::count_from(j.at("worst"));
    s.success_count = j.at("success_count").get<std::uint64_t>();
    s.total_runs = j.at("total_runs").get<std::uint64_t>();
    s.f_best_overall = detail::number_from(j.at("f_best_overall"));
    for (const auto& r : j.at("per_run"))
        s.per_run.push_back(run_from_json(r));
    return s;
}

inline void write_json(std::ostream& os, const ExperimentSummary& s) {
    os << to_json(s).dump(2) << '\n';
}

namespace detail {

inline void write_row(std::ostream& os, const std::vector<std::string>& cells,
                      const std::vector<std::size_t>& widths) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        os << std::left << std::setw(static_cast<int>(widths[i]) + 2) << cells[i];
    }
    os << '\n';
}

inline void write_grid(std::ostream& os, const std::vector<std::vector<std::string>>& grid) {
    std::vector<std::size_t> widths(grid.front().size(), 0);
    for (const auto& row : grid)
        for (std::size_t i = 0; i < row.size(); ++i)
            widths[i] = std::max(widths[i], row[i].size());
    std::size_t total = 0;
    for (auto w : widths)
        total += w + 2;
    write_row(os, grid.front(), widths);
    os << std::string(total, '-') << '\n';
    for (std::size_t r = 1; r < grid.size(); ++r)
        write_row(os, grid[r], widths);
}

inline std::string short_double(double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
}

}  // namespace detail

inline void write_table(std::ostream& os, const ExperimentSummary& s) {
    std::vector<std::vector<std::string>> grid{
        {"Function", "Method", "Best", "Median", "Worst", "F(x_best)", "Success"},
        {s.function, s.algorithm, format_count(s.best), format_count(s.median),
         format_count(s.worst), detail::short_double(s.f_best_overall),
         success_text(s.success_count, s.total_runs)}};
    detail::write_grid(os, grid);
}

inline void write_comparison(std::ostream& os, const ComparisonReport& rep) {
    auto ratio = [](const std::optional<double>& r) {
        if (!r)
            return std::string("-");
        std::ostringstream t;
        t << std::fixed << std::setprecision(2) << *r;
        return t.str();
    };
    std::vector<std::vector<std::string>> grid{{"Function", "Method", "Best", "Median", "Worst",
                                                "F(x_best)", "Success", "Best/ref",
                                                "Median/ref", "Worst/ref"}};
    for (const auto& r : rep.rows)
        grid.push_back({rep.function, r.method, format_count(r.best), format_count(r.median),
                        format_count(r.worst), detail::short_double(r.f_best), r.success,
                        ratio(r.best_ratio), ratio(r.median_ratio), ratio(r.worst_ratio)});
    detail::write_grid(os, grid);
}

inline void emit(const ExperimentSummary& s, Format format, std::ostream& os) {
    switch (format) {
        case Format::csv: write_csv(os, s); break;
        case Format::json: write_json(os, s); break;
        case Format::table: write_table(os, s); break;
    }
    if (!os)
        throw std::ios_base::failure("write failed");
}

}  // namespace qgrad::harness
