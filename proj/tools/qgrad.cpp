// qgrad: run seeded q-gradient / steepest-descent experiments on the
// benchmark functions and report them as csv, json or an aligned table.
//
// Exit codes: 0 success, 1 invalid arguments, 2 I/O failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qgrad/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config-file entries become "--key=value" tokens placed before the real
// arguments; with TakeLast the command line wins.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::vector<std::string> out;
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            ++i;
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            out.push_back(args[i]);
        }
    }
    if (path.empty())
        return out;

    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read config file '" + path + "'");
    std::vector<std::string> tokens;
    for (const auto& [key, value] : qgrad::harness::parse_key_values(in))
        tokens.push_back("--" + key + "=" + value);

    // keep the subcommand first
    std::vector<std::string> merged;
    if (!out.empty() && out.front().rfind("-", 0) != 0) {
        merged.push_back(out.front());
        merged.insert(merged.end(), tokens.begin(), tokens.end());
        merged.insert(merged.end(), out.begin() + 1, out.end());
    } else {
        merged = tokens;
        merged.insert(merged.end(), out.begin(), out.end());
    }
    return merged;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace qgrad;
    using namespace qgrad::harness;

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = expand_config(args);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    CLI::App app{"q-gradient method benchmark runner"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    std::string function;
    std::uint64_t runs = 50;
    double sigma0 = 0.0, alpha0 = 0.0, beta = 0.0;
    std::uint64_t seed = 1;
    std::uint64_t max_evals = 1'000'000;
    double target = 0.0;
    std::size_t dim = 20;
    std::string algorithm = "qgrad";
    std::string format = "table";
    std::string out_path;
    std::string step_norm = "max";
    double fd_step = kDefaultFdStep;
    double sigma_floor = 0.0;
    unsigned threads = 1;
    bool compare = false;

    auto* run = app.add_subcommand("run", "run an experiment");
    run->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    run->add_option("--function", function, "benchmark: elp|sch|ros|ackl|rtg|rrtg")->required();
    run->add_option("--runs", runs, "independent runs")->capture_default_str();
    auto* o_sigma = run->add_option("--sigma0", sigma0, "initial Gaussian std (default: Table 1)");
    auto* o_alpha = run->add_option("--alpha0", alpha0, "initial step length (default: Table 1)");
    auto* o_beta = run->add_option("--beta", beta, "reduction factor (default: Table 1)");
    run->add_option("--seed", seed, "base seed; run r uses seed + r")->capture_default_str();
    run->add_option("--max-evals", max_evals, "evaluation budget per run")->capture_default_str();
    auto* o_target = run->add_option("--target", target, "accuracy target (default 1e-20, Ackley 1e-15)");
    run->add_option("--dim", dim, "problem dimension")->capture_default_str();
    run->add_option("--algorithm", algorithm, "qgrad|sd")->capture_default_str();
    run->add_option("--format", format, "csv|json|table")->capture_default_str();
    run->add_option("--out", out_path, "output file (default stdout)");
    run->add_option("--step-norm", step_norm, "max|l2|none")->capture_default_str();
    run->add_option("--fd-step", fd_step, "classical-limit difference step")->capture_default_str();
    run->add_option("--sigma-floor", sigma_floor, "lower bound on the sampling std")
        ->capture_default_str();
    run->add_option("--threads", threads, "worker threads")->capture_default_str();
    run->add_flag("--compare", compare, "append the published comparison rows");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    ExperimentSpec spec;
    Format fmt;
    try {
        spec.function = function;
        spec.runs = runs;
        spec.base_seed = seed;
        spec.algorithm = parse_algorithm(algorithm);
        spec.threads = threads;
        spec.config = default_config(function, dim);
        if (o_sigma->count())
            spec.config.sigma0 = sigma0;
        if (o_alpha->count())
            spec.config.alpha0 = alpha0;
        if (o_beta->count())
            spec.config.beta = beta;
        if (o_target->count())
            spec.config.target = target;
        spec.config.max_evals = max_evals;
        spec.config.step_norm = parse_step_norm(step_norm);
        spec.config.fd_step = fd_step;
        spec.config.sigma_floor = sigma_floor;
        spec.config.validate();
        if (runs < 1)
            throw std::invalid_argument("--runs must be at least 1");
        fmt = parse_format(format);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    ExperimentSummary summary;
    try {
        summary = run_experiment(spec);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) {
            std::cerr << "error: cannot open output file '" << out_path << "'\n";
            return kExitIo;
        }
    }
    std::ostream& os = out_path.empty() ? std::cout : file;
    try {
        emit(summary, fmt, os);
        if (compare) {
            std::ostream& cmp = fmt == Format::table ? os : std::cerr;
            if (fmt == Format::table)
                cmp << '\n';
            write_comparison(cmp, compare_to_reference(summary, published_results()));
        }
        os.flush();
        if (!os)
            throw std::ios_base::failure("write failed");
    } catch (const std::ios_base::failure&) {
        std::cerr << "error: failed writing to '" << (out_path.empty() ? "stdout" : out_path)
                  << "'\n";
        return kExitIo;
    }
    return kExitOk;
}
