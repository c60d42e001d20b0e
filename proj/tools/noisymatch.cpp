// noisymatch: batch front-end for noisy stable-matching experiments.
//
// Exit codes: 0 success, 1 runtime error, 2 parse/usage error, 3 market invariant violated.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "noisymatch/config.hpp"
#include "noisymatch/cutoffs.hpp"
#include "noisymatch/errors.hpp"
#include "noisymatch/format.hpp"
#include "noisymatch/noise.hpp"
#include "noisymatch/run.hpp"

namespace nm = noisymatch;

namespace {

struct RunArgs {
    std::string preset;
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> replications;
    std::optional<std::int64_t> colleges;
    std::optional<std::string> noise;
    unsigned threads = 0;
    std::string out_dir = "out";
    bool emit_cutoffs = false;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw nm::ConfigError(path, "cannot read config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nm::RunSpec build_spec(const RunArgs& args) {
    if (args.preset.empty() == args.config_path.empty()) {
        throw nm::ConfigError("--preset/--config", "give exactly one of --preset or --config");
    }
    nlohmann::json doc = args.preset.empty() ? nm::parse_config_text(read_file(args.config_path), args.config_path)
                                             : nm::preset(args.preset);
    // Shorthand flags first, so an explicit --set always has the last word.
    if (args.noise) nm::set_noise(doc, nm::named_noise(*args.noise));
    if (args.colleges) nm::set_college_count(doc, *args.colleges);
    if (args.seed) doc["master_seed"] = *args.seed;
    if (args.replications) doc["experiment"]["replications"] = *args.replications;
    for (const auto& o : args.overrides) nm::apply_override(doc, o);
    nm::RunSpec spec = nm::parse_run_spec(doc);
    spec.plan.threads = args.threads;
    return spec;
}

int cmd_run(const RunArgs& args) {
    const nm::RunSpec spec = build_spec(args);
    const auto out = nm::run_experiment(spec, args.out_dir, args.emit_cutoffs);
    for (const auto& w : out.manifest["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
    std::cout << "config_hash " << out.manifest["config_hash"].get<std::string>() << '\n';
    for (const auto& f : out.manifest["outputs"]) std::cout << "wrote " << args.out_dir << '/' << f.get<std::string>() << '\n';
    return 0;
}

int cmd_config(const RunArgs& args) {
    const nm::RunSpec spec = build_spec(args);
    std::cout << nm::canonical_json(spec).dump(2) << '\n';
    std::cout << "config_hash " << nm::config_hash(spec) << '\n';
    return 0;
}

int cmd_tail(const std::string& noise_name, const std::vector<std::string>& params, std::uint64_t seed) {
    nlohmann::json j{{"kind", noise_name}};
    for (const auto& p : params) nm::apply_override(j, p);
    const nm::NoiseSpec spec = nm::noise_from_json(j, "noise");
    nm::Rng rng(nm::derive_seed(seed, 0, nm::StreamTag::diagnostics));
    const nm::TailThresholds thresholds;
    const auto report = nm::tail_report(spec, thresholds, rng);
    std::cout << "noise " << nm::describe(spec) << '\n';
    std::cout << "beta_hat " << nm::format_double(report.beta_hat) << '\n';
    std::cout << "beta_stderr " << nm::format_double(report.beta_stderr) << '\n';
    for (const auto& h : report.hazard_ratios) {
        std::cout << "hazard_ratio x=" << nm::format_double(h.x) << " d=" << thresholds.probe_gap
                  << " ratio=" << nm::format_double(h.ratio) << '\n';
    }
    for (const auto& m : report.max_mean_curve) {
        std::cout << "max n=" << m.n << " mean=" << nm::format_double(m.mean_max)
                  << " var=" << nm::format_double(m.var_max) << '\n';
    }
    std::cout << "classification " << nm::to_string(report.classification) << " (heuristic)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stable matching under noisy college evaluations"};
    app.require_subcommand(1);

    RunArgs args;
    auto add_run_flags = [&](CLI::App* cmd) {
        cmd->add_option("--preset", args.preset, "Built-in experiment: fig1 or fig2");
        cmd->add_option("--config", args.config_path, "JSON config file");
        cmd->add_option("--set", args.overrides, "Override a config key, e.g. n_students=500 (repeatable)");
        cmd->add_option("--seed", args.seed, "Master seed");
        cmd->add_option("--replications", args.replications, "Number of replications");
        cmd->add_option("--colleges", args.colleges, "Colleges per college group");
        cmd->add_option("--noise", args.noise, "Noise for every coalition: uniform, exponential, pareto, gaussian, gumbel, none");
        cmd->add_option("--threads", args.threads, "Worker threads (0 = all cores)");
    };

    auto* run = app.add_subcommand("run", "Run an experiment and write CSV outputs");
    add_run_flags(run);
    run->add_option("--out-dir", args.out_dir, "Output directory");
    run->add_flag("--emit-cutoffs", args.emit_cutoffs, "Write cutoffs.csv");

    auto* config = app.add_subcommand("config", "Print the canonical effective config and its hash");
    add_run_flags(config);

    std::string tail_noise = "uniform";
    std::vector<std::string> tail_params;
    std::uint64_t tail_seed = 1;
    auto* tail = app.add_subcommand("tail", "Tail-regime diagnostics for a noise distribution");
    tail->add_option("noise", tail_noise, "Noise kind")->required();
    tail->add_option("--param", tail_params, "Distribution parameter, e.g. shape=2 (repeatable)");
    tail->add_option("--seed", tail_seed, "Seed");

    double beta = 1.0, gamma = 1.0;
    auto* rate = app.add_subcommand("rate", "Print the attenuation rate exponent K(beta, gamma)");
    rate->add_option("beta", beta)->required();
    rate->add_option("gamma", gamma)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run) return cmd_run(args);
        if (*config) return cmd_config(args);
        if (*tail) return cmd_tail(tail_noise, tail_params, tail_seed);
        if (*rate) {
            std::cout << nm::format_double(nm::rate_exponent(beta, gamma)) << '\n';
            return 0;
        }
    } catch (const nm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const nm::DomainError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return 2;
    } catch (const nm::InvariantError& e) {
        std::cerr << "invariant violated: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
