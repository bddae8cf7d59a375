// imcmc: run experiment suites, print exact oracle values, dump trajectories.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "imcmc/errors.hpp"
#include "imcmc/suite.hpp"

namespace {

const imcmc::ExperimentSpec& pick(const imcmc::ExperimentSuite& suite, const std::string& name) {
    if (suite.experiments.empty()) throw imcmc::ValidationError("experiments", "suite has no experiments");
    if (name.empty()) return suite.experiments.front();
    for (const auto& e : suite.experiments) {
        if (e.name == name) return e;
    }
    throw imcmc::ValidationError("experiment", "no experiment named '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interacting tempering simulation lab"};
    app.require_subcommand(1);

    std::string config;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string out;
    std::string experiment;

    auto* run = app.add_subcommand("run", "Run every experiment in a suite");
    run->add_option("--config", config, "Suite JSON file")->required();
    run->add_option("--seed", seed, "Override the suite master seed");
    run->add_option("--threads", threads, "Worker threads (default: IMCMC_THREADS or all cores)");
    run->add_option("--out", out, "Override the output directory");

    auto* oracle = app.add_subcommand("oracle", "Print the exact variance report for one experiment");
    oracle->add_option("--config", config, "Suite JSON file")->required();
    oracle->add_option("--experiment", experiment, "Experiment name (default: first)");
    oracle->add_option("--out", out, "Write the report here instead of stdout");
    double alpha = 0.25;
    oracle->add_option("--alpha", alpha, "V exponent for the perturbation bounds");

    auto* simulate = app.add_subcommand("simulate", "Dump one trajectory as CSV");
    simulate->add_option("--config", config, "Suite JSON file (finite targets)");
    simulate->add_option("--experiment", experiment, "Experiment name (default: first)");
    simulate->add_option("--seed", seed, "Seed (default: the experiment's)");
    simulate->add_option("--out", out, "Write the CSV here instead of stdout");
    std::string target;
    std::size_t dim = 1;
    std::uint64_t steps = 1000;
    double epsilon = 0.3;
    double beta = 0.5;
    simulate->add_option("--target", target, "Continuous target: std_gaussian or gaussian_mixture");
    simulate->add_option("--dim", dim, "Dimension of the continuous target");
    simulate->add_option("--steps", steps, "Steps for the continuous run");
    simulate->add_option("--epsilon", epsilon, "Interaction probability for the continuous run");
    simulate->add_option("--beta", beta, "Tempering exponent for the continuous run");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            imcmc::ExperimentSuite suite = imcmc::load_suite(config, &std::cerr);
            if (seed) suite.master_seed = *seed;
            if (!out.empty()) suite.output_dir = out;
            return imcmc::run_suite(suite, {threads, &std::cout});
        }

        std::ofstream file;
        std::ostream* os = &std::cout;
        if (!out.empty()) {
            file.open(out, std::ios::binary);
            if (!file) {
                std::cerr << "error: cannot write " << out << "\n";
                return 2;
            }
            os = &file;
        }

        if (*oracle) {
            const imcmc::ExperimentSuite suite = imcmc::load_suite(config, &std::cerr);
            const imcmc::ExperimentSpec& spec = pick(suite, experiment);
            *os << imcmc::oracle_report_json(spec.config, spec.f, alpha);
            return 0;
        }

        if (!target.empty()) {
            imcmc::ContinuousITConfig cfg;
            cfg.target = imcmc::make_continuous_target(target, dim, beta, 0.5);
            cfg.epsilon = epsilon;
            cfg.n_steps = steps;
            cfg.seed = seed.value_or(0);
            cfg.x0.assign(dim, 0.0);
            cfg.y0.assign(dim, 0.0);
            imcmc::write_trajectory_csv(*os, imcmc::run_it_chain(cfg));
            return 0;
        }
        if (config.empty()) {
            std::cerr << "error: simulate needs --config or --target\n";
            return 2;
        }
        const imcmc::ExperimentSuite suite = imcmc::load_suite(config, &std::cerr);
        imcmc::ITConfig cfg = pick(suite, experiment).config;
        cfg.seed = seed.value_or(pick(suite, experiment).effective_seed(suite.master_seed));
        imcmc::write_trajectory_csv(*os, imcmc::run_it_chain(cfg));
        return 0;
    } catch (const imcmc::ValidationError& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
