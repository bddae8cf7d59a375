#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "imcmc/experiments.hpp"
#include "imcmc/it_sampler.hpp"

namespace imcmc {

enum class ExperimentKind { clt, martingale_clt, pi_fluctuation, lln, diagnostics, vstat };

const char* kind_name(ExperimentKind k);

/// One named experiment. Fields beyond `config` and `f` apply to the kinds
/// that use them and keep their defaults otherwise.
struct ExperimentSpec {
    std::string name;
    ExperimentKind kind = ExperimentKind::clt;
    /// config.seed is ignored; the run uses `seed` or the suite master seed.
    ITConfig config;
    std::optional<std::uint64_t> seed;
    FiniteFunction f;

    // clt, martingale_clt, pi_fluctuation; vstat
    std::uint64_t replications = 1000;
    CLTTolerances tolerances;
    // lln, diagnostics, vstat
    std::vector<std::uint64_t> n_grid;
    // lln: seeds averaged and pass band |avg - sigma^2| <= relative_tolerance * sigma^2
    std::uint64_t seeds = 20;
    double relative_tolerance = 0.10;
    // diagnostics
    double alpha = 0.25;
    std::uint64_t l_refresh = 100;
    // vstat: pass iff fitted slope <= max_slope (default -k + 0.3)
    int k_order = 1;
    std::optional<double> max_slope;

    std::uint64_t effective_seed(std::uint64_t master_seed) const { return seed.value_or(master_seed); }

    friend bool operator==(const ExperimentSpec& a, const ExperimentSpec& b);
};

struct ExperimentSuite {
    std::vector<ExperimentSpec> experiments;
    std::string output_dir = ".";
    std::uint64_t master_seed = 0;

    friend bool operator==(const ExperimentSuite&, const ExperimentSuite&) = default;
};

/// Parses and validates a suite document. Every nested config is checked
/// eagerly; failures raise ValidationError naming the field. A missing
/// master_seed defaults to 0 with a warning on `log` (if non-null).
ExperimentSuite parse_suite(const std::string& text, std::ostream* log = nullptr,
                            const std::string& source = "suite");
/// Reads `path` and parses it; I/O failures raise ValidationError(path, ...).
ExperimentSuite load_suite(const std::string& path, std::ostream* log = nullptr);

/// Serializes a suite so that parse_suite(suite_to_json(s)) == s.
std::string suite_to_json(const ExperimentSuite& suite);

/// Outcome of one experiment.
struct ExperimentResult {
    std::string name;
    ExperimentKind kind = ExperimentKind::clt;
    bool pass = false;
    /// One-line human summary of the deciding statistic.
    std::string summary;
    VarianceReport oracle;
    std::optional<CLTReport> clt;
    std::vector<DiagnosticSeries> series;
};

ExperimentResult run_experiment(const ExperimentSpec& spec, std::uint64_t master_seed, int threads = 0);

/// Report JSON with "schema": "1".
std::string report_json(const ExperimentResult& r, std::uint64_t seed);
/// CSV: "replication,sum" for CLT kinds, "series,n,value" otherwise. Numbers as %.17g.
std::string sums_csv(const ExperimentResult& r);

struct SuiteRunOptions {
    int threads = 0;
    std::ostream* out = nullptr;
};

/// Runs every experiment, writes {output_dir}/{name}.report.json and
/// {name}.sums.csv, prints a summary table, and returns 0 iff all pass.
/// I/O failures return 2.
int run_suite(const ExperimentSuite& suite, const SuiteRunOptions& opt = {});

/// Oracle report {sigma_sq, gamma_tilde_sq, total, residuals: {poisson, linearization}, bounds: [...]}.
/// Residuals and bounds are evaluated at theta = (theta* + uniform) / 2.
std::string oracle_report_json(const ITConfig& cfg, const FiniteFunction& f, double alpha = 0.25);

/// CSV trajectory dumps: "step,x_state,y_state" and "step,x_0..,y_0..".
void write_trajectory_csv(std::ostream& os, const Trajectory& t);
void write_trajectory_csv(std::ostream& os, const ContinuousTrajectory& t);

/// %.17g formatting.
std::string format_double(double x);

}  // namespace imcmc
