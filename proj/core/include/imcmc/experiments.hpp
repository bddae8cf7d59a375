#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "imcmc/exact_oracle.hpp"
#include "imcmc/it_sampler.hpp"

namespace imcmc {

/// Thread budget: `requested` if positive, else IMCMC_THREADS if set and
/// positive, else the hardware concurrency (at least 1).
int resolve_threads(int requested = 0);

/// Runs body(i) for i in [0, n) on at most `threads` workers pulling from a
/// shared counter. Which worker runs an index never affects its result, since
/// every index owns its RNG stream. The first exception is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

struct CLTTolerances {
    /// Pass band for empirical / predicted variance: [1 - band, 1 + band].
    double variance_band = 0.15;
    /// KS critical value is ks_coefficient / sqrt(R) (1.63: the 1% level).
    double ks_coefficient = 1.63;
};

struct ExperimentOptions {
    int threads = 0;
    CLTTolerances tolerances;
};

struct CLTReport {
    std::uint64_t n_steps = 0;
    std::uint64_t n_replications = 0;
    double predicted_variance = 0.0;
    double empirical_variance = 0.0;
    /// empirical / predicted; NaN on the degenerate path.
    double variance_ratio = 0.0;
    /// KS distance of sums / sqrt(predicted) to N(0, 1); NaN on the degenerate path.
    double ks_distance = 0.0;
    double ks_critical = 0.0;
    /// predicted == 0: passes iff every sum is exactly zero.
    bool degenerate = false;
    bool pass = false;
    std::vector<double> per_replication_sums;
};

/// Applies the pass rule to replication sums. Throws InconsistencyError
/// when predicted == 0 but some |sum| exceeds 1e-9.
CLTReport make_clt_report(std::vector<double> sums, double predicted, std::uint64_t n_steps,
                          const CLTTolerances& tol = {});

/// Per-replication values of
///   total       n^{-1/2} sum_k (f(X_k) - pi*(f))
///   martingale  n^{-1/2} sum_k (f(X_k) - pi_{theta}(f))   theta = kernel that produced X_k
///   fluctuation n^{-1/2} sum_k (pi_{theta}(f) - pi*(f))
/// computed from the same runs, so total = martingale + fluctuation up to rounding.
/// Replication r uses derive_stream(cfg.seed, r).
struct DecomposedSums {
    std::vector<double> total;
    std::vector<double> martingale;
    std::vector<double> fluctuation;
};

DecomposedSums replicate_decomposed_sums(const FiniteITModel& model, const FiniteFunction& f,
                                         std::size_t n_replications, int threads = 0);

/// Requires n_replications >= 100.
CLTReport clt_experiment(const ITConfig& cfg, const FiniteFunction& f, std::size_t n_replications,
                         const ExperimentOptions& opt = {});
CLTReport martingale_clt_experiment(const ITConfig& cfg, const FiniteFunction& f, std::size_t n_replications,
                                    const ExperimentOptions& opt = {});
CLTReport pi_fluctuation_experiment(const ITConfig& cfg, const FiniteFunction& f, std::size_t n_replications,
                                    const ExperimentOptions& opt = {});

struct DiagnosticSeries {
    std::string label;
    std::vector<double> n;
    std::vector<double> values;
    /// log|values - reference| against log n over the tail half; NaN when
    /// fewer than two nonzero points.
    double fitted_slope = 0.0;
    /// Limit the series should approach (0 for convergence-to-zero diagnostics).
    double reference = 0.0;
};

/// Fills fitted_slope from n, values and reference.
void fit_series_slope(DiagnosticSeries& s);

/// n^{-1} sum_{k<n} F_{theta_k}(X_k) at each n of the grid, averaged over
/// n_seeds independent runs (streams derive_stream(cfg.seed, s)); reference = sigma^2(f).
DiagnosticSeries lln_experiment(const ITConfig& cfg, const FiniteFunction& f, std::span<const std::uint64_t> n_grid,
                                std::size_t n_seeds = 1, int threads = 0);

/// Three partial-sum diagnostics along one run (stream derive_stream(cfg.seed, 0)):
///   "poisson_regularity":      n^{-1/2} sum ||P_k Lambda_k f - P_{k-1} Lambda_{k-1} f||_{V^a} V^a(X_k)
///   "containment":             n^{-1/(2a)} sum L_k^{2/a} P_k V(X_k), L refit every `l_refresh` steps
///   "linearization_remainder": n^{-1/2} sum of second-order remainders of pi_theta(f) - pi*(f)
/// Returned in that order.
std::vector<DiagnosticSeries> assumption_diagnostics(const ITConfig& cfg, const FiniteFunction& f,
                                                     std::span<const std::uint64_t> n_grid, double alpha = 0.25,
                                                     std::uint64_t l_refresh = 100);

/// Monte Carlo E[((theta_n - theta*)(h))^{2k}], the squared k-fold V-statistic
/// with product kernel h x ... x h, for k in {1, 2}. Runs the auxiliary
/// process of cfg only (iid or markov).
DiagnosticSeries vstat_moment_check(const ITConfig& cfg, const FiniteFunction& h, int k_order,
                                    std::span<const std::uint64_t> n_grid, std::size_t n_replications,
                                    int threads = 0);

}  // namespace imcmc
