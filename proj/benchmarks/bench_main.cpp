#include <benchmark/benchmark.h>

#include <random>

#include "imcmc/exact_oracle.hpp"
#include "imcmc/experiments.hpp"
#include "imcmc/it_sampler.hpp"
#include "imcmc/theta_functionals.hpp"

using namespace imcmc;

namespace {

ITConfig config_with_states(std::size_t n) {
    Eigen::VectorXd w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = static_cast<double>(n - i);
    ITConfig cfg;
    cfg.target = FiniteTarget(w, 0.5, 0.5);
    cfg.base_kernel = metropolis_kernel_finite(cfg.target, uniform_proposal(n));
    cfg.epsilon = 0.3;
    cfg.n_steps = 1;
    return cfg;
}

FiniteMeasure random_theta(std::size_t n) {
    std::mt19937_64 gen(n);
    std::exponential_distribution<double> e(1.0);
    Eigen::VectorXd v(n);
    for (auto& x : v) x = e(gen) + 1e-3;
    return FiniteMeasure::probability(v);
}

}  // namespace

// Sampling only: one auxiliary draw plus one interacting move.
static void BM_Advance(benchmark::State& state) {
    const FiniteITModel model(config_with_states(static_cast<std::size_t>(state.range(0))));
    ITChainState s = init_chain(model, derive_stream(1, 0));
    for (auto _ : state) {
        advance(s, model);
        benchmark::DoNotOptimize(s.x);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Advance)->Arg(5)->Arg(50);

// Per-step exact functionals: P_theta assembly, GTH and pi_theta(f).
static void BM_PthetaStationary(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const FiniteITModel model(config_with_states(n));
    ThetaEvaluator ev(model, FiniteFunction::indicator(n, 0));
    Eigen::VectorXd a = random_theta(n).weights(), b = FiniteMeasure::uniform(n).weights();
    for (auto _ : state) {
        benchmark::DoNotOptimize(ev.pi_f(a));
        std::swap(a, b);
    }
}
BENCHMARK(BM_PthetaStationary)->Arg(5)->Arg(20)->Arg(50);

static void BM_PoissonSolve(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const ITConfig cfg = config_with_states(n);
    const FiniteKernel k = build_ptheta_finite(cfg.base_kernel, random_theta(n), cfg.target, cfg.epsilon);
    const FiniteMeasure pi = stationary_distribution(k);
    const FiniteFunction f = FiniteFunction::indicator(n, 0);
    for (auto _ : state) benchmark::DoNotOptimize(poisson_solve(k, pi, f));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PoissonSolve)->RangeMultiplier(2)->Range(4, 128)->Complexity(benchmark::oNCubed);

// One replication of the decomposed CLT sums on the 5-state instance.
static void BM_DecomposedReplication(benchmark::State& state) {
    ITConfig cfg = config_with_states(5);
    cfg.n_steps = static_cast<std::uint64_t>(state.range(0));
    const FiniteITModel model(cfg);
    const FiniteFunction f = FiniteFunction::indicator(5, 0);
    for (auto _ : state) benchmark::DoNotOptimize(replicate_decomposed_sums(model, f, 1, 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DecomposedReplication)->Arg(20000);

BENCHMARK_MAIN();
