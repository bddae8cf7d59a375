#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "imcmc/errors.hpp"
#include "imcmc/experiments.hpp"
#include "test_support.hpp"

using namespace imcmc;

TEST(Threads, ResolutionOrder) {
    EXPECT_EQ(resolve_threads(3), 3);
    ::setenv("IMCMC_THREADS", "5", 1);
    EXPECT_EQ(resolve_threads(0), 5);
    EXPECT_EQ(resolve_threads(2), 2);
    ::unsetenv("IMCMC_THREADS");
    EXPECT_GE(resolve_threads(0), 1);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsWorkerException) {
    EXPECT_THROW(parallel_for(100, 3,
                              [](std::size_t i) {
                                  if (i == 57) throw InternalError("boom");
                              }),
                 InternalError);
}

TEST(DecomposedSums, TotalIsMartingalePlusFluctuation) {
    const FiniteITModel model(fixtures::reference_config(2000, 3));
    const auto s = replicate_decomposed_sums(model, fixtures::reference_f(), 50, 2);
    ASSERT_EQ(s.total.size(), 50u);
    for (std::size_t r = 0; r < 50; ++r) EXPECT_NEAR(s.total[r], s.martingale[r] + s.fluctuation[r], 1e-10);
}

TEST(DecomposedSums, IndependentOfThreadCount) {
    const FiniteITModel model(fixtures::reference_config(1000, 9));
    const auto a = replicate_decomposed_sums(model, fixtures::reference_f(), 40, 1);
    const auto b = replicate_decomposed_sums(model, fixtures::reference_f(), 40, 4);
    EXPECT_EQ(a.total, b.total);
    EXPECT_EQ(a.martingale, b.martingale);
    EXPECT_EQ(a.fluctuation, b.fluctuation);
}

TEST(DecomposedSums, ReplicationsUseDistinctStreams) {
    const FiniteITModel model(fixtures::reference_config(500, 9));
    const auto a = replicate_decomposed_sums(model, fixtures::reference_f(), 100, 1);
    // Total sums of an indicator live on a lattice; the martingale part does not.
    for (std::size_t r = 1; r < a.martingale.size(); ++r) EXPECT_NE(a.martingale[r], a.martingale[0]);
}

TEST(MakeReport, DegeneratePathAndInconsistency) {
    const auto ok = make_clt_report(std::vector<double>(200, 0.0), 0.0, 100);
    EXPECT_TRUE(ok.degenerate);
    EXPECT_TRUE(ok.pass);
    std::vector<double> bad(200, 0.0);
    bad[5] = 1e-3;
    EXPECT_THROW(make_clt_report(bad, 0.0, 100), InconsistencyError);
}

TEST(MakeReport, PassRuleUsesDeclaredTolerances) {
    RngStream rng(1, 0);
    std::vector<double> sums(1000);
    for (auto& s : sums) s = 2.0 * rng.normal();
    const auto good = make_clt_report(sums, 4.0, 10);
    EXPECT_TRUE(good.pass);
    EXPECT_NEAR(good.ks_critical, 1.63 / std::sqrt(1000.0), 1e-15);
    const auto wrong_scale = make_clt_report(sums, 2.0, 10);
    EXPECT_FALSE(wrong_scale.pass);
    EXPECT_NEAR(wrong_scale.variance_ratio, good.variance_ratio * 2.0, 1e-12);
}

TEST(CLTExperiment, ConstantFunctionIsDegenerate) {
    const auto cfg = fixtures::reference_config(500, 2);
    const auto f = FiniteFunction::constant(5, 0.7);
    for (const auto& rep : {clt_experiment(cfg, f, 100), martingale_clt_experiment(cfg, f, 100),
                            pi_fluctuation_experiment(cfg, f, 100)}) {
        EXPECT_TRUE(rep.degenerate);
        EXPECT_TRUE(rep.pass);
        for (double s : rep.per_replication_sums) EXPECT_EQ(s, 0.0);
    }
}

TEST(CLTExperiment, PinnedThetaZeroesFluctuation) {
    auto cfg = fixtures::reference_config(500, 2);
    cfg.auxiliary.kind = AuxiliaryMode::Kind::frozen;
    const auto rep = pi_fluctuation_experiment(cfg, fixtures::reference_f(), 100);
    EXPECT_TRUE(rep.degenerate);
    for (double s : rep.per_replication_sums) EXPECT_EQ(s, 0.0);
}

TEST(CLTExperiment, RequiresEnoughReplications) {
    EXPECT_THROW(clt_experiment(fixtures::reference_config(100), fixtures::reference_f(), 50), PreconditionError);
}

TEST(CLTExperiment, ReferenceInstanceSmall) {
    // Smaller than the acceptance run; checks the pipeline end to end with a wider band.
    ExperimentOptions opt;
    opt.tolerances.variance_band = 0.25;
    const auto rep = clt_experiment(fixtures::reference_config(4000, 17), fixtures::reference_f(), 300, opt);
    EXPECT_FALSE(rep.degenerate);
    EXPECT_TRUE(rep.pass) << rep.variance_ratio << " " << rep.ks_distance;
}

TEST(CLTExperiment, NestedLengthsAgree) {
    ExperimentOptions opt;
    const auto a = clt_experiment(fixtures::reference_config(2000, 5), fixtures::reference_f(), 400, opt);
    const auto b = clt_experiment(fixtures::reference_config(4000, 5), fixtures::reference_f(), 400, opt);
    // Each variance estimate has relative s.e. about sqrt(2/400) = 0.07.
    EXPECT_NEAR(a.empirical_variance / b.empirical_variance, 1.0, 0.35);
}

TEST(Lln, ConstantFunctionIsZero) {
    const std::vector<std::uint64_t> grid{100, 1000};
    const auto s = lln_experiment(fixtures::reference_config(1000, 1), FiniteFunction::constant(5, 1.0), grid, 2);
    EXPECT_EQ(s.reference, 0.0);
    for (double v : s.values) EXPECT_EQ(v, 0.0);
}

TEST(Lln, FrozenThetaConverges) {
    auto cfg = fixtures::reference_config(1, 4);
    cfg.auxiliary.kind = AuxiliaryMode::Kind::frozen;
    const std::vector<std::uint64_t> grid{1000, 10000, 20000};
    const auto s = lln_experiment(cfg, fixtures::reference_f(), grid, 5);
    EXPECT_NEAR(s.values.back(), s.reference, 0.05 * s.reference);
}

TEST(Diagnostics, PinnedThetaZeroesRegularitySeries) {
    auto cfg = fixtures::reference_config(1, 6);
    cfg.auxiliary.kind = AuxiliaryMode::Kind::frozen;
    const std::vector<std::uint64_t> grid{100, 400, 1600};
    const auto series = assumption_diagnostics(cfg, fixtures::reference_f(), grid);
    ASSERT_EQ(series.size(), 3u);
    EXPECT_EQ(series[0].label, "poisson_regularity");
    EXPECT_EQ(series[1].label, "containment");
    EXPECT_EQ(series[2].label, "linearization_remainder");
    for (double v : series[0].values) EXPECT_EQ(v, 0.0);
    for (double v : series[2].values) EXPECT_EQ(v, 0.0);
}

TEST(Diagnostics, ContainmentWithConstantLFollowsDisplayedRate) {
    // With L held fixed the containment series is a constant times n^{1 - 1/(2a)} times an ergodic average.
    auto cfg = fixtures::reference_config(1, 6);
    cfg.auxiliary.kind = AuxiliaryMode::Kind::frozen;
    const std::vector<std::uint64_t> grid{1000, 2000, 4000, 8000, 16000, 32000};
    const double alpha = 0.25;
    const auto series = assumption_diagnostics(cfg, fixtures::reference_f(), grid, alpha);
    EXPECT_NEAR(series[1].fitted_slope, 1.0 - 1.0 / (2 * alpha), 0.1);
}

TEST(VStat, ZeroFunctionAndIidRates) {
    const auto cfg = fixtures::reference_config(1, 12);
    const std::vector<std::uint64_t> grid{100, 200, 400, 800, 1600};
    const auto zero = vstat_moment_check(cfg, FiniteFunction::constant(5, 0.0), 1, grid, 100);
    for (double v : zero.values) EXPECT_EQ(v, 0.0);

    const auto k1 = vstat_moment_check(cfg, fixtures::reference_f(), 1, grid, 2000);
    EXPECT_NEAR(k1.fitted_slope, -1.0, 0.1);
    // Exact iid value Var(h) / n at the largest n.
    const FiniteMeasure ts = theta_star(cfg.target);
    const double var = ts[0] * (1 - ts[0]);
    EXPECT_NEAR(k1.values.back(), var / 1600, 0.1 * var / 1600);

    const auto k2 = vstat_moment_check(cfg, fixtures::reference_f(), 2, grid, 500);
    EXPECT_LE(k2.fitted_slope, -1.7);
}

TEST(VStat, FrozenModeIsRejected) {
    auto cfg = fixtures::reference_config(1, 12);
    cfg.auxiliary.kind = AuxiliaryMode::Kind::frozen;
    const std::vector<std::uint64_t> grid{100, 200};
    EXPECT_THROW(vstat_moment_check(cfg, fixtures::reference_f(), 1, grid, 100), PreconditionError);
}
