#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "imcmc/errors.hpp"
#include "imcmc/exact_oracle.hpp"
#include "imcmc/it_sampler.hpp"
#include "imcmc/stats.hpp"
#include "test_support.hpp"

using namespace imcmc;

namespace {

// Test-side oracles built from truncated series only; no linear solves.

Eigen::VectorXd series_poisson(const Eigen::MatrixXd& p, const Eigen::VectorXd& pi, const Eigen::VectorXd& f,
                               int terms = 2000) {
    const double pf = pi.dot(f);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(f.size());
    Eigen::VectorXd pnf = f;
    for (int n = 0; n <= terms; ++n) {
        acc += pnf.array().matrix() - Eigen::VectorXd::Constant(f.size(), pf);
        pnf = p * pnf;
    }
    return acc;
}

// pi((f - pi f)^2) + 2 sum_{n>=1} pi((f - pi f) P^n (f - pi f)).
double series_asymptotic_variance(const Eigen::MatrixXd& p, const Eigen::VectorXd& pi, const Eigen::VectorXd& f,
                                  int terms = 2000) {
    const Eigen::VectorXd c = f.array() - pi.dot(f);
    double total = pi.dot(c.cwiseProduct(c));
    Eigen::VectorXd pnc = c;
    for (int n = 1; n <= terms; ++n) {
        pnc = p * pnc;
        total += 2.0 * pi.dot(c.cwiseProduct(pnc));
    }
    return total;
}

struct Reference {
    ITConfig cfg = fixtures::reference_config();
    FiniteFunction f = fixtures::reference_f();
    FiniteMeasure ts = theta_star(cfg.target);
    FiniteKernel p_star = build_ptheta_finite(cfg.base_kernel, ts, cfg.target, cfg.epsilon);
};

// G(z) = eps sum_x pi(x) r(x, z) (g(z) - g(x)), centered under theta*, with g from the series.
Eigen::VectorXd series_gf(const ITConfig& cfg, const FiniteMeasure& ts, const FiniteKernel& p_star,
                          const FiniteFunction& f) {
    const Eigen::VectorXd& pi = cfg.target.pi().weights();
    const Eigen::VectorXd g = series_poisson(p_star.matrix(), pi, f.values());
    const auto n = pi.size();
    Eigen::VectorXd h(n);
    for (Eigen::Index z = 0; z < n; ++z) {
        double s = 0.0;
        for (Eigen::Index x = 0; x < n; ++x) {
            s += pi[x] * acceptance_ratio(static_cast<std::size_t>(x), static_cast<std::size_t>(z), cfg.target) *
                 (g[z] - g[x]);
        }
        h[z] = cfg.epsilon * s;
    }
    return h.array() - ts.weights().dot(h);
}

// Frozen at first verified build; independently reproduced by the series oracles below.
constexpr double kReferenceSigmaSq = 0.4510930850530759;
constexpr double kReferenceGammaTildeSq = 0.03381236371226462;
constexpr double kReferenceTotal = 0.5187178124776051;

}  // namespace

TEST(BrownianFactor, LogSquaredIntegralIsTwo) {
    boost::math::quadrature::tanh_sinh<double> integrator;
    const double v = integrator.integrate([](double t) { return std::log(t) * std::log(t); }, 0.0, 1.0);
    EXPECT_NEAR(v, kBrownianLogFactor, 1e-8);
}

TEST(PoissonSolve, ConstantFunctionGivesZero) {
    const Reference r;
    const auto sol = poisson_solve(r.p_star, r.cfg.target.pi(), FiniteFunction::constant(5, 2.5));
    EXPECT_EQ(sol.g.values(), Eigen::VectorXd::Zero(5));
}

TEST(PoissonSolve, RankOneKernelGivesCenteredF) {
    const FiniteMeasure pi{0.1, 0.2, 0.3, 0.4};
    const FiniteFunction f{1.0, -1.0, 2.0, 0.5};
    const auto sol = poisson_solve(FiniteKernel::rank_one(pi), pi, f);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(sol.g[i], f[i] - pi.integrate(f), 1e-14);
}

TEST(PoissonSolve, TwoStateMatchesTruncatedSeries) {
    Eigen::Matrix2d m;
    m << 0.9, 0.1, 0.2, 0.8;
    const FiniteKernel k(m);
    const FiniteMeasure pi = stationary_distribution(k);
    const FiniteFunction f{1.0, 0.0};
    const auto sol = poisson_solve(k, pi, f);
    const Eigen::VectorXd oracle = series_poisson(m, pi.weights(), f.values(), 200);
    EXPECT_LE((sol.g.values() - oracle).cwiseAbs().maxCoeff(), 1e-8);
    // Closed form: g = (f - pi f) / (a + b) for two states.
    EXPECT_NEAR(sol.g[0], (1.0 / 3.0) / 0.3, 1e-12);
}

TEST(PoissonSolve, ResidualAndCenteringOnRandomInstances) {
    std::mt19937_64 gen(41);
    for (int rep = 0; rep < 50; ++rep) {
        const auto inst = fixtures::random_instance(gen);
        const std::size_t n = inst.target.n_states();
        const FiniteMeasure th = fixtures::random_measure(n, gen);
        const FiniteKernel k = build_ptheta_finite(inst.base, th, inst.target, inst.epsilon);
        const FiniteMeasure pi = stationary_distribution(k);
        const FiniteFunction f(Eigen::VectorXd::Random(n));
        const auto sol = poisson_solve(k, pi, f);
        EXPECT_LE(sol.residual, 1e-10);
        EXPECT_LE(sol.centering, 1e-10);
        const Eigen::MatrixXd lam = poisson_operator(k, pi);
        EXPECT_LE((lam * f.values() - sol.g.values()).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(PoissonSolve, ReducibleKernelThrows) {
    Eigen::Matrix3d m;
    m << 1, 0, 0, 0, 0.5, 0.5, 0, 0.5, 0.5;
    const FiniteMeasure pi{0.5, 0.25, 0.25};
    EXPECT_THROW(poisson_solve(FiniteKernel(m), pi, FiniteFunction{1.0, 0.0, 0.0}), ErgodicityError);
}

TEST(VarianceFunctional, DegenerateCases) {
    const Reference r;
    const auto sol = poisson_solve(r.p_star, r.cfg.target.pi(), FiniteFunction::constant(5, 1.0));
    EXPECT_EQ(variance_functional(r.p_star, sol.g).values(), Eigen::VectorXd::Zero(5));

    Eigen::Matrix3d perm;
    perm << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    const FiniteFunction g{0.3, -1.0, 0.7};
    EXPECT_EQ(variance_functional(FiniteKernel(perm), g).values(), Eigen::VectorXd::Zero(3));
}

TEST(VarianceFunctional, TwoStateMatchesMonteCarlo) {
    Eigen::Matrix2d m;
    m << 0.9, 0.1, 0.2, 0.8;
    const FiniteKernel k(m);
    const auto sol = poisson_solve(k, stationary_distribution(k), FiniteFunction{1.0, 0.0});
    const FiniteFunction big_f = variance_functional(k, sol.g);
    RngStream rng(1, 0);
    const int n = 1000000;
    for (int x = 0; x < 2; ++x) {
        std::vector<double> draws(n);
        for (auto& d : draws) d = sol.g[rng.uniform() < m(x, 0) ? 0 : 1];
        const double var = sample_variance(draws);
        // Standard error of a sample variance from the fourth central moment.
        double mean = 0.0, m4 = 0.0;
        for (double d : draws) mean += d;
        mean /= n;
        for (double d : draws) m4 += std::pow(d - mean, 4);
        m4 /= n;
        const double se = std::sqrt((m4 - var * var) / n);
        EXPECT_NEAR(var, big_f[x], 3 * se);
    }
}

TEST(VarianceFunctional, NonNegativeOnRandomInstances) {
    std::mt19937_64 gen(43);
    for (int rep = 0; rep < 50; ++rep) {
        const auto inst = fixtures::random_instance(gen);
        const std::size_t n = inst.target.n_states();
        const FiniteKernel k =
            build_ptheta_finite(inst.base, fixtures::random_measure(n, gen), inst.target, inst.epsilon);
        const auto sol = poisson_solve(k, stationary_distribution(k), FiniteFunction(Eigen::VectorXd::Random(n)));
        EXPECT_GE(variance_functional(k, sol.g).values().minCoeff(), -1e-12);
    }
}

TEST(SigmaSq, MatchesSeriesOracleAndFrozenValue) {
    const Reference r;
    const double s = sigma_sq(r.cfg.target, r.cfg.base_kernel, r.cfg.epsilon, r.f);
    const double oracle = series_asymptotic_variance(r.p_star.matrix(), r.cfg.target.pi().weights(), r.f.values());
    EXPECT_NEAR(s, oracle, 1e-10);
    EXPECT_NEAR(s, kReferenceSigmaSq, 1e-12);
}

TEST(SigmaSq, ConstantFunctionAndShiftInvariance) {
    const Reference r;
    EXPECT_EQ(sigma_sq(r.cfg.target, r.cfg.base_kernel, r.cfg.epsilon, FiniteFunction::constant(5, 3.0)), 0.0);
    const FiniteFunction shifted(r.f.values().array() + 7.25);
    EXPECT_NEAR(sigma_sq(r.cfg.target, r.cfg.base_kernel, r.cfg.epsilon, shifted),
                sigma_sq(r.cfg.target, r.cfg.base_kernel, r.cfg.epsilon, r.f), 1e-12);
}

TEST(SigmaSq, EpsilonZeroMatchesBatchMeans) {
    const Reference r;
    const double s = sigma_sq(r.cfg.target, r.cfg.base_kernel, 0.0, r.f);
    EXPECT_NEAR(s, markov_asymptotic_variance(r.cfg.base_kernel, r.f), 1e-12);
    RngStream rng(2, 0);
    const auto& p = r.cfg.base_kernel.matrix();
    std::size_t x = 0;
    std::vector<double> values(2000000);
    for (auto& v : values) {
        const double u = rng.uniform();
        double c = 0.0;
        std::size_t y = 0;
        for (; y + 1 < 5; ++y) {
            c += p(x, y);
            if (u < c) break;
        }
        x = y;
        v = r.f[x];
    }
    EXPECT_NEAR(batch_means_variance(values, 1000), s, 0.1 * s);
}

TEST(FluctuationFunction, ConstantAndCentering) {
    const Reference r;
    const auto g0 = fluctuation_function_gf(r.cfg.target, r.cfg.base_kernel, r.cfg.epsilon,
                                            FiniteFunction::constant(5, 1.0));
    EXPECT_EQ(g0.values(), Eigen::VectorXd::Zero(5));
    std::mt19937_64 gen(47);
    for (int rep = 0; rep < 50; ++rep) {
        const auto inst = fixtures::random_instance(gen);
        const std::size_t n = inst.target.n_states();
        const auto g = fluctuation_function_gf(inst.target, inst.base, inst.epsilon,
                                               FiniteFunction(Eigen::VectorXd::Random(n)));
        EXPECT_LE(std::abs(theta_star(inst.target).integrate(g)), 1e-10);
    }
}

TEST(FluctuationFunction, MatchesSeriesOracle) {
    const Reference r;
    const auto g = fluctuation_function_gf(r.cfg.target, r.cfg.base_kernel, r.cfg.epsilon, r.f);
    EXPECT_LE((g.values() - series_gf(r.cfg, r.ts, r.p_star, r.f)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FluctuationFunction, FirstOrderEqualsThetaOfG) {
    std::mt19937_64 gen(53);
    for (int rep = 0; rep < 100; ++rep) {
        const auto inst = fixtures::random_instance(gen, 20);
        const std::size_t n = inst.target.n_states();
        const FiniteFunction f(Eigen::VectorXd::Random(n));
        const FiniteMeasure th = fixtures::random_measure(n, gen);
        const auto lin = linearization_residual(th, inst.target, inst.base, inst.epsilon, f);
        const auto g = fluctuation_function_gf(inst.target, inst.base, inst.epsilon, f);
        EXPECT_NEAR(lin.first_order, th.integrate(g), 1e-10);
    }
}

TEST(GammaTilde, Examples) {
    const FiniteMeasure half{0.5, 0.5};
    EXPECT_EQ(gamma_tilde_sq(FiniteFunction{0.0, 0.0}, half, AuxiliaryMode::Kind::iid), 0.0);
    EXPECT_NEAR(gamma_tilde_sq(FiniteFunction{1.0, -1.0}, half, AuxiliaryMode::Kind::iid), 1.0, 1e-15);
    const FiniteKernel q = FiniteKernel::rank_one(half);
    EXPECT_NEAR(gamma_tilde_sq(FiniteFunction{1.0, -1.0}, half, AuxiliaryMode::Kind::markov, &q), 1.0, 1e-14);
    EXPECT_EQ(gamma_tilde_sq(FiniteFunction{1.0, -1.0}, half, AuxiliaryMode::Kind::frozen), 0.0);
}

TEST(GammaTilde, NonStationaryQThrows) {
    Eigen::Matrix2d m;
    m << 0.9, 0.1, 0.5, 0.5;
    const FiniteKernel q(m);
    EXPECT_THROW(gamma_tilde_sq(FiniteFunction{1.0, -1.0}, FiniteMeasure{0.5, 0.5}, AuxiliaryMode::Kind::markov, &q),
                 ConfigurationError);
}

TEST(GammaTilde, ReferenceValuesMatchSeriesOracle) {
    const Reference r;
    const Eigen::VectorXd g = series_gf(r.cfg, r.ts, r.p_star, r.f);
    const double iid_oracle = r.ts.weights().dot(g.cwiseProduct(g));
    const auto report = total_asymptotic_variance(r.cfg, r.f);
    EXPECT_NEAR(report.gamma_tilde_sq, iid_oracle, 1e-10);
    EXPECT_NEAR(report.gamma_tilde_sq, kReferenceGammaTildeSq, 1e-12);
    EXPECT_NEAR(report.sigma_sq, kReferenceSigmaSq, 1e-12);
    EXPECT_NEAR(report.total, kReferenceTotal, 1e-12);
    EXPECT_EQ(report.total, report.sigma_sq + 2.0 * report.gamma_tilde_sq);

    auto markov = r.cfg;
    markov.auxiliary.kind = AuxiliaryMode::Kind::markov;
    const FiniteITModel model(markov);
    const double markov_oracle =
        series_asymptotic_variance(model.auxiliary_kernel().matrix(), r.ts.weights(), g);
    EXPECT_NEAR(total_asymptotic_variance(model, r.f).gamma_tilde_sq, markov_oracle, 1e-10);
}

TEST(TotalVariance, ConstantFunctionAndFrozenMode) {
    const Reference r;
    EXPECT_EQ(total_asymptotic_variance(r.cfg, FiniteFunction::constant(5, 2.0)).total, 0.0);
    auto frozen = r.cfg;
    frozen.auxiliary.kind = AuxiliaryMode::Kind::frozen;
    const auto rep = total_asymptotic_variance(frozen, r.f);
    EXPECT_EQ(rep.gamma_tilde_sq, 0.0);
    EXPECT_EQ(rep.total, rep.sigma_sq);
    frozen.auxiliary.measure = FiniteMeasure::uniform(5);
    EXPECT_THROW(total_asymptotic_variance(frozen, r.f), ConfigurationError);
}

TEST(Linearization, ThetaStarGivesZeros) {
    const Reference r;
    const auto lin = linearization_residual(r.ts, r.cfg.target, r.cfg.base_kernel, r.cfg.epsilon, r.f);
    EXPECT_EQ(lin.first_order, 0.0);
    EXPECT_EQ(lin.remainder, 0.0);
    EXPECT_LE(std::abs(lin.delta), 1e-15);
}

TEST(Linearization, IdentitiesOnRandomThetas) {
    std::mt19937_64 gen(59);
    for (int rep = 0; rep < 100; ++rep) {
        const auto inst = fixtures::random_instance(gen);
        const std::size_t n = inst.target.n_states();
        const auto lin = linearization_residual(fixtures::random_measure(n, gen), inst.target, inst.base,
                                                inst.epsilon, FiniteFunction(Eigen::VectorXd::Random(n)));
        EXPECT_NEAR(lin.delta, lin.one_term, 1e-10);
        EXPECT_NEAR(lin.delta, lin.first_order + lin.remainder, 1e-10);
    }
}

TEST(Linearization, RemainderIsSecondOrder) {
    const Reference r;
    std::mt19937_64 gen(61);
    for (int rep = 0; rep < 10; ++rep) {
        const FiniteMeasure mu = fixtures::random_measure(5, gen);
        std::vector<double> ratios;
        for (double s : {0.1, 0.05, 0.025}) {
            const FiniteMeasure th((1 - s) * r.ts.weights() + s * mu.weights());
            const auto lin = linearization_residual(th, r.cfg.target, r.cfg.base_kernel, r.cfg.epsilon, r.f);
            ratios.push_back(lin.remainder / (s * s));
        }
        for (double q : ratios) {
            EXPECT_LE(std::abs(q), 2.0 * std::abs(ratios.back()) + 1e-12);
            EXPECT_GE(std::abs(q), 0.5 * std::abs(ratios.back()) - 1e-12);
        }
    }
}

TEST(PerturbationBounds, EqualMeasuresHaveZeroLeftSides) {
    const Reference r;
    const auto rep = check_perturbation_bounds(r.ts, r.ts, r.cfg.target, r.cfg.base_kernel, r.cfg.epsilon, 0.25);
    for (const auto& c : rep.checks) {
        if (c.name.rfind("lambda_norm", 0) == 0) continue;
        EXPECT_EQ(c.lhs, 0.0) << c.name;
    }
    EXPECT_EQ(rep.violations(), 0u);
}

TEST(PerturbationBounds, HoldOnNearbyPairs) {
    const Reference r;
    std::mt19937_64 gen(67);
    for (int rep = 0; rep < 30; ++rep) {
        const FiniteMeasure a = fixtures::random_measure(5, gen);
        const FiniteMeasure b(0.9 * a.weights() + 0.1 * fixtures::random_measure(5, gen).weights());
        const auto report = check_perturbation_bounds(a, b, r.cfg.target, r.cfg.base_kernel, r.cfg.epsilon, 0.25);
        EXPECT_EQ(report.violations(), 0u);
        EXPECT_EQ(report.checks.size(), 6u);
    }
}

TEST(PerturbationBounds, PoissonOperatorNormAgainstFunctions) {
    // ||Lambda f||_{V^a} <= ||f||_{V^a} L^2 for explicit functions, not only the operator norm.
    const Reference r;
    const FiniteFunction va = drift_function(r.cfg.target).pow(0.25);
    const auto c = fit_ergodicity_constants(r.p_star, r.cfg.target.pi(), drift_function(r.cfg.target), 0.25, 200);
    std::mt19937_64 gen(71);
    for (int rep = 0; rep < 50; ++rep) {
        const FiniteFunction f(Eigen::VectorXd::Random(5));
        const auto sol = poisson_solve(r.p_star, r.cfg.target.pi(), f);
        EXPECT_LE(v_norm_function(sol.g, va), v_norm_function(f, va) * c.l * c.l * (1 + 1e-12));
    }
}
