#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "imcmc/it_sampler.hpp"
#include "imcmc/markov.hpp"
#include "imcmc/targets.hpp"

namespace imcmc {

/// Brownian factor of the auxiliary contribution: integral of log^2(t) over (0, 1).
inline constexpr double kBrownianLogFactor = 2.0;

/// Centered Poisson solution g = Lambda f of g - P g = f - pi(f), pi(g) = 0.
struct PoissonSolution {
    FiniteFunction g;
    double pi_f = 0.0;
    /// max_x |g - P g - (f - pi(f))|.
    double residual = 0.0;
    /// |pi(g)|.
    double centering = 0.0;
};

/// Scratch space for repeated solves of the same size.
struct PoissonWorkspace {
    Eigen::MatrixXd a;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    Eigen::VectorXd rhs;
};

/// Unchecked solve of (I - P + 1 pi^T) g = f - pi(f), then re-centered.
/// Returns pi(f). A constant f gives g = 0 exactly.
double poisson_solve_into(const Eigen::MatrixXd& p, const Eigen::VectorXd& pi, const Eigen::VectorXd& f,
                          PoissonWorkspace& ws, Eigen::VectorXd& g);

/// Checked solve. Throws ErgodicityError when I - P + 1 pi^T is singular.
PoissonSolution poisson_solve(const FiniteKernel& k, const FiniteMeasure& pi, const FiniteFunction& f);

/// Matrix of Lambda = (I - P + 1 pi^T)^{-1} - 1 pi^T, so Lambda f = poisson_solve(...).g.
Eigen::MatrixXd poisson_operator(const FiniteKernel& k, const FiniteMeasure& pi);

/// F(x) = P (Lambda f)^2 (x) - (P Lambda f (x))^2, evaluated as the conditional
/// variance sum_y P(x, y) (g(y) - P g(x))^2 so it is never negative.
FiniteFunction variance_functional(const FiniteKernel& k_theta, const FiniteFunction& lam_f);
void variance_functional_into(const Eigen::MatrixXd& p, const Eigen::VectorXd& g, Eigen::VectorXd& pg,
                              Eigen::VectorXd& out);

/// Asymptotic variance of n^{-1/2} sum f(X_k) for a stationary chain with kernel k:
/// pi(F) with F from variance_functional.
double markov_asymptotic_variance(const FiniteKernel& k, const FiniteFunction& f);

/// sigma^2(f) = pi_{theta*}(F_{theta*}).
double sigma_sq(const FiniteTarget& t, const FiniteKernel& p, double epsilon, const FiniteFunction& f);

/// G_f(z) = eps * sum_x pi*(x) r(x, z) (Lambda* f(z) - Lambda* f(x)), centered under theta*.
FiniteFunction fluctuation_function_gf(const FiniteTarget& t, const FiniteKernel& p, double epsilon,
                                       const FiniteFunction& f);

/// Brownian constant of n^{-1/2} sum G(Y_k):
///   iid    -> Var_{theta*}(G)
///   markov -> theta*(G^2) + 2 sum_{n>=1} theta*(G Q^n G), via the Q-Poisson solution
///   frozen -> 0
/// Throws ConfigurationError when Q does not leave theta* invariant.
double gamma_tilde_sq(const FiniteFunction& gf, const FiniteMeasure& theta_star, AuxiliaryMode::Kind kind,
                      const FiniteKernel* q = nullptr);

struct LinearizationResult {
    /// pi_theta(f) - pi*(f).
    double delta = 0.0;
    /// pi*(P_theta - P*) Lambda* f.
    double first_order = 0.0;
    /// pi_theta (P_theta - P*) Lambda* (P_theta - P*) Lambda* f.
    double remainder = 0.0;
    /// pi_theta (P_theta - P*) Lambda* f; equals delta.
    double one_term = 0.0;
    /// max(|delta - one_term|, |delta - first_order - remainder|).
    double residual = 0.0;
};

LinearizationResult linearization_residual(const FiniteMeasure& theta, const FiniteTarget& t,
                                           const FiniteKernel& p, double epsilon, const FiniteFunction& f);

struct BoundCheck {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = true;

    double margin() const { return rhs - lhs; }
};

struct PerturbationReport {
    /// Fitted constants for theta1 and theta2.
    ErgodicityConstants constants1;
    ErgodicityConstants constants2;
    /// D_{V^alpha}(theta1, theta2).
    double d_v = 0.0;
    std::vector<BoundCheck> checks;

    std::size_t violations() const;
};

/// Evaluates both sides of
///   ||pi_1 - pi_2||            <= 2 L^4 pi_1(V^a) D
///   ||Lambda_1 - Lambda_2||    <= 3 L^6 pi_1(V^a) D
///   ||P_1 Lambda_1 - P_2 Lambda_2|| <= 5 L^6 pi_1(V^a) D
///   ||Lambda_i||               <= L_i^2        (i = 1, 2; operator form of ||Lambda f|| <= ||f|| L^2)
///   D                          <= 2 ||theta1 - theta2||
/// with L = max(L_1, L_2), norms in V^alpha, and constants fitted over n_max iterates.
/// Operator norms are exact weighted-sup norms of the matrices.
PerturbationReport check_perturbation_bounds(const FiniteMeasure& theta1, const FiniteMeasure& theta2,
                                             const FiniteTarget& t, const FiniteKernel& p, double epsilon,
                                             double alpha, int n_max = 200);

struct VarianceReport {
    double sigma_sq = 0.0;
    double gamma_tilde_sq = 0.0;
    double total = 0.0;
};

/// sigma^2 + 2 gamma~^2 for the configured auxiliary process. iid and frozen
/// modes require the auxiliary measure to equal theta*.
VarianceReport total_asymptotic_variance(const ITConfig& cfg, const FiniteFunction& f);
VarianceReport total_asymptotic_variance(const FiniteITModel& model, const FiniteFunction& f);

}  // namespace imcmc
