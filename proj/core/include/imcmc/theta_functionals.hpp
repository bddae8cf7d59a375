#pragma once

#include <Eigen/Dense>

#include "imcmc/exact_oracle.hpp"
#include "imcmc/it_sampler.hpp"

namespace imcmc {

/// Exact per-step functionals of theta for a fixed model and f: P_theta,
/// pi_theta, Lambda_theta f, P_theta Lambda_theta f and F_theta.
///
/// All buffers are reused; nothing allocates after the first call. Results
/// are cached until theta changes, so a frozen theta costs one solve in total.
class ThetaEvaluator {
public:
    ThetaEvaluator(const FiniteITModel& model, const FiniteFunction& f);

    /// Builds P_theta and pi_theta; returns pi_theta(f).
    double pi_f(const Eigen::VectorXd& theta);
    /// pi_f plus the Poisson solution and F_theta.
    void solve(const Eigen::VectorXd& theta);

    const Eigen::MatrixXd& p() const noexcept { return p_; }
    const Eigen::VectorXd& pi() const noexcept { return pi_; }
    double cached_pi_f() const noexcept { return pi_f_; }
    /// Lambda_theta f (valid after solve).
    const Eigen::VectorXd& g() const noexcept { return g_; }
    /// P_theta Lambda_theta f (valid after solve).
    const Eigen::VectorXd& pg() const noexcept { return pg_; }
    /// F_theta (valid after solve).
    const Eigen::VectorXd& variance_function() const noexcept { return big_f_; }

private:
    bool refresh(const Eigen::VectorXd& theta);

    const PthetaBuilder* builder_;
    Eigen::VectorXd f_;
    Eigen::VectorXd theta_;
    Eigen::MatrixXd p_;
    Eigen::MatrixXd work_;
    Eigen::VectorXd pi_;
    double pi_f_ = 0.0;
    bool have_pi_ = false;
    bool have_solution_ = false;
    PoissonWorkspace ws_;
    Eigen::VectorXd g_;
    Eigen::VectorXd pg_;
    Eigen::VectorXd big_f_;
};

/// The theta currently driving the chain: the auxiliary occupation measure,
/// or the frozen measure in frozen mode.
void current_theta(const ITChainState& state, const FiniteITModel& model, Eigen::VectorXd& out);

}  // namespace imcmc
