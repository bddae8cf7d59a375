#include "imcmc/theta_functionals.hpp"

#include "imcmc/errors.hpp"
#include "imcmc/numeric.hpp"

namespace imcmc {

ThetaEvaluator::ThetaEvaluator(const FiniteITModel& model, const FiniteFunction& f)
    : builder_(&model.ptheta()), f_(f.values()) {
    if (f.size() != model.n_states()) throw ShapeError("ThetaEvaluator: f size mismatch");
}

bool ThetaEvaluator::refresh(const Eigen::VectorXd& theta) {
    if (have_pi_ && theta.size() == theta_.size() && theta == theta_) return false;
    theta_ = theta;
    builder_->build(theta_, p_);
    gth_stationary(p_, work_, pi_);
    pi_f_ = expectation(pi_, f_);
    have_pi_ = true;
    have_solution_ = false;
    return true;
}

double ThetaEvaluator::pi_f(const Eigen::VectorXd& theta) {
    refresh(theta);
    return pi_f_;
}

void ThetaEvaluator::solve(const Eigen::VectorXd& theta) {
    refresh(theta);
    if (have_solution_) return;
    poisson_solve_into(p_, pi_, f_, ws_, g_);
    variance_functional_into(p_, g_, pg_, big_f_);
    have_solution_ = true;
}

void current_theta(const ITChainState& state, const FiniteITModel& model, Eigen::VectorXd& out) {
    if (model.auxiliary_kind() == AuxiliaryMode::Kind::frozen) {
        out = model.auxiliary_measure().weights();
    } else {
        state.theta.normalized_into(out);
    }
}

}  // namespace imcmc
