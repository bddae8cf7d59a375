#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "imcmc/markov.hpp"
#include "imcmc/rng.hpp"

namespace imcmc {

/// Positive target distribution on a finite space, with the tempering
/// exponent beta used by the interaction move and the drift exponent tau.
class FiniteTarget {
public:
    FiniteTarget() = default;
    /// `weights` may be unnormalized; they are normalized once here.
    FiniteTarget(Eigen::VectorXd weights, double beta, double tau);

    std::size_t n_states() const noexcept { return pi_.size(); }
    const FiniteMeasure& pi() const noexcept { return pi_; }
    /// Weights as given at construction (unnormalized).
    const Eigen::VectorXd& weights() const noexcept { return weights_; }
    double beta() const noexcept { return beta_; }
    double tau() const noexcept { return tau_; }
    /// log pi(x) of the normalized target.
    double log_pi(std::size_t x) const { return log_pi_[static_cast<Eigen::Index>(x)]; }
    const Eigen::VectorXd& log_pi() const noexcept { return log_pi_; }

    friend bool operator==(const FiniteTarget& a, const FiniteTarget& b) {
        return a.pi_ == b.pi_ && a.beta_ == b.beta_ && a.tau_ == b.tau_;
    }

private:
    Eigen::VectorXd weights_;
    FiniteMeasure pi_;
    Eigen::VectorXd log_pi_;
    double beta_ = 1.0;
    double tau_ = 0.5;
};

/// Continuous target known through its log-density up to a constant.
struct ContinuousTarget {
    std::string name;
    std::size_t dimension = 1;
    double beta = 1.0;
    double tau = 0.5;
    std::function<double(std::span<const double>)> log_density;

    /// Same density with a different tempering exponent.
    ContinuousTarget with_beta(double new_beta) const;
};

/// Built-in continuous targets: "std_gaussian" and "gaussian_mixture"
/// (equal mixture of N(-2.5, I) and N(+2.5, I)). Throws ValidationError on
/// unknown names.
ContinuousTarget make_continuous_target(const std::string& name, std::size_t dimension, double beta,
                                        double tau);
std::vector<std::string> continuous_target_names();

/// V(x) = (pi(x) / max pi)^{-tau}; equals 1 at the mode.
FiniteFunction drift_function(const FiniteTarget& t);

/// Probability measure proportional to pi^exponent, exponent in (0, 1].
FiniteMeasure tempered_measure(const FiniteTarget& t, double exponent);

/// theta* proportional to pi^{1 - beta}; uniform when beta = 1.
FiniteMeasure theta_star(const FiniteTarget& t);

/// Uniform proposal q(x, y) = 1/n over all states (self included).
FiniteKernel uniform_proposal(std::size_t n);

/// Metropolis kernel for pi with a symmetric proposal:
/// P(x, y) = q(x, y) min(1, pi(y)/pi(x)) off the diagonal, rejected mass on it.
FiniteKernel metropolis_kernel_finite(const FiniteTarget& t, const FiniteKernel& proposal);

/// One Gaussian random-walk Metropolis step targeting pi^beta.
/// Variates: `dimension` normals (two raw variates each), then one uniform.
std::vector<double> srwm_step(const ContinuousTarget& t, std::span<const double> x, double scale,
                              RngStream& rng);

}  // namespace imcmc
