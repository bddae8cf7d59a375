#include "imcmc/targets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "imcmc/errors.hpp"

namespace imcmc {

FiniteTarget::FiniteTarget(Eigen::VectorXd weights, double beta, double tau) : beta_(beta), tau_(tau) {
    if (weights.size() == 0) throw ShapeError("FiniteTarget: empty state space");
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
            throw DomainError("FiniteTarget: weights must be positive and finite");
        }
    }
    if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("beta", "must lie in (0, 1]");
    if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau", "must lie in (0, 1)");
    weights_ = weights;
    pi_ = FiniteMeasure::probability(std::move(weights));
    log_pi_ = pi_.weights().array().log().matrix();
}

ContinuousTarget ContinuousTarget::with_beta(double new_beta) const {
    ContinuousTarget copy = *this;
    copy.beta = new_beta;
    return copy;
}

namespace {

double log_std_gaussian(std::span<const double> x) {
    double acc = 0.0;
    for (double xi : x) acc += xi * xi;
    return -0.5 * acc;
}

double log_mixture(std::span<const double> x) {
    constexpr double kShift = 2.5;
    double a = 0.0, b = 0.0;
    for (double xi : x) {
        a += (xi - kShift) * (xi - kShift);
        b += (xi + kShift) * (xi + kShift);
    }
    a *= -0.5;
    b *= -0.5;
    const double m = std::max(a, b);
    return m + std::log(0.5 * std::exp(a - m) + 0.5 * std::exp(b - m));
}

}  // namespace

std::vector<std::string> continuous_target_names() { return {"std_gaussian", "gaussian_mixture"}; }

ContinuousTarget make_continuous_target(const std::string& name, std::size_t dimension, double beta,
                                        double tau) {
    if (dimension == 0) throw ValidationError("dimension", "must be positive");
    if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("beta", "must lie in (0, 1]");
    if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau", "must lie in (0, 1)");
    ContinuousTarget t;
    t.name = name;
    t.dimension = dimension;
    t.beta = beta;
    t.tau = tau;
    if (name == "std_gaussian") {
        t.log_density = log_std_gaussian;
    } else if (name == "gaussian_mixture") {
        t.log_density = log_mixture;
    } else {
        throw ValidationError("target.name", "unknown continuous target '" + name + "'");
    }
    return t;
}

FiniteFunction drift_function(const FiniteTarget& t) {
    const Eigen::VectorXd& pi = t.pi().weights();
    const double mode = pi.maxCoeff();
    Eigen::VectorXd v(pi.size());
    for (Eigen::Index i = 0; i < pi.size(); ++i) {
        // Exactly 1 at the mode since pi(i) / mode == 1.0 there.
        v[i] = std::max(1.0, std::pow(pi[i] / mode, -t.tau()));
    }
    return FiniteFunction(std::move(v));
}

FiniteMeasure tempered_measure(const FiniteTarget& t, double exponent) {
    if (!(exponent > 0.0 && exponent <= 1.0)) throw DomainError("tempered_measure: exponent must lie in (0, 1]");
    if (exponent == 1.0) return t.pi();
    const Eigen::VectorXd& lp = t.log_pi();
    const double top = lp.maxCoeff();
    Eigen::VectorXd w(lp.size());
    for (Eigen::Index i = 0; i < lp.size(); ++i) w[i] = std::exp(exponent * (lp[i] - top));
    return FiniteMeasure::probability(std::move(w));
}

FiniteMeasure theta_star(const FiniteTarget& t) {
    const double exponent = 1.0 - t.beta();
    return exponent > 0.0 ? tempered_measure(t, exponent) : FiniteMeasure::uniform(t.n_states());
}

FiniteKernel uniform_proposal(std::size_t n) {
    if (n == 0) throw ShapeError("uniform_proposal: empty state space");
    const auto m = static_cast<Eigen::Index>(n);
    return FiniteKernel(Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(n)));
}

FiniteKernel metropolis_kernel_finite(const FiniteTarget& t, const FiniteKernel& proposal) {
    const std::size_t n = t.n_states();
    if (proposal.n_states() != n) throw ShapeError("metropolis_kernel_finite: proposal size mismatch");
    const Eigen::MatrixXd& q = proposal.matrix();
    if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw PreconditionError("metropolis_kernel_finite: proposal must be symmetric");
    }
    const Eigen::VectorXd& pi = t.pi().weights();
    const auto m = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index x = 0; x < m; ++x) {
        double moved = 0.0;
        for (Eigen::Index y = 0; y < m; ++y) {
            if (y == x) continue;
            const double accept = pi[y] >= pi[x] ? 1.0 : pi[y] / pi[x];
            p(x, y) = q(x, y) * accept;
            moved += p(x, y);
        }
        p(x, x) = 1.0 - moved;
    }
    return FiniteKernel(std::move(p), 1e-12);
}

std::vector<double> srwm_step(const ContinuousTarget& t, std::span<const double> x, double scale,
                              RngStream& rng) {
    if (!(scale > 0.0)) throw PreconditionError("srwm_step: scale must be positive");
    if (x.size() != t.dimension) throw ShapeError("srwm_step: state dimension mismatch");
    std::vector<double> proposal(x.begin(), x.end());
    for (double& xi : proposal) xi += scale * rng.normal();
    const double u = rng.uniform();

    const double current = t.log_density(x);
    if (!std::isfinite(current)) throw DomainError("srwm_step: log-density not finite at the current state");
    const double candidate = t.log_density(proposal);
    if (!std::isfinite(candidate)) return {x.begin(), x.end()};
    const double log_ratio = t.beta * (candidate - current);
    if (log_ratio >= 0.0 || u < std::exp(log_ratio)) return proposal;
    return {x.begin(), x.end()};
}

}  // namespace imcmc
