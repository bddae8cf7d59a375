#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "imcmc/empirical_measure.hpp"
#include "imcmc/markov.hpp"
#include "imcmc/rng.hpp"
#include "imcmc/targets.hpp"

namespace imcmc {

/// How the auxiliary process Y (and hence theta_n) evolves.
///  - iid:    Y_k drawn independently from `measure` (default theta*).
///  - markov: Y_{k+1} ~ Q(Y_k, .) with Q = `kernel` (default: Metropolis on
///            theta* with the uniform proposal); Y_1 = `initial_state` or a
///            draw from theta*.
///  - frozen: no auxiliary process; theta_k = `measure` (default theta*) for
///            every k. Used for inert controls and frozen-theta checks.
struct AuxiliaryMode {
    enum class Kind { iid, markov, frozen };

    Kind kind = Kind::iid;
    std::optional<FiniteMeasure> measure;
    std::optional<FiniteKernel> kernel;
    std::optional<std::size_t> initial_state;

    friend bool operator==(const AuxiliaryMode&, const AuxiliaryMode&) = default;
};

/// Full parameterization of a finite-state interacting tempering run.
struct ITConfig {
    double epsilon = 0.3;
    FiniteTarget target;
    /// Base kernel P; must leave target.pi() invariant.
    FiniteKernel base_kernel;
    AuxiliaryMode auxiliary;
    /// X_0 = this state if set, otherwise X_0 ~ pi.
    std::optional<std::size_t> initial_state;
    std::uint64_t n_steps = 1;
    std::uint64_t seed = 0;

    friend bool operator==(const ITConfig&, const ITConfig&) = default;
};

/// r(x, z) = min(1, (pi(z)/pi(x))^beta), evaluated in log space.
double acceptance_ratio(std::size_t x, std::size_t z, const FiniteTarget& t);
/// Continuous version; throws DomainError when pi(x) = 0.
double acceptance_ratio(std::span<const double> x, std::span<const double> z, const ContinuousTarget& t);

/// Acceptance matrix R(x, y) = r(x, y).
Eigen::MatrixXd acceptance_matrix(const FiniteTarget& t);

/// P_theta = (1 - eps) P + eps (R diag(theta) + diag(sum_y (1 - r(x,y)) theta(y))).
FiniteKernel build_ptheta_finite(const FiniteKernel& p, const FiniteMeasure& theta, const FiniteTarget& t,
                                 double epsilon);

/// Allocation-free P_theta assembly for repeated use with the same (P, target, eps).
class PthetaBuilder {
public:
    PthetaBuilder(const FiniteKernel& p, const FiniteTarget& t, double epsilon);

    /// Writes P_theta into `out` (resized on first use). `theta` must be a
    /// probability vector.
    void build(const Eigen::VectorXd& theta, Eigen::MatrixXd& out) const;

    std::size_t n_states() const noexcept { return static_cast<std::size_t>(acceptance_.rows()); }
    double epsilon() const noexcept { return epsilon_; }
    const Eigen::MatrixXd& acceptance() const noexcept { return acceptance_; }

private:
    Eigen::MatrixXd scaled_base_;  // (1 - eps) P
    Eigen::MatrixXd acceptance_;   // r(x, y)
    double epsilon_;
};

/// Inverse-CDF table for sampling a finite distribution with one uniform.
class DiscreteSampler {
public:
    DiscreteSampler() = default;
    explicit DiscreteSampler(const Eigen::VectorXd& probabilities);

    std::size_t operator()(double u) const;

private:
    std::vector<double> cumulative_;
};

/// Immutable, precomputed view of an ITConfig shared by every replication.
class FiniteITModel {
public:
    /// Validates the configuration (eps in [0, 1), sizes, pi P = pi, theta*-stationary
    /// auxiliary kernel) and resolves auxiliary defaults.
    explicit FiniteITModel(ITConfig cfg);

    const ITConfig& config() const noexcept { return cfg_; }
    const FiniteTarget& target() const noexcept { return cfg_.target; }
    std::size_t n_states() const noexcept { return cfg_.target.n_states(); }
    double epsilon() const noexcept { return cfg_.epsilon; }
    const FiniteKernel& base_kernel() const noexcept { return cfg_.base_kernel; }
    /// theta* proportional to pi^{1 - beta}.
    const FiniteMeasure& theta_star() const noexcept { return theta_star_; }
    AuxiliaryMode::Kind auxiliary_kind() const noexcept { return cfg_.auxiliary.kind; }
    /// iid source or frozen theta (resolved).
    const FiniteMeasure& auxiliary_measure() const noexcept { return aux_measure_; }
    /// Markov auxiliary kernel Q (resolved; meaningful in markov mode only).
    const FiniteKernel& auxiliary_kernel() const noexcept { return aux_kernel_; }
    const PthetaBuilder& ptheta() const noexcept { return builder_; }

    const DiscreteSampler& base_row(std::size_t x) const { return base_rows_[x]; }
    const DiscreteSampler& aux_row(std::size_t y) const { return aux_rows_[y]; }
    const DiscreteSampler& aux_measure_sampler() const noexcept { return aux_sampler_; }
    const DiscreteSampler& target_sampler() const noexcept { return target_sampler_; }

private:
    ITConfig cfg_;
    FiniteMeasure theta_star_;
    FiniteMeasure aux_measure_;
    FiniteKernel aux_kernel_;
    PthetaBuilder builder_;
    std::vector<DiscreteSampler> base_rows_;
    std::vector<DiscreteSampler> aux_rows_;
    DiscreteSampler aux_sampler_;
    DiscreteSampler target_sampler_;
};

/// Live state of one chain.
struct ITChainState {
    std::size_t x = 0;
    EmpiricalMeasure theta;
    /// Current auxiliary state (markov mode).
    std::size_t y = 0;
    std::uint64_t step = 0;
    RngStream rng;
};

/// X_0 from the configured initial law; consumes one variate when X_0 ~ pi.
ITChainState init_chain(const FiniteITModel& model, RngStream rng);

/// Appends Y_{step+1} to theta (no-op in frozen mode). One variate.
void advance_auxiliary(ITChainState& state, const FiniteITModel& model);

/// X_{step+1} ~ P_theta(X_step, .) with theta the current state.theta.
///
/// Variates, in order: branch uniform; then either one uniform selecting the
/// P-row move, or one draw from the past of Y plus one acceptance uniform.
/// The acceptance uniform is consumed even when r = 1.
void it_step(ITChainState& state, const FiniteITModel& model);

/// Full iteration: advance_auxiliary then it_step. After the call, the
/// kernel that produced X_{step} was P_{theta_{step}} with theta_{step}
/// including Y_{step}.
void advance(ITChainState& state, const FiniteITModel& model);

struct Trajectory {
    std::size_t x0 = 0;
    std::vector<std::uint32_t> x;  // X_1..X_n
    std::vector<std::int64_t> y;   // Y_1..Y_n, -1 in frozen mode
};

/// Runs cfg.n_steps iterations on stream derive_stream(cfg.seed, 0).
Trajectory run_it_chain(const ITConfig& cfg);
Trajectory run_it_chain(const FiniteITModel& model, RngStream rng);

/// Continuous-state IT run (sampling only). The base kernel is SRWM on pi
/// with step `scale`; the auxiliary chain is SRWM on pi^{1 - beta} with
/// step `auxiliary_scale`, started at `y0`.
struct ContinuousITConfig {
    double epsilon = 0.3;
    ContinuousTarget target;
    double scale = 2.4;
    double auxiliary_scale = 2.4;
    std::vector<double> x0;
    std::vector<double> y0;
    std::uint64_t n_steps = 1;
    std::uint64_t seed = 0;
};

struct ContinuousTrajectory {
    std::size_t dimension = 1;
    std::vector<double> x;  // row-major n_steps x dimension
    std::vector<double> y;
};

ContinuousTrajectory run_it_chain(const ContinuousITConfig& cfg);

}  // namespace imcmc
