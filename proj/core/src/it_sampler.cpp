#include "imcmc/it_sampler.hpp"

#include <algorithm>
#include <cmath>

#include "imcmc/errors.hpp"

namespace imcmc {

double acceptance_ratio(std::size_t x, std::size_t z, const FiniteTarget& t) {
    if (x >= t.n_states() || z >= t.n_states()) throw ShapeError("acceptance_ratio: state out of range");
    const double log_ratio = t.beta() * (t.log_pi(z) - t.log_pi(x));
    return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

double acceptance_ratio(std::span<const double> x, std::span<const double> z, const ContinuousTarget& t) {
    const double lx = t.log_density(x);
    if (!std::isfinite(lx)) throw DomainError("acceptance_ratio: zero density at the current state");
    const double lz = t.log_density(z);
    if (!std::isfinite(lz)) return 0.0;
    const double log_ratio = t.beta * (lz - lx);
    return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

Eigen::MatrixXd acceptance_matrix(const FiniteTarget& t) {
    const auto n = static_cast<Eigen::Index>(t.n_states());
    Eigen::MatrixXd r(n, n);
    for (Eigen::Index x = 0; x < n; ++x) {
        for (Eigen::Index y = 0; y < n; ++y) {
            r(x, y) = acceptance_ratio(static_cast<std::size_t>(x), static_cast<std::size_t>(y), t);
        }
    }
    return r;
}

// ------------------------------------------------------------------ P_theta

PthetaBuilder::PthetaBuilder(const FiniteKernel& p, const FiniteTarget& t, double epsilon)
    : scaled_base_((1.0 - epsilon) * p.matrix()), acceptance_(acceptance_matrix(t)), epsilon_(epsilon) {
    if (p.n_states() != t.n_states()) throw ShapeError("P_theta: base kernel and target sizes differ");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("P_theta: epsilon must lie in [0, 1]");
}

void PthetaBuilder::build(const Eigen::VectorXd& theta, Eigen::MatrixXd& out) const {
    const Eigen::Index n = acceptance_.rows();
    if (theta.size() != n) throw ShapeError("P_theta: theta size mismatch");
    out.resize(n, n);
    for (Eigen::Index x = 0; x < n; ++x) {
        double rejected = 0.0;
        for (Eigen::Index y = 0; y < n; ++y) {
            const double moved = acceptance_(x, y) * theta[y];
            out(x, y) = scaled_base_(x, y) + epsilon_ * moved;
            rejected += theta[y] - moved;
        }
        out(x, x) += epsilon_ * rejected;
    }
}

FiniteKernel build_ptheta_finite(const FiniteKernel& p, const FiniteMeasure& theta, const FiniteTarget& t,
                                 double epsilon) {
    if (theta.size() != p.n_states()) throw ShapeError("build_ptheta_finite: theta size mismatch");
    if (!theta.is_probability(1e-10)) throw DomainError("build_ptheta_finite: theta must be a probability");
    const PthetaBuilder builder(p, t, epsilon);
    Eigen::MatrixXd out;
    builder.build(theta.weights(), out);
    return FiniteKernel(std::move(out), 1e-10);
}

// ------------------------------------------------------------ DiscreteSampler

DiscreteSampler::DiscreteSampler(const Eigen::VectorXd& probabilities) {
    const auto n = static_cast<std::size_t>(probabilities.size());
    if (n == 0) throw ShapeError("DiscreteSampler: empty distribution");
    cumulative_.resize(n);
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = probabilities[static_cast<Eigen::Index>(i)];
        if (p < 0.0) throw DomainError("DiscreteSampler: negative probability");
        if (p > 0.0) last_positive = i;
        acc += p;
        cumulative_[i] = acc;
    }
    for (std::size_t i = last_positive; i < n; ++i) cumulative_[i] = 1.0;
}

std::size_t DiscreteSampler::operator()(double u) const {
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return static_cast<std::size_t>(it - cumulative_.begin());
}

// -------------------------------------------------------------- FiniteITModel

namespace {

ITConfig validated(ITConfig cfg) {
    if (!(cfg.epsilon >= 0.0 && cfg.epsilon < 1.0)) throw ValidationError("epsilon", "must lie in [0, 1)");
    if (cfg.n_steps < 1) throw ValidationError("n_steps", "must be >= 1");
    const std::size_t n = cfg.target.n_states();
    if (n == 0) throw ValidationError("target", "empty state space");
    if (cfg.base_kernel.n_states() != n) throw ValidationError("base_kernel", "size differs from target");
    if (stationarity_residual(cfg.base_kernel, cfg.target.pi().weights()) > 1e-10) {
        throw ValidationError("base_kernel", "does not leave the target invariant");
    }
    if (cfg.initial_state && *cfg.initial_state >= n) throw ValidationError("initial_state", "out of range");
    return cfg;
}

}  // namespace

FiniteITModel::FiniteITModel(ITConfig cfg)
    : cfg_(validated(std::move(cfg))),
      theta_star_(imcmc::theta_star(cfg_.target)),
      builder_(cfg_.base_kernel, cfg_.target, cfg_.epsilon) {
    const std::size_t n = n_states();
    const AuxiliaryMode& aux = cfg_.auxiliary;

    aux_measure_ = aux.measure ? *aux.measure : theta_star_;
    if (aux_measure_.size() != n) throw ValidationError("auxiliary.measure", "size differs from target");
    if (!aux_measure_.is_probability(1e-10)) throw ValidationError("auxiliary.measure", "must be a probability");

    if (aux.kind == AuxiliaryMode::Kind::markov) {
        aux_kernel_ = aux.kernel ? *aux.kernel
                                 : metropolis_kernel_finite(FiniteTarget(theta_star_.weights(), 1.0, 0.5),
                                                            uniform_proposal(n));
        if (aux_kernel_.n_states() != n) throw ValidationError("auxiliary.kernel", "size differs from target");
        if (stationarity_residual(aux_kernel_, theta_star_.weights()) > 1e-10) {
            throw ConfigurationError("auxiliary kernel Q does not leave theta* invariant");
        }
        if (aux.initial_state && *aux.initial_state >= n) {
            throw ValidationError("auxiliary.initial_state", "out of range");
        }
        aux_rows_.reserve(n);
        for (std::size_t y = 0; y < n; ++y) aux_rows_.emplace_back(aux_kernel_.matrix().row(static_cast<Eigen::Index>(y)).transpose());
    } else {
        aux_kernel_ = FiniteKernel::rank_one(aux_measure_);
    }

    base_rows_.reserve(n);
    for (std::size_t x = 0; x < n; ++x) {
        base_rows_.emplace_back(cfg_.base_kernel.matrix().row(static_cast<Eigen::Index>(x)).transpose());
    }
    aux_sampler_ = DiscreteSampler(aux.kind == AuxiliaryMode::Kind::markov ? theta_star_.weights()
                                                                          : aux_measure_.weights());
    target_sampler_ = DiscreteSampler(cfg_.target.pi().weights());
}

// ------------------------------------------------------------------ stepping

ITChainState init_chain(const FiniteITModel& model, RngStream rng) {
    ITChainState state{0, EmpiricalMeasure(model.n_states()), 0, 0, std::move(rng)};
    const auto& initial = model.config().initial_state;
    state.x = initial ? *initial : model.target_sampler()(state.rng.uniform());
    return state;
}

void advance_auxiliary(ITChainState& state, const FiniteITModel& model) {
    switch (model.auxiliary_kind()) {
        case AuxiliaryMode::Kind::frozen:
            return;
        case AuxiliaryMode::Kind::iid:
            state.y = model.aux_measure_sampler()(state.rng.uniform());
            break;
        case AuxiliaryMode::Kind::markov:
            if (state.theta.empty()) {
                const auto& y1 = model.config().auxiliary.initial_state;
                const double u = state.rng.uniform();
                state.y = y1 ? *y1 : model.aux_measure_sampler()(u);
            } else {
                state.y = model.aux_row(state.y)(state.rng.uniform());
            }
            break;
    }
    state.theta.append(state.y);
}

void it_step(ITChainState& state, const FiniteITModel& model) {
    const double branch = state.rng.uniform();
    if (branch >= model.epsilon()) {
        state.x = model.base_row(state.x)(state.rng.uniform());
        return;
    }
    std::size_t z;
    if (model.auxiliary_kind() == AuxiliaryMode::Kind::frozen) {
        z = model.aux_measure_sampler()(state.rng.uniform());
    } else {
        z = state.theta.uniform_draw(state.rng);
    }
    const double u = state.rng.uniform();
    if (u < model.ptheta().acceptance()(static_cast<Eigen::Index>(state.x), static_cast<Eigen::Index>(z))) {
        state.x = z;
    }
}

void advance(ITChainState& state, const FiniteITModel& model) {
    advance_auxiliary(state, model);
    it_step(state, model);
    ++state.step;
}

Trajectory run_it_chain(const FiniteITModel& model, RngStream rng) {
    ITChainState state = init_chain(model, std::move(rng));
    const std::uint64_t n = model.config().n_steps;
    Trajectory out;
    out.x0 = state.x;
    out.x.reserve(n);
    out.y.reserve(n);
    const bool frozen = model.auxiliary_kind() == AuxiliaryMode::Kind::frozen;
    for (std::uint64_t k = 0; k < n; ++k) {
        advance(state, model);
        out.x.push_back(static_cast<std::uint32_t>(state.x));
        out.y.push_back(frozen ? -1 : static_cast<std::int64_t>(state.y));
    }
    return out;
}

Trajectory run_it_chain(const ITConfig& cfg) {
    const FiniteITModel model(cfg);
    return run_it_chain(model, derive_stream(cfg.seed, 0));
}

ContinuousTrajectory run_it_chain(const ContinuousITConfig& cfg) {
    if (!(cfg.epsilon >= 0.0 && cfg.epsilon < 1.0)) throw ValidationError("epsilon", "must lie in [0, 1)");
    const std::size_t d = cfg.target.dimension;
    if (cfg.x0.size() != d || cfg.y0.size() != d) throw ShapeError("continuous IT: x0/y0 dimension mismatch");
    if (cfg.n_steps < 1) throw ValidationError("n_steps", "must be >= 1");

    const ContinuousTarget base = cfg.target.with_beta(1.0);
    const ContinuousTarget auxiliary = cfg.target.with_beta(1.0 - cfg.target.beta > 0.0 ? 1.0 - cfg.target.beta : 1.0);
    RngStream rng = derive_stream(cfg.seed, 0);
    PointCloudMeasure theta(d);

    ContinuousTrajectory out;
    out.dimension = d;
    out.x.reserve(cfg.n_steps * d);
    out.y.reserve(cfg.n_steps * d);
    std::vector<double> x = cfg.x0;
    std::vector<double> y = cfg.y0;
    for (std::uint64_t k = 0; k < cfg.n_steps; ++k) {
        if (k > 0) y = srwm_step(auxiliary, y, cfg.auxiliary_scale, rng);
        theta.append(y);

        const double branch = rng.uniform();
        if (branch >= cfg.epsilon) {
            x = srwm_step(base, x, cfg.scale, rng);
        } else {
            const auto z = theta.uniform_draw(rng);
            const double u = rng.uniform();
            if (u < acceptance_ratio(x, z, cfg.target)) x.assign(z.begin(), z.end());
        }
        out.x.insert(out.x.end(), x.begin(), x.end());
        out.y.insert(out.y.end(), y.begin(), y.end());
    }
    return out;
}

}  // namespace imcmc
