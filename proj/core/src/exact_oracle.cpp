#include "imcmc/exact_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "imcmc/errors.hpp"
#include "imcmc/numeric.hpp"

namespace imcmc {

namespace {

void require_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw ShapeError(std::string(what) + ": dimension mismatch");
}

// P_{theta*} and its stationary law, through the same code path the
// per-step evaluators use, so that pinned-theta* quantities agree bitwise.
struct StarSystem {
    FiniteMeasure theta;
    Eigen::MatrixXd p;
    Eigen::VectorXd pi;
};

StarSystem star_system(const FiniteTarget& t, const FiniteKernel& p, double epsilon) {
    require_size(p.n_states(), t.n_states(), "oracle");
    StarSystem s{theta_star(t), {}, {}};
    const PthetaBuilder builder(p, t, epsilon);
    builder.build(s.theta.weights(), s.p);
    const FiniteKernel checked(s.p, 1e-10);
    s.pi = stationary_distribution(checked).weights();
    return s;
}

double poisson_residual(const Eigen::MatrixXd& p, const Eigen::VectorXd& f, double pi_f, const Eigen::VectorXd& g) {
    const Eigen::VectorXd r = g - p * g - (f.array() - pi_f).matrix();
    return r.cwiseAbs().maxCoeff();
}

}  // namespace

// ------------------------------------------------------------------ Poisson

double poisson_solve_into(const Eigen::MatrixXd& p, const Eigen::VectorXd& pi, const Eigen::VectorXd& f,
                          PoissonWorkspace& ws, Eigen::VectorXd& g) {
    const Eigen::Index n = p.rows();
    const double pi_f = expectation(pi, f);
    ws.rhs = f.array() - pi_f;
    if (ws.rhs.isZero(0.0)) {
        g.setZero(n);
        return pi_f;
    }
    ws.a = -p;
    ws.a.diagonal().array() += 1.0;
    ws.a.rowwise() += pi.transpose();
    ws.lu.compute(ws.a);
    g = ws.lu.solve(ws.rhs);
    g.array() -= pi.dot(g);
    return pi_f;
}

PoissonSolution poisson_solve(const FiniteKernel& k, const FiniteMeasure& pi, const FiniteFunction& f) {
    require_size(k.n_states(), pi.size(), "poisson_solve");
    require_size(k.n_states(), f.size(), "poisson_solve");
    const auto n = static_cast<Eigen::Index>(k.n_states());
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - k.matrix();
    a.rowwise() += pi.weights().transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> check(a);
    check.setThreshold(1e-12);
    if (!check.isInvertible()) {
        throw ErgodicityError("poisson_solve: I - P + 1 pi^T is singular; the kernel is not ergodic");
    }
    PoissonWorkspace ws;
    Eigen::VectorXd g;
    PoissonSolution out;
    out.pi_f = poisson_solve_into(k.matrix(), pi.weights(), f.values(), ws, g);
    out.residual = poisson_residual(k.matrix(), f.values(), out.pi_f, g);
    out.centering = std::abs(pi.weights().dot(g));
    out.g = FiniteFunction(std::move(g));
    return out;
}

Eigen::MatrixXd poisson_operator(const FiniteKernel& k, const FiniteMeasure& pi) {
    require_size(k.n_states(), pi.size(), "poisson_operator");
    const auto n = static_cast<Eigen::Index>(k.n_states());
    const Eigen::MatrixXd proj = Eigen::VectorXd::Ones(n) * pi.weights().transpose();
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - k.matrix() + proj;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) throw ErgodicityError("poisson_operator: kernel is not ergodic");
    return lu.inverse() - proj;
}

// ---------------------------------------------------------------- variances

void variance_functional_into(const Eigen::MatrixXd& p, const Eigen::VectorXd& g, Eigen::VectorXd& pg,
                              Eigen::VectorXd& out) {
    const Eigen::Index n = p.rows();
    pg.noalias() = p * g;
    out.resize(n);
    for (Eigen::Index x = 0; x < n; ++x) {
        double acc = 0.0;
        for (Eigen::Index y = 0; y < n; ++y) {
            const double d = g[y] - pg[x];
            acc += p(x, y) * d * d;
        }
        out[x] = acc;
    }
}

FiniteFunction variance_functional(const FiniteKernel& k_theta, const FiniteFunction& lam_f) {
    require_size(k_theta.n_states(), lam_f.size(), "variance_functional");
    Eigen::VectorXd pg;
    Eigen::VectorXd out;
    variance_functional_into(k_theta.matrix(), lam_f.values(), pg, out);
    return FiniteFunction(std::move(out));
}

double markov_asymptotic_variance(const FiniteKernel& k, const FiniteFunction& f) {
    const FiniteMeasure pi = stationary_distribution(k);
    const PoissonSolution sol = poisson_solve(k, pi, f);
    return expectation(pi.weights(), variance_functional(k, sol.g).values());
}

double sigma_sq(const FiniteTarget& t, const FiniteKernel& p, double epsilon, const FiniteFunction& f) {
    require_size(t.n_states(), f.size(), "sigma_sq");
    const StarSystem s = star_system(t, p, epsilon);
    PoissonWorkspace ws;
    Eigen::VectorXd g, pg, big_f;
    poisson_solve_into(s.p, s.pi, f.values(), ws, g);
    variance_functional_into(s.p, g, pg, big_f);
    return expectation(s.pi, big_f);
}

FiniteFunction fluctuation_function_gf(const FiniteTarget& t, const FiniteKernel& p, double epsilon,
                                       const FiniteFunction& f) {
    require_size(t.n_states(), f.size(), "fluctuation_function_gf");
    const StarSystem s = star_system(t, p, epsilon);
    PoissonWorkspace ws;
    Eigen::VectorXd g;
    poisson_solve_into(s.p, s.pi, f.values(), ws, g);
    const Eigen::MatrixXd r = acceptance_matrix(t);
    const Eigen::Index n = r.rows();
    Eigen::VectorXd h(n);
    for (Eigen::Index z = 0; z < n; ++z) {
        double acc = 0.0;
        for (Eigen::Index x = 0; x < n; ++x) acc += s.pi[x] * r(x, z) * (g[z] - g[x]);
        h[z] = epsilon * acc;
    }
    h.array() -= expectation(s.theta.weights(), h);
    return FiniteFunction(std::move(h));
}

double gamma_tilde_sq(const FiniteFunction& gf, const FiniteMeasure& theta_star, AuxiliaryMode::Kind kind,
                      const FiniteKernel* q) {
    require_size(gf.size(), theta_star.size(), "gamma_tilde_sq");
    const Eigen::VectorXd& w = theta_star.weights();
    const Eigen::VectorXd centered = gf.values().array() - expectation(w, gf.values());
    switch (kind) {
        case AuxiliaryMode::Kind::frozen:
            return 0.0;
        case AuxiliaryMode::Kind::iid:
            return expectation(w, centered.array().square().matrix());
        case AuxiliaryMode::Kind::markov: {
            if (q == nullptr) throw ConfigurationError("gamma_tilde_sq: markov mode needs a kernel Q");
            require_size(q->n_states(), gf.size(), "gamma_tilde_sq");
            if (stationarity_residual(*q, w) > 1e-10) {
                throw ConfigurationError("gamma_tilde_sq: Q does not leave theta* invariant");
            }
            if (centered.isZero(0.0)) return 0.0;
            const PoissonSolution sol = poisson_solve(*q, theta_star, FiniteFunction(centered));
            const double v = 2.0 * expectation(w, centered.cwiseProduct(sol.g.values())) -
                             expectation(w, centered.array().square().matrix());
            return std::max(v, 0.0);
        }
    }
    throw InternalError("gamma_tilde_sq: unknown auxiliary mode");
}

// ------------------------------------------------------------ linearization

LinearizationResult linearization_residual(const FiniteMeasure& theta, const FiniteTarget& t,
                                           const FiniteKernel& p, double epsilon, const FiniteFunction& f) {
    require_size(theta.size(), t.n_states(), "linearization_residual");
    require_size(f.size(), t.n_states(), "linearization_residual");
    const StarSystem s = star_system(t, p, epsilon);
    const PthetaBuilder builder(p, t, epsilon);
    Eigen::MatrixXd p_theta;
    builder.build(theta.weights(), p_theta);
    const Eigen::VectorXd pi_theta = stationary_distribution(FiniteKernel(p_theta, 1e-10)).weights();

    const Eigen::MatrixXd d = p_theta - s.p;
    PoissonWorkspace ws;
    Eigen::VectorXd lam_f, lam_w;
    poisson_solve_into(s.p, s.pi, f.values(), ws, lam_f);
    const Eigen::VectorXd w = d * lam_f;
    poisson_solve_into(s.p, s.pi, w, ws, lam_w);

    LinearizationResult out;
    out.delta = expectation(pi_theta, f.values()) - expectation(s.pi, f.values());
    out.first_order = s.pi.dot(w);
    out.one_term = pi_theta.dot(w);
    out.remainder = pi_theta.dot(d * lam_w);
    out.residual = std::max(std::abs(out.delta - out.one_term),
                            std::abs(out.delta - out.first_order - out.remainder));
    return out;
}

// --------------------------------------------------------- perturbation bounds

std::size_t PerturbationReport::violations() const {
    return static_cast<std::size_t>(
        std::count_if(checks.begin(), checks.end(), [](const BoundCheck& c) { return !c.holds; }));
}

PerturbationReport check_perturbation_bounds(const FiniteMeasure& theta1, const FiniteMeasure& theta2,
                                             const FiniteTarget& t, const FiniteKernel& p, double epsilon,
                                             double alpha, int n_max) {
    require_size(theta1.size(), t.n_states(), "check_perturbation_bounds");
    require_size(theta2.size(), t.n_states(), "check_perturbation_bounds");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("check_perturbation_bounds: alpha must lie in (0, 1]");

    const FiniteFunction v = drift_function(t);
    const FiniteFunction w = v.pow(alpha);
    const FiniteKernel k1 = build_ptheta_finite(p, theta1, t, epsilon);
    const FiniteKernel k2 = build_ptheta_finite(p, theta2, t, epsilon);
    const FiniteMeasure pi1 = stationary_distribution(k1);
    const FiniteMeasure pi2 = stationary_distribution(k2);

    PerturbationReport rep;
    rep.constants1 = fit_ergodicity_constants(k1, pi1, v, alpha, n_max);
    rep.constants2 = fit_ergodicity_constants(k2, pi2, v, alpha, n_max);
    rep.d_v = v_distance_kernels(k1, k2, w);

    const double l = std::max(rep.constants1.l, rep.constants2.l);
    const double pi1_w = expectation(pi1.weights(), w.values());
    const Eigen::MatrixXd lam1 = poisson_operator(k1, pi1);
    const Eigen::MatrixXd lam2 = poisson_operator(k2, pi2);

    auto add = [&rep](std::string name, double lhs, double rhs) {
        const bool holds = lhs <= rhs * (1.0 + 1e-12) + 1e-14;
        rep.checks.push_back(BoundCheck{std::move(name), lhs, rhs, holds});
    };
    add("pi_difference", v_norm_measure(pi1.weights() - pi2.weights(), w),
        2.0 * std::pow(l, 4) * pi1_w * rep.d_v);
    add("lambda_difference", v_operator_norm(lam1 - lam2, w), 3.0 * std::pow(l, 6) * pi1_w * rep.d_v);
    add("p_lambda_difference", v_operator_norm(k1.matrix() * lam1 - k2.matrix() * lam2, w),
        5.0 * std::pow(l, 6) * pi1_w * rep.d_v);
    add("lambda_norm_1", v_operator_norm(lam1, w), rep.constants1.l * rep.constants1.l);
    add("lambda_norm_2", v_operator_norm(lam2, w), rep.constants2.l * rep.constants2.l);
    add("kernel_distance", rep.d_v, 2.0 * v_norm_measure(theta1.weights() - theta2.weights(), w));
    return rep;
}

// ------------------------------------------------------------------- total

VarianceReport total_asymptotic_variance(const FiniteITModel& model, const FiniteFunction& f) {
    require_size(f.size(), model.n_states(), "total_asymptotic_variance");
    const AuxiliaryMode::Kind kind = model.auxiliary_kind();
    if (kind != AuxiliaryMode::Kind::markov &&
        (model.auxiliary_measure().weights() - model.theta_star().weights()).cwiseAbs().sum() > 1e-12) {
        throw ConfigurationError("total_asymptotic_variance: auxiliary measure differs from theta*");
    }
    VarianceReport out;
    out.sigma_sq = sigma_sq(model.target(), model.base_kernel(), model.epsilon(), f);
    if (kind != AuxiliaryMode::Kind::frozen) {
        const FiniteFunction gf = fluctuation_function_gf(model.target(), model.base_kernel(), model.epsilon(), f);
        out.gamma_tilde_sq = gamma_tilde_sq(gf, model.theta_star(), kind, &model.auxiliary_kernel());
    }
    out.total = out.sigma_sq + kBrownianLogFactor * out.gamma_tilde_sq;
    return out;
}

VarianceReport total_asymptotic_variance(const ITConfig& cfg, const FiniteFunction& f) {
    return total_asymptotic_variance(FiniteITModel(cfg), f);
}

}  // namespace imcmc
