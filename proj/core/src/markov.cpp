#include "imcmc/markov.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "imcmc/errors.hpp"
#include "imcmc/numeric.hpp"

namespace imcmc {
namespace {

constexpr double kRhoFloor = 1e-6;
constexpr double kDecayRelativeFloor = 1e-12;

void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw ShapeError(std::string(what) + ": size mismatch (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
    }
}

void require_weight(const FiniteFunction& v) {
    for (Eigen::Index i = 0; i < v.values().size(); ++i) {
        if (!(v.values()[i] >= 1.0)) throw DomainError("weight function must satisfy v >= 1");
    }
}

// The drift grid {0.05, 0.10, ..., 0.95}.
std::array<double, 19> drift_grid() {
    std::array<double, 19> grid{};
    for (int i = 0; i < 19; ++i) grid[i] = 0.05 * (i + 1);
    return grid;
}

// Picks the lambda minimizing b / (1 - lambda). Exact ties (up to rounding)
// go to the lambda nearest the grid midpoint.
template <typename BFunction>
DriftCertificate select_drift(BFunction&& b_of_lambda) {
    DriftCertificate best{0.0, 0.0};
    double best_score = std::numeric_limits<double>::infinity();
    for (double lambda : drift_grid()) {
        const double b = b_of_lambda(lambda);
        const double score = b / (1.0 - lambda);
        const double tol = 1e-12 * std::max(1.0, std::fabs(best_score));
        if (score < best_score - tol) {
            best = {lambda, b};
            best_score = score;
        } else if (std::fabs(score - best_score) <= tol &&
                   std::fabs(lambda - 0.5) < std::fabs(best.lambda - 0.5)) {
            best = {lambda, b};
            best_score = std::min(best_score, score);
        }
    }
    return best;
}

}  // namespace

// ---------------------------------------------------------------- FiniteFunction

FiniteFunction::FiniteFunction(Eigen::VectorXd values) : values_(std::move(values)) {
    if (!values_.allFinite()) throw DomainError("FiniteFunction: entries must be finite");
}

FiniteFunction::FiniteFunction(std::initializer_list<double> values)
    : FiniteFunction(Eigen::Map<const Eigen::VectorXd>(values.begin(),
                                                       static_cast<Eigen::Index>(values.size()))) {}

FiniteFunction FiniteFunction::constant(std::size_t n, double value) {
    return FiniteFunction(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), value));
}

FiniteFunction FiniteFunction::indicator(std::size_t n, std::size_t state) {
    if (state >= n) throw ShapeError("indicator: state out of range");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    v[static_cast<Eigen::Index>(state)] = 1.0;
    return FiniteFunction(std::move(v));
}

FiniteFunction FiniteFunction::pow(double exponent) const {
    return FiniteFunction(values_.array().pow(exponent).matrix());
}

// ----------------------------------------------------------------- FiniteMeasure

FiniteMeasure::FiniteMeasure(Eigen::VectorXd weights) : weights_(std::move(weights)) {
    for (Eigen::Index i = 0; i < weights_.size(); ++i) {
        if (!std::isfinite(weights_[i]) || weights_[i] < 0.0) {
            throw DomainError("FiniteMeasure: weights must be finite and nonnegative");
        }
    }
}

FiniteMeasure::FiniteMeasure(std::initializer_list<double> weights)
    : FiniteMeasure(Eigen::Map<const Eigen::VectorXd>(weights.begin(),
                                                      static_cast<Eigen::Index>(weights.size()))) {}

FiniteMeasure FiniteMeasure::probability(Eigen::VectorXd weights) {
    FiniteMeasure m(std::move(weights));
    const double mass = m.total_mass();
    if (!(mass > 0.0)) throw DomainError("FiniteMeasure::probability: total mass must be positive");
    m.weights_ /= mass;
    return m;
}

FiniteMeasure FiniteMeasure::uniform(std::size_t n) {
    if (n == 0) throw ShapeError("uniform measure on an empty space");
    return FiniteMeasure(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
}

FiniteMeasure FiniteMeasure::dirac(std::size_t n, std::size_t state) {
    if (state >= n) throw ShapeError("dirac: state out of range");
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    w[static_cast<Eigen::Index>(state)] = 1.0;
    return FiniteMeasure(std::move(w));
}

double FiniteMeasure::total_mass() const {
    return stable_sum(std::span<const double>(weights_.data(), static_cast<std::size_t>(weights_.size())));
}

bool FiniteMeasure::is_probability(double tolerance) const {
    return weights_.size() > 0 && std::fabs(total_mass() - 1.0) <= tolerance;
}

double FiniteMeasure::integrate(const FiniteFunction& f) const {
    require_same_size(size(), f.size(), "FiniteMeasure::integrate");
    return expectation(weights_, f.values());
}

// ------------------------------------------------------------------ FiniteKernel

FiniteKernel::FiniteKernel(Eigen::MatrixXd rows, double tolerance) : rows_(std::move(rows)) {
    if (rows_.rows() != rows_.cols()) throw ShapeError("FiniteKernel: matrix must be square");
    if (rows_.rows() == 0) throw ShapeError("FiniteKernel: empty state space");
    for (Eigen::Index x = 0; x < rows_.rows(); ++x) {
        for (Eigen::Index y = 0; y < rows_.cols(); ++y) {
            const double p = rows_(x, y);
            if (!std::isfinite(p) || p < 0.0) {
                throw DomainError("FiniteKernel: entries must be finite and nonnegative");
            }
        }
        const double s = rows_.row(x).sum();
        if (std::fabs(s - 1.0) > tolerance) {
            throw DomainError("FiniteKernel: row " + std::to_string(x) + " sums to " + std::to_string(s));
        }
    }
}

FiniteKernel FiniteKernel::identity(std::size_t n) {
    const auto m = static_cast<Eigen::Index>(n);
    return FiniteKernel(Eigen::MatrixXd::Identity(m, m));
}

FiniteKernel FiniteKernel::rank_one(const FiniteMeasure& mu) {
    if (!mu.is_probability()) throw DomainError("rank_one: measure must be a probability");
    const auto n = static_cast<Eigen::Index>(mu.size());
    return FiniteKernel(Eigen::VectorXd::Ones(n) * mu.weights().transpose());
}

// ------------------------------------------------------------------- operations

FiniteFunction apply_kernel(const FiniteKernel& k, const FiniteFunction& f) {
    require_same_size(k.n_states(), f.size(), "apply_kernel");
    return FiniteFunction(k.matrix() * f.values());
}

FiniteKernel iterate_kernel(const FiniteKernel& k, int n) {
    if (n < 0) throw PreconditionError("iterate_kernel: n must be nonnegative");
    const auto size = static_cast<Eigen::Index>(k.n_states());
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(size, size);
    Eigen::MatrixXd base = k.matrix();
    for (unsigned e = static_cast<unsigned>(n); e != 0; e >>= 1) {
        if (e & 1u) result = result * base;
        if (e > 1) base = base * base;
    }
    return FiniteKernel(std::move(result), 1e-9);
}

void gth_stationary(const Eigen::MatrixXd& p, Eigen::MatrixXd& work, Eigen::VectorXd& out) {
    const Eigen::Index n = p.rows();
    work = p;
    for (Eigen::Index k = n - 1; k > 0; --k) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) s += work(k, j);
        if (!(s > 0.0)) throw ReducibilityError("stationary distribution: kernel is reducible");
        for (Eigen::Index i = 0; i < k; ++i) work(i, k) /= s;
        for (Eigen::Index j = 0; j < k; ++j) {
            const double wkj = work(k, j);
            if (wkj == 0.0) continue;
            for (Eigen::Index i = 0; i < k; ++i) work(i, j) += work(i, k) * wkj;
        }
    }
    out.resize(n);
    out[0] = 1.0;
    for (Eigen::Index k = 1; k < n; ++k) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) acc += out[i] * work(i, k);
        out[k] = acc;
    }
    out /= out.sum();
}

FiniteMeasure stationary_distribution(const FiniteKernel& k) {
    const auto n = static_cast<Eigen::Index>(k.n_states());
    if (n > 1) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) - k.matrix());
        lu.setThreshold(1e-10);
        if (lu.rank() < n - 1) {
            throw ReducibilityError("stationary distribution is not unique (rank of I - P is " +
                                    std::to_string(lu.rank()) + ")");
        }
    }
    Eigen::MatrixXd work;
    Eigen::VectorXd pi;
    gth_stationary(k.matrix(), work, pi);
    return FiniteMeasure(std::move(pi));
}

double stationarity_residual(const FiniteKernel& k, const Eigen::VectorXd& pi) {
    require_same_size(k.n_states(), static_cast<std::size_t>(pi.size()), "stationarity_residual");
    const Eigen::VectorXd diff = k.matrix().transpose() * pi - pi;
    return diff.cwiseAbs().sum();
}

double v_norm_function(const FiniteFunction& f, const FiniteFunction& v) {
    require_same_size(f.size(), v.size(), "v_norm_function");
    require_weight(v);
    double norm = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) norm = std::max(norm, std::fabs(f[i]) / v[i]);
    return norm;
}

double v_norm_measure(const Eigen::VectorXd& mu, const FiniteFunction& v) {
    require_same_size(static_cast<std::size_t>(mu.size()), v.size(), "v_norm_measure");
    require_weight(v);
    std::vector<double> terms(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) terms[i] = std::fabs(mu[static_cast<Eigen::Index>(i)]) * v[i];
    return stable_sum(std::move(terms));
}

double v_operator_norm(const Eigen::MatrixXd& m, const FiniteFunction& v) {
    if (m.rows() != m.cols()) throw ShapeError("v_operator_norm: matrix must be square");
    require_same_size(static_cast<std::size_t>(m.rows()), v.size(), "v_operator_norm");
    require_weight(v);
    std::vector<double> terms(v.size());
    double norm = 0.0;
    for (Eigen::Index x = 0; x < m.rows(); ++x) {
        for (Eigen::Index y = 0; y < m.cols(); ++y) {
            terms[static_cast<std::size_t>(y)] = std::fabs(m(x, y)) * v.values()[y];
        }
        norm = std::max(norm, stable_sum(std::span<const double>(terms)) / v.values()[x]);
    }
    return norm;
}

double v_distance_kernels(const FiniteKernel& k1, const FiniteKernel& k2, const FiniteFunction& v) {
    require_same_size(k1.n_states(), k2.n_states(), "v_distance_kernels");
    return v_operator_norm(k1.matrix() - k2.matrix(), v);
}

ErgodicityConstants fit_ergodicity_constants(const FiniteKernel& k, const FiniteMeasure& pi,
                                             const FiniteFunction& v, double alpha, int n_max) {
    require_same_size(k.n_states(), pi.size(), "fit_ergodicity_constants");
    require_same_size(k.n_states(), v.size(), "fit_ergodicity_constants");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw PreconditionError("fit_ergodicity_constants: alpha must lie in (0, 1]");
    if (n_max < 2) throw PreconditionError("fit_ergodicity_constants: n_max must be >= 2");
    require_weight(v);

    const FiniteFunction w = v.pow(alpha);
    const auto n = static_cast<Eigen::Index>(k.n_states());
    const Eigen::MatrixXd limit = Eigen::VectorXd::Ones(n) * pi.weights().transpose();

    ErgodicityConstants out;
    out.decay.reserve(static_cast<std::size_t>(n_max) + 1);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    out.decay.push_back(v_operator_norm(power - limit, w));
    for (int step = 1; step <= n_max; ++step) {
        power = power * k.matrix();
        out.decay.push_back(v_operator_norm(power - limit, w));
    }
    const std::vector<double>& d = out.decay;

    bool decreases = false;
    for (int i = 1; i < n_max; ++i) {
        if (d[static_cast<std::size_t>(i) + 1] < d[static_cast<std::size_t>(i)] * (1.0 - 1e-12)) {
            decreases = true;
            break;
        }
    }
    const double floor = kDecayRelativeFloor * std::max(1.0, d[0]);
    if (!decreases && d[1] > floor) {
        throw NonGeometricDecayError("||P^n - pi|| does not decrease over n = 1.." + std::to_string(n_max));
    }

    // Last n such that d_1..d_n all sit above the rounding floor.
    int resolved = 0;
    while (resolved < n_max && d[static_cast<std::size_t>(resolved) + 1] > floor) ++resolved;

    double rho = kRhoFloor;
    if (resolved == 1) {
        rho = d[1] / d[0];
    } else if (resolved >= 2) {
        const int start = std::min((resolved + 1) / 2, resolved - 1);
        std::vector<double> xs, ys;
        for (int i = start; i <= resolved; ++i) {
            xs.push_back(static_cast<double>(i));
            ys.push_back(std::log(d[static_cast<std::size_t>(i)]));
        }
        rho = std::exp(least_squares_slope(xs, ys));
    }
    rho = std::max(rho, kRhoFloor);
    if (!(rho < 1.0)) {
        throw NonGeometricDecayError("fitted decay rate " + std::to_string(rho) + " is not below 1");
    }

    double c = 0.0;
    for (int i = 0; i <= resolved; ++i) {
        c = std::max(c, d[static_cast<std::size_t>(i)] / std::pow(rho, i));
    }
    out.c = c;
    out.rho = rho;
    out.l = std::max(c, 1.0 / (1.0 - rho));
    return out;
}

double drift_violation(const FiniteKernel& k, const FiniteFunction& v, const DriftCertificate& cert,
                       double scale) {
    require_same_size(k.n_states(), v.size(), "drift_violation");
    const Eigen::VectorXd pv = k.matrix() * v.values();
    return (pv - cert.lambda * v.values()).maxCoeff() - cert.b * scale;
}

DriftCertificate fit_drift(const FiniteKernel& k, const FiniteFunction& v) {
    const FiniteKernel* kernels = &k;
    const double scale = 1.0;
    return fit_family_drift(std::span<const FiniteKernel>(kernels, 1), std::span<const double>(&scale, 1), v);
}

DriftCertificate fit_family_drift(std::span<const FiniteKernel> kernels, std::span<const double> scales,
                                  const FiniteFunction& v) {
    if (kernels.empty()) throw PreconditionError("fit_family_drift: empty kernel family");
    require_same_size(kernels.size(), scales.size(), "fit_family_drift");
    require_weight(v);
    std::vector<Eigen::VectorXd> pvs;
    pvs.reserve(kernels.size());
    for (const FiniteKernel& k : kernels) {
        require_same_size(k.n_states(), v.size(), "fit_family_drift");
        pvs.push_back(k.matrix() * v.values());
    }
    for (double s : scales) {
        if (!(s > 0.0)) throw DomainError("fit_family_drift: scales must be positive");
    }

    const DriftCertificate cert = select_drift([&](double lambda) {
        double b = 0.0;
        for (std::size_t i = 0; i < pvs.size(); ++i) {
            const double excess = (pvs[i] - lambda * v.values()).maxCoeff();
            b = std::max(b, excess / scales[i]);
        }
        return b;
    });

    for (std::size_t i = 0; i < kernels.size(); ++i) {
        if (drift_violation(kernels[i], v, cert, scales[i]) > 1e-10 * std::max(1.0, v.values().maxCoeff())) {
            throw InternalError("fit_drift: certificate failed re-verification");
        }
    }
    return cert;
}

}  // namespace imcmc
