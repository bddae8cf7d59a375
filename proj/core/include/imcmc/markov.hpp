#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace imcmc {

/// Real-valued function on {0, ..., n-1}. Entries are finite.
class FiniteFunction {
public:
    FiniteFunction() = default;
    explicit FiniteFunction(Eigen::VectorXd values);
    FiniteFunction(std::initializer_list<double> values);

    static FiniteFunction constant(std::size_t n, double value);
    static FiniteFunction indicator(std::size_t n, std::size_t state);

    std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
    double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
    const Eigen::VectorXd& values() const noexcept { return values_; }

    /// Pointwise power; used for V^alpha.
    FiniteFunction pow(double exponent) const;

    friend bool operator==(const FiniteFunction& a, const FiniteFunction& b) {
        return a.values_.size() == b.values_.size() && a.values_ == b.values_;
    }

private:
    Eigen::VectorXd values_;
};

/// Nonnegative measure on {0, ..., n-1}.
class FiniteMeasure {
public:
    FiniteMeasure() = default;
    explicit FiniteMeasure(Eigen::VectorXd weights);
    FiniteMeasure(std::initializer_list<double> weights);

    /// Normalizes nonnegative weights with positive total mass.
    static FiniteMeasure probability(Eigen::VectorXd weights);
    static FiniteMeasure uniform(std::size_t n);
    static FiniteMeasure dirac(std::size_t n, std::size_t state);

    std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.size()); }
    double operator[](std::size_t i) const { return weights_[static_cast<Eigen::Index>(i)]; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }
    double total_mass() const;
    bool is_probability(double tolerance = 1e-12) const;

    /// mu(f).
    double integrate(const FiniteFunction& f) const;

    friend bool operator==(const FiniteMeasure& a, const FiniteMeasure& b) {
        return a.weights_.size() == b.weights_.size() && a.weights_ == b.weights_;
    }

private:
    Eigen::VectorXd weights_;
};

/// Row-stochastic transition matrix on a finite state space.
class FiniteKernel {
public:
    FiniteKernel() = default;
    /// Validates squareness, nonnegativity and unit row sums within `tolerance`.
    explicit FiniteKernel(Eigen::MatrixXd rows, double tolerance = 1e-12);

    static FiniteKernel identity(std::size_t n);
    /// Every row equal to `mu`.
    static FiniteKernel rank_one(const FiniteMeasure& mu);

    std::size_t n_states() const noexcept { return static_cast<std::size_t>(rows_.rows()); }
    double operator()(std::size_t x, std::size_t y) const {
        return rows_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
    }
    const Eigen::MatrixXd& matrix() const noexcept { return rows_; }

    friend bool operator==(const FiniteKernel& a, const FiniteKernel& b) {
        return a.rows_.rows() == b.rows_.rows() && a.rows_ == b.rows_;
    }

private:
    Eigen::MatrixXd rows_;
};

/// Fitted geometric-ergodicity constants: ||P^n - pi||_{V^alpha} <= c * rho^n
/// for every inspected n, and l = max(c, 1 / (1 - rho)).
struct ErgodicityConstants {
    double c = 1.0;
    double rho = 0.5;
    double l = 2.0;
    /// d_n = ||P^n - pi||_{V^alpha} for n = 0..n_max.
    std::vector<double> decay;
};

/// Certified drift inequality P V <= lambda V + b at every state.
struct DriftCertificate {
    double lambda = 0.5;
    double b = 0.0;
};

FiniteFunction apply_kernel(const FiniteKernel& k, const FiniteFunction& f);

/// P^n by binary powering; P^0 is the identity.
FiniteKernel iterate_kernel(const FiniteKernel& k, int n);

/// Unique pi with pi P = pi, by Grassmann-Taksar-Heyman elimination.
/// Throws ReducibilityError when (I - P) has rank below n - 1.
FiniteMeasure stationary_distribution(const FiniteKernel& k);

/// Unchecked GTH elimination on a row-stochastic matrix; `work` is scratch.
/// For hot loops where the kernel is irreducible by construction.
void gth_stationary(const Eigen::MatrixXd& p, Eigen::MatrixXd& work, Eigen::VectorXd& out);

/// ||pi P - pi||_1.
double stationarity_residual(const FiniteKernel& k, const Eigen::VectorXd& pi);

/// max_x |f(x)| / v(x). Throws DomainError if v < 1 somewhere.
double v_norm_function(const FiniteFunction& f, const FiniteFunction& v);

/// sum_x |mu(x)| v(x) for a signed measure given by its weights.
double v_norm_measure(const Eigen::VectorXd& mu, const FiniteFunction& v);

/// Induced operator norm max_x v(x)^{-1} sum_y |m(x,y)| v(y) of a signed kernel.
double v_operator_norm(const Eigen::MatrixXd& m, const FiniteFunction& v);

/// V-distance between two kernels: v_operator_norm(k1 - k2, v).
double v_distance_kernels(const FiniteKernel& k1, const FiniteKernel& k2, const FiniteFunction& v);

/// Fits (C, rho) from d_n = ||P^n - pi||_{V^alpha}, n = 0..n_max.
///
/// rho is the least-squares geometric rate of log d_n over the tail half of
/// the numerically resolved range (d_n above a 1e-12 relative floor), with
/// floor 1e-6. C is the smallest constant with d_n <= C rho^n at every
/// resolved n, n = 0 included, so the bound is certified on that range.
/// Throws NonGeometricDecayError when d_n never decreases.
ErgodicityConstants fit_ergodicity_constants(const FiniteKernel& k, const FiniteMeasure& pi,
                                             const FiniteFunction& v, double alpha, int n_max);

/// Drift certificate over lambda in {0.05, ..., 0.95}, minimizing b / (1 - lambda).
DriftCertificate fit_drift(const FiniteKernel& k, const FiniteFunction& v);

/// Shared constants for a kernel family: P_i V <= lambda V + b * scale_i for all i.
/// Same grid and objective as fit_drift.
DriftCertificate fit_family_drift(std::span<const FiniteKernel> kernels,
                                  std::span<const double> scales, const FiniteFunction& v);

/// Maximum violation max_x (P V - lambda V - b)(x); <= 0 means certified.
double drift_violation(const FiniteKernel& k, const FiniteFunction& v, const DriftCertificate& cert,
                       double scale = 1.0);

}  // namespace imcmc
