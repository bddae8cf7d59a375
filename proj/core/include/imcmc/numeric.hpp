#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace imcmc {

/// Order-independent sum: terms are sorted by magnitude and accumulated with
/// Neumaier compensation, so the result does not depend on input order.
double stable_sum(std::span<const double> terms);
double stable_sum(std::vector<double> terms);

/// Running Neumaier-compensated sum, for streams too long to buffer.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// mu(f) for a probability vector mu. Values are shifted by f[0] before
/// weighting so that a constant f integrates to exactly that constant.
double expectation(const Eigen::VectorXd& mu, const Eigen::VectorXd& f);

/// Least-squares slope of y against x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

}  // namespace imcmc
