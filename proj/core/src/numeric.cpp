#include "imcmc/numeric.hpp"

#include <algorithm>
#include <cmath>

#include "imcmc/errors.hpp"

namespace imcmc {

double stable_sum(std::vector<double> terms) {
    std::sort(terms.begin(), terms.end(), [](double a, double b) {
        const double fa = std::fabs(a), fb = std::fabs(b);
        return fa < fb || (fa == fb && a < b);
    });
    double sum = 0.0;
    double compensation = 0.0;
    for (double t : terms) {
        const double next = sum + t;
        if (std::fabs(sum) >= std::fabs(t)) {
            compensation += (sum - next) + t;
        } else {
            compensation += (t - next) + sum;
        }
        sum = next;
    }
    return sum + compensation;
}

double stable_sum(std::span<const double> terms) {
    return stable_sum(std::vector<double>(terms.begin(), terms.end()));
}

double expectation(const Eigen::VectorXd& mu, const Eigen::VectorXd& f) {
    if (mu.size() != f.size()) throw ShapeError("expectation: measure/function size mismatch");
    if (f.size() == 0) return 0.0;
    const double shift = f[0];
    double acc = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) acc += mu[i] * (f[i] - shift);
    return shift + acc;
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw PreconditionError("least_squares_slope: need >= 2 paired points");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw PreconditionError("least_squares_slope: degenerate abscissae");
    return sxy / sxx;
}

}  // namespace imcmc
