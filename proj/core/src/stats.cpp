#include "imcmc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "imcmc/errors.hpp"
#include "imcmc/numeric.hpp"

namespace imcmc {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double sample_variance(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) throw PreconditionError("sample_variance: need at least two values");
    const double mean = stable_sum(values) / static_cast<double>(n);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (values[i] - mean) * (values[i] - mean);
    return stable_sum(std::move(sq)) / static_cast<double>(n - 1);
}

double ks_distance(std::span<const double> samples) {
    const std::size_t n = samples.size();
    if (n < 2) throw PreconditionError("ks_distance: need at least two samples");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const double dn = static_cast<double>(n);
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double cdf = normal_cdf(s[i]);
        d = std::max({d, static_cast<double>(i + 1) / dn - cdf, cdf - static_cast<double>(i) / dn});
    }
    return std::min(d, 1.0);
}

double ks_critical_value(std::size_t n_samples, double coefficient) {
    return coefficient / std::sqrt(static_cast<double>(n_samples));
}

double batch_means_variance(std::span<const double> values, std::size_t n_batches) {
    if (n_batches < 10) throw PreconditionError("batch_means_variance: need at least 10 batches");
    const std::size_t b = values.size() / n_batches;
    if (b == 0) throw PreconditionError("batch_means_variance: fewer values than batches");
    std::vector<double> means(n_batches);
    for (std::size_t j = 0; j < n_batches; ++j) {
        means[j] = stable_sum(values.subspan(j * b, b)) / static_cast<double>(b);
    }
    return static_cast<double>(b) * sample_variance(means);
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ShapeError("log_log_slope: size mismatch");
    const std::size_t start = x.size() >= 4 ? x.size() / 2 : 0;
    std::vector<double> lx, ly;
    for (std::size_t i = start; i < x.size(); ++i) {
        if (y[i] == 0.0 || !(x[i] > 0.0)) continue;
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(std::abs(y[i])));
    }
    if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    return least_squares_slope(lx, ly);
}

}  // namespace imcmc
