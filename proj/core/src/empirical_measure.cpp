#include "imcmc/empirical_measure.hpp"

#include "imcmc/errors.hpp"

namespace imcmc {

EmpiricalMeasure::EmpiricalMeasure(std::size_t n_states) : counts_(n_states, 0) {
    if (n_states == 0) throw ShapeError("EmpiricalMeasure: empty state space");
}

void EmpiricalMeasure::append(std::size_t y) {
    if (y >= counts_.size()) throw ShapeError("EmpiricalMeasure::append: state out of range");
    samples_.push_back(static_cast<std::uint32_t>(y));
    ++counts_[y];
}

double EmpiricalMeasure::evaluate(const FiniteFunction& f) const {
    if (f.size() != counts_.size()) throw ShapeError("EmpiricalMeasure::evaluate: size mismatch");
    if (empty()) throw PreconditionError("EmpiricalMeasure::evaluate: empty measure");
    const double shift = f[0];
    double acc = 0.0;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        acc += static_cast<double>(counts_[i]) * (f[i] - shift);
    }
    return shift + acc / static_cast<double>(count());
}

void EmpiricalMeasure::normalized_into(Eigen::VectorXd& out) const {
    if (empty()) throw PreconditionError("EmpiricalMeasure: empty measure has no normalization");
    out.resize(static_cast<Eigen::Index>(counts_.size()));
    const double n = static_cast<double>(count());
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = static_cast<double>(counts_[i]) / n;
    }
}

FiniteMeasure EmpiricalMeasure::normalized() const {
    Eigen::VectorXd w;
    normalized_into(w);
    return FiniteMeasure(std::move(w));
}

std::size_t EmpiricalMeasure::uniform_draw(RngStream& rng) const {
    if (empty()) throw PreconditionError("uniform_draw: empty empirical measure");
    return samples_[rng.uniform_index(samples_.size())];
}

PointCloudMeasure::PointCloudMeasure(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw ShapeError("PointCloudMeasure: dimension must be positive");
}

void PointCloudMeasure::append(std::span<const double> y) {
    if (y.size() != dimension_) throw ShapeError("PointCloudMeasure::append: dimension mismatch");
    coords_.insert(coords_.end(), y.begin(), y.end());
}

std::span<const double> PointCloudMeasure::at(std::size_t i) const {
    if (i >= count()) throw ShapeError("PointCloudMeasure::at: index out of range");
    return {coords_.data() + i * dimension_, dimension_};
}

std::span<const double> PointCloudMeasure::uniform_draw(RngStream& rng) const {
    if (count() == 0) throw PreconditionError("uniform_draw: empty empirical measure");
    return at(static_cast<std::size_t>(rng.uniform_index(count())));
}

}  // namespace imcmc
