#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "imcmc/markov.hpp"
#include "imcmc/rng.hpp"

namespace imcmc {

/// Occupation measure theta_n = n^{-1} sum_{k<=n} delta_{Y_k} of a finite-state
/// auxiliary process. Append-only; O(1) append, O(1) uniform draw from the
/// past, and per-state counters for exact evaluation.
class EmpiricalMeasure {
public:
    explicit EmpiricalMeasure(std::size_t n_states);

    void append(std::size_t y);

    std::size_t n_states() const noexcept { return counts_.size(); }
    std::uint64_t count() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    std::span<const std::uint32_t> samples() const noexcept { return samples_; }
    std::span<const std::uint64_t> counts() const noexcept { return counts_; }

    /// theta_n(f).
    double evaluate(const FiniteFunction& f) const;

    /// Normalized weights counts / n.
    FiniteMeasure normalized() const;
    void normalized_into(Eigen::VectorXd& out) const;

    /// samples[U] with U uniform on {0, ..., n-1}; one variate.
    /// Throws PreconditionError on an empty measure.
    std::size_t uniform_draw(RngStream& rng) const;

private:
    std::vector<std::uint32_t> samples_;
    std::vector<std::uint64_t> counts_;
};

/// Occupation measure of a continuous auxiliary process; samples stored
/// contiguously.
class PointCloudMeasure {
public:
    explicit PointCloudMeasure(std::size_t dimension);

    void append(std::span<const double> y);

    std::size_t dimension() const noexcept { return dimension_; }
    std::uint64_t count() const noexcept { return dimension_ == 0 ? 0 : coords_.size() / dimension_; }
    std::span<const double> at(std::size_t i) const;

    std::span<const double> uniform_draw(RngStream& rng) const;

private:
    std::size_t dimension_;
    std::vector<double> coords_;
};

}  // namespace imcmc
