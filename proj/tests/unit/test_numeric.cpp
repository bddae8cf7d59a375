#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "imcmc/numeric.hpp"

using namespace imcmc;

TEST(StableSum, IndependentOfOrder) {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> d(0.0, 1e6);
    std::vector<double> v(1000);
    for (auto& x : v) x = d(gen);
    const double a = stable_sum(v);
    std::shuffle(v.begin(), v.end(), gen);
    EXPECT_EQ(a, stable_sum(v));
}

TEST(StableSum, RecoversCancellingTerms) {
    EXPECT_EQ(stable_sum(std::vector<double>{1e16, 1.0, -1e16}), 1.0);
}

TEST(CompensatedSum, RecoversSmallTermsNextToLargeOnes) {
    CompensatedSum s;
    s.add(1e16);
    for (int i = 0; i < 10; ++i) s.add(1.0);
    s.add(-1e16);
    EXPECT_EQ(s.value(), 10.0);
}

TEST(Expectation, ConstantFunctionIsExact) {
    Eigen::VectorXd mu(3);
    mu << 0.1, 0.2, 0.7;
    EXPECT_EQ(expectation(mu, Eigen::VectorXd::Constant(3, 0.3)), 0.3);
}

TEST(LeastSquaresSlope, RecoversLine) {
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<double> y{3, 5, 7, 9};
    EXPECT_NEAR(least_squares_slope(x, y), 2.0, 1e-14);
}
