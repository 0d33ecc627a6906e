#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bnq/errors.hpp"
#include "bnq/stats.hpp"
#include "oracles.hpp"

using namespace bnq;

TEST(Ols, PerfectFit) {
    Eigen::MatrixXd x(4, 1);
    x << 1, 2, 3, 4;
    Eigen::VectorXd y(4);
    y << 2, 4, 6, 8;
    const auto r = ols(x, y);
    EXPECT_NEAR(r.coefficients(1), 2.0, 1e-12);
    EXPECT_NEAR(r.coefficients(0), 0.0, 1e-12);
    EXPECT_LT(r.p_values(1), 1e-10);
    EXPECT_DOUBLE_EQ(r.adjusted_r2, 1.0);
}

TEST(Ols, MatchesNormalEquationsOracle) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd x(50, 3);
        Eigen::VectorXd y(50);
        for (int i = 0; i < 50; ++i) {
            for (int j = 0; j < 3; ++j) x(i, j) = z(rng);
            y(i) = 1.0 + 0.5 * x(i, 0) - x(i, 2) + z(rng);
        }
        std::vector<long double> beta;
        const long double rss = oracle::normal_equations_rss(x, y, &beta);
        const auto r = ols(x, y);
        for (int j = 0; j < 4; ++j) EXPECT_NEAR(r.coefficients(j), static_cast<double>(beta[j]), 1e-10);
        EXPECT_NEAR(r.rss, static_cast<double>(rss), 1e-9);
        EXPECT_EQ(r.df_residual, 46);
    }
}

TEST(Ols, Errors) {
    Eigen::MatrixXd x(5, 2);
    x.col(0) << 1, 2, 3, 4, 5;
    x.col(1) = 2 * x.col(0);
    Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(5, 0, 1);
    EXPECT_THROW(ols(x, y), RankDeficient);
    EXPECT_THROW(ols(x.topRows(3), y.head(3)), InsufficientRows);
}

TEST(Distributions, StudentTKnownValues) {
    // t_{0.975, 10} = 2.228138851986...
    EXPECT_NEAR(student_t_two_sided_p(2.228138851986, 10), 0.05, 1e-10);
    EXPECT_NEAR(student_t_quantile(0.975, 10), 2.228138851986, 1e-9);
    // With one degree of freedom the t is Cauchy: P(|T| > 1) = 0.5.
    EXPECT_NEAR(student_t_two_sided_p(1.0, 1), 0.5, 1e-12);
    EXPECT_NEAR(normal_two_sided_p(1.959963984540054), 0.05, 1e-12);
    EXPECT_DOUBLE_EQ(student_t_two_sided_p(0.0, 5), 1.0);
}

TEST(Summaries, QuantileMeanSd) {
    EXPECT_DOUBLE_EQ(quantile_type7({1, 2, 3, 4}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile_type7({1, 2, 3, 4}, 0.9), 3.7);
    EXPECT_DOUBLE_EQ(quantile_type7({5}, 0.3), 5.0);
    EXPECT_DOUBLE_EQ(mean({1, 2, 3}), 2.0);
    EXPECT_DOUBLE_EQ(sample_sd({1, 2, 3}), 1.0);
    EXPECT_DOUBLE_EQ(sample_sd({4}), 0.0);
}

TEST(Summaries, KsDistance) {
    EXPECT_DOUBLE_EQ(ks_distance_uniform({0.5}), 0.5);
    std::vector<double> grid;
    for (int i = 0; i < 100; ++i) grid.push_back((i + 0.5) / 100.0);
    EXPECT_NEAR(ks_distance_uniform(grid), 0.005, 1e-12);
}
