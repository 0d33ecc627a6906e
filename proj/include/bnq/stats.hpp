#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace bnq {

/// Ordinary least squares with an intercept, solved by column-pivoted
/// Householder QR. Index 0 of every coefficient vector is the intercept.
struct OlsResult {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd std_errors;
    Eigen::VectorXd t_values;
    Eigen::VectorXd p_values;
    Eigen::VectorXd residuals;
    double rss = 0.0;
    double tss = 0.0;
    double r2 = 0.0;
    double adjusted_r2 = 0.0;
    std::size_t n = 0;
    int df_residual = 0;
};

/// Throws RankDeficient for a singular design and InsufficientRows when fewer
/// than predictors + 2 observations are supplied.
OlsResult ols(const Eigen::MatrixXd& predictors, const Eigen::VectorXd& response);

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);
/// Quantile of Student's t distribution.
double student_t_quantile(double probability, double df);
/// Two-sided p-value of a standard normal statistic.
double normal_two_sided_p(double z);

/// Type-7 quantile (linear interpolation between order statistics).
double quantile_type7(std::vector<double> values, double probability);

double mean(const std::vector<double>& values);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_sd(const std::vector<double>& values);

/// Kolmogorov-Smirnov distance between the empirical CDF of `values` and U(0,1).
double ks_distance_uniform(std::vector<double> values);

}  // namespace bnq
