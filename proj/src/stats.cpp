#include "bnq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "bnq/errors.hpp"

namespace bnq {

OlsResult ols(const Eigen::MatrixXd& predictors, const Eigen::VectorXd& response) {
    const auto n = predictors.rows();
    const auto k = predictors.cols() + 1;
    if (response.size() != n) throw std::invalid_argument("response length differs from predictor rows");
    if (n < k + 1) {
        throw InsufficientRows("OLS with " + std::to_string(k - 1) + " predictors needs at least " +
                               std::to_string(k + 1) + " rows, got " + std::to_string(n));
    }
    Eigen::MatrixXd design(n, k);
    design.col(0).setOnes();
    design.rightCols(k - 1) = predictors;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < k) throw RankDeficient("design matrix is rank deficient");

    OlsResult out;
    out.n = static_cast<std::size_t>(n);
    out.df_residual = static_cast<int>(n - k);
    out.coefficients = qr.solve(response);
    out.residuals = response - design * out.coefficients;
    out.rss = out.residuals.squaredNorm();
    out.tss = (response.array() - response.mean()).matrix().squaredNorm();
    // Residual norms at rounding level are an exact fit.
    if (out.rss <= 1e-24 * std::max(out.tss, response.squaredNorm())) out.rss = 0.0;

    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd unscaled_pivoted = r_inv * r_inv.transpose();
    const auto& perm = qr.colsPermutation();
    const Eigen::MatrixXd unscaled = perm * unscaled_pivoted * perm.transpose();

    const double sigma2 = out.rss / out.df_residual;
    out.std_errors = (sigma2 * unscaled.diagonal().array()).sqrt();
    out.t_values.resize(k);
    out.p_values.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const double se = out.std_errors(j);
        const double b = out.coefficients(j);
        if (se == 0.0) {
            out.t_values(j) = b == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b);
            out.p_values(j) = b == 0.0 ? 1.0 : 0.0;
        } else {
            out.t_values(j) = b / se;
            out.p_values(j) = student_t_two_sided_p(out.t_values(j), out.df_residual);
        }
    }
    if (out.tss == 0.0) {
        out.r2 = out.rss == 0.0 ? 1.0 : 0.0;
    } else {
        out.r2 = 1.0 - out.rss / out.tss;
    }
    const double nn = static_cast<double>(n);
    out.adjusted_r2 = out.rss == 0.0 ? 1.0 : 1.0 - (1.0 - out.r2) * (nn - 1.0) / out.df_residual;
    return out;
}

double student_t_two_sided_p(double t, double df) {
    if (std::isnan(t)) return 1.0;
    if (std::isinf(t)) return 0.0;
    boost::math::students_t dist(df);
    const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
    return std::clamp(p, 0.0, 1.0);
}

double student_t_quantile(double probability, double df) {
    boost::math::students_t dist(df);
    return boost::math::quantile(dist, probability);
}

double normal_two_sided_p(double z) {
    if (std::isnan(z)) return 1.0;
    if (std::isinf(z)) return 0.0;
    boost::math::normal dist;
    return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(z))), 0.0, 1.0);
}

double quantile_type7(std::vector<double> values, double probability) {
    if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * probability;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = h - static_cast<double>(lo);
    if (frac == 0.0 || values[lo] == values[hi]) return values[lo];
    if (std::isinf(values[hi])) return values[hi];
    return values[lo] + frac * (values[hi] - values[lo]);
}

double mean(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_sd(const std::vector<double>& values) {
    if (values.size() < 2) return 0.0;
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double ks_distance_uniform(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = std::clamp(values[i], 0.0, 1.0);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - x, x - static_cast<double>(i) / n});
    }
    return d;
}

}  // namespace bnq
