#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <boost/math/distributions/binomial.hpp>
#include <gtest/gtest.h>

#include "bnq/errors.hpp"
#include "bnq/forest.hpp"

using namespace bnq;

namespace {

// Columns x0..x{p-1} ~ N(0,1) plus response y = f(x) + noise_sd * N(0,1).
template <class F>
Dataset synthetic(int n, int p, double noise_sd, std::uint64_t seed, F f) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::MatrixXd m(n, p + 1);
    std::vector<std::string> names;
    for (int j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
    names.push_back("y");
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) m(i, j) = z(rng);
        m(i, p) = f(m.row(i).head(p)) + noise_sd * z(rng);
    }
    return Dataset(VariableSet(names), m);
}

ForestConfig small(int ntree, std::uint64_t seed, int mtry = 0) {
    ForestConfig cfg;
    cfg.ntree = ntree;
    cfg.seed = seed;
    cfg.mtry = mtry;
    return cfg;
}

}  // namespace

TEST(Forest, ConstantResponse) {
    const auto data = synthetic(60, 3, 0.0, 1, [](const auto&) { return 4.25; });
    const auto model = fit_forest(data, "y", small(20, 1));
    const auto pred = model.predict_rows(data.select_columns({"x0", "x1", "x2"}).rows());
    for (Eigen::Index i = 0; i < pred.size(); ++i) EXPECT_DOUBLE_EQ(pred(i), 4.25);
}

TEST(Forest, NoiselessIdentityHasHighOobR2) {
    const auto data = synthetic(500, 1, 0.0, 2, [](const auto& x) { return x(0); });
    EXPECT_GE(fit_forest(data, "y", small(100, 2)).oob_r2(), 0.9);
}

TEST(Forest, PureNoiseHasLowOobR2) {
    int low = 0;
    for (int r = 0; r < 50; ++r) {
        const auto data = synthetic(200, 3, 1.0, 100 + static_cast<std::uint64_t>(r), [](const auto&) { return 0.0; });
        low += fit_forest(data, "y", small(60, static_cast<std::uint64_t>(r))).oob_r2() <= 0.1 ? 1 : 0;
    }
    EXPECT_GE(low, 45);
}

TEST(Forest, PredictionIsMeanOfTreesAndOobUsesOnlyOutOfBagTrees) {
    const auto data = synthetic(80, 3, 0.5, 3, [](const auto& x) { return x(0) - x(1); });
    const auto model = fit_forest(data, "y", small(25, 3));
    const Eigen::MatrixXd x = data.select_columns({"x0", "x1", "x2"}).rows();
    for (Eigen::Index i = 0; i < 80; ++i) {
        double sum = 0.0, oob_sum = 0.0;
        int oob_count = 0;
        for (std::size_t t = 0; t < model.trees().size(); ++t) {
            const double p = model.trees()[t].predict(x.row(i));
            sum += p;
            if (model.inbag(t)[static_cast<std::size_t>(i)] == 0) oob_sum += p, ++oob_count;
        }
        EXPECT_DOUBLE_EQ(model.predict(x.row(i)), sum / 25.0);
        if (oob_count == 0) {
            EXPECT_TRUE(std::isnan(model.oob_predictions()(i)));
        } else {
            EXPECT_NEAR(model.oob_predictions()(i), oob_sum / oob_count, 1e-12);
        }
    }
    for (std::size_t t = 0; t < model.trees().size(); ++t) {
        int drawn = 0;
        for (int c : model.inbag(t)) drawn += c;
        EXPECT_EQ(drawn, 80);
    }
}

TEST(Forest, DeterministicAndSchedulingIndependent) {
    const auto data = synthetic(100, 4, 0.5, 4, [](const auto& x) { return x(0) * x(1); });
    auto cfg = small(30, 9);
    const auto a = fit_forest(data, "y", cfg);
    cfg.jobs = 3;
    const auto b = fit_forest(data, "y", cfg);
    EXPECT_EQ(a.oob_r2(), b.oob_r2());
    EXPECT_EQ(a.impurity_importance(), b.impurity_importance());
}

TEST(Forest, Validation) {
    const auto data = synthetic(9, 2, 1.0, 5, [](const auto&) { return 0.0; });
    EXPECT_THROW(fit_forest(data, "y", small(10, 1)), InsufficientRows);
    const auto ok = synthetic(40, 2, 1.0, 5, [](const auto&) { return 0.0; });
    EXPECT_THROW(fit_forest(ok, "y", small(10, 1, 3)), ConfigError);
    EXPECT_THROW(fit_forest(ok, "y", small(0, 1)), ConfigError);
    EXPECT_THROW(fit_forest(ok, "nope", small(10, 1)), VariableMismatch);
}

TEST(Importance, InformativeBeatsIrrelevant) {
    int wins = 0;
    for (int r = 0; r < 50; ++r) {
        const auto data = synthetic(200, 2, 1.0, 200 + static_cast<std::uint64_t>(r), [](const auto& x) { return 3 * x(0); });
        const auto model = fit_forest(data, "y", small(60, static_cast<std::uint64_t>(r), 1));
        const auto rep = permutation_importance(model, data, 1, static_cast<std::uint64_t>(r));
        wins += rep.importance[0] > rep.importance[1] ? 1 : 0;
        EXPECT_EQ(rep.rank[0], 1);
    }
    EXPECT_GE(wins, 48);
}

TEST(Importance, IrrelevantPredictorsCentreOnZero) {
    int positive = 0;
    const int runs = 50;
    for (int r = 0; r < runs; ++r) {
        const auto data = synthetic(150, 3, 1.0, 300 + static_cast<std::uint64_t>(r), [](const auto&) { return 0.0; });
        const auto model = fit_forest(data, "y", small(50, static_cast<std::uint64_t>(r)));
        positive += permutation_importance(model, data, 1, static_cast<std::uint64_t>(r)).importance[0] > 0 ? 1 : 0;
    }
    const boost::math::binomial_distribution<double> null(runs, 0.5);
    const double lo = boost::math::cdf(null, positive), hi = boost::math::cdf(boost::math::complement(null, positive - 1));
    const double sign_test_p = std::min(1.0, 2 * std::min(lo, hi));
    RecordProperty("positive_count", positive);
    EXPECT_GT(sign_test_p, 0.01);
}

TEST(Importance, DuplicateInformativeRanksAboveNoise) {
    auto data = synthetic(300, 4, 0.5, 6, [](const auto& x) { return 2 * x(0); });
    Eigen::MatrixXd m = data.rows();
    m.col(1) = m.col(0);
    data = Dataset(data.variables(), m);
    const auto model = fit_forest(data, "y", small(80, 6));
    const auto rep = permutation_importance(model, data, 2, 6);
    EXPECT_LE(std::max(rep.rank[0], rep.rank[1]), 2);
    std::set<int> ranks(rep.rank.begin(), rep.rank.end());
    EXPECT_EQ(ranks, (std::set<int>{1, 2, 3, 4}));
    EXPECT_NE(importance_csv(rep).find("predictor"), std::string::npos);
}

TEST(Tune, FoldsAreReproducibleAndBalanced) {
    EXPECT_EQ(cv_folds(31, 2, 7, 3), cv_folds(31, 2, 7, 3));
    EXPECT_NE(cv_folds(31, 2, 7, 3), cv_folds(31, 2, 7, 4));
    const auto f = cv_folds(31, 3, 1, 0);
    for (int k = 0; k < 3; ++k) {
        const auto c = std::count(f.begin(), f.end(), k);
        EXPECT_GE(c, 10);
        EXPECT_LE(c, 11);
    }
}

TEST(Tune, SingleCellIsBest) {
    const auto data = synthetic(80, 2, 0.5, 7, [](const auto& x) { return x(0); });
    CvSpec cv;
    cv.repeats = 2;
    const auto result = tune_forest(data, "y", {{30, 1}}, cv);
    ASSERT_EQ(result.cells.size(), 1u);
    EXPECT_EQ(result.best, 0u);
    const auto csv = tune_result_csv(result);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "ntree,mtry,mean_r2,sd_r2,best");
}

TEST(Tune, FullMtryWinsWhenSignalIsConcentrated) {
    const auto data = synthetic(300, 6, 0.3, 8, [](const auto& x) { return 3 * x(0) + x(1); });
    CvSpec cv;
    cv.repeats = 3;
    const auto result = tune_forest(data, "y", {{100, 1}, {100, 6}}, cv);
    EXPECT_EQ(result.best_cell().mtry, 6);
    for (const auto& c : result.cells) EXPECT_GT(c.sd_r2, 0.0);
}

TEST(Ablation, InformativeVersusIrrelevant) {
    const auto data = synthetic(200, 3, 0.5, 9, [](const auto& x) { return 2 * x(0); });
    CvSpec cv;
    cv.repeats = 3;
    const auto irrelevant = ablate_predictor(data, "y", "x2", small(60, 9), cv);
    EXPECT_NEAR(irrelevant.with_mean, irrelevant.without_mean, 3 * std::max(irrelevant.with_sd, 0.02));
    const auto informative = ablate_predictor(data, "y", "x0", small(60, 9), cv);
    EXPECT_GT(informative.with_mean, 0.5);
    EXPECT_LE(informative.without_mean, 0.05);
}

TEST(PowerLaw, ExactSquare) {
    Eigen::MatrixXd m(6, 2);
    for (int i = 0; i < 6; ++i) m(i, 0) = i + 1.0, m(i, 1) = (i + 1.0) * (i + 1.0);
    const Dataset data(VariableSet{"x", "y"}, m);
    const auto fit = fit_power_law(data, "y", "x");
    EXPECT_NEAR(fit.exponent, 2.0, 1e-12);
    EXPECT_LT(fit.ci_high - fit.ci_low, 1e-9);
    Eigen::MatrixXd scaled = m;
    scaled.col(0) *= 37.5;
    EXPECT_NEAR(fit_power_law(Dataset(data.variables(), scaled), "y", "x").exponent, 2.0, 1e-12);
    m(2, 1) = 0.0;
    EXPECT_THROW(fit_power_law(Dataset(data.variables(), m), "y", "x"), NonPositiveValue);
}

TEST(PowerLaw, ScaleInvarianceWithNoiseAndControls) {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> z;
    Eigen::MatrixXd m(100, 3);
    for (int i = 0; i < 100; ++i) {
        m(i, 0) = std::exp(2 + z(rng));
        m(i, 1) = z(rng);
        m(i, 2) = 3 * std::pow(m(i, 0), 1.3) * std::exp(0.2 * m(i, 1) + 0.3 * z(rng));
    }
    const Dataset data(VariableSet{"x", "c", "y"}, m);
    const auto base = fit_power_law(data, "y", "x", {"c"});
    Eigen::MatrixXd scaled = m;
    scaled.col(0) *= 1000;
    const auto moved = fit_power_law(Dataset(data.variables(), scaled), "y", "x", {"c"});
    EXPECT_NEAR(base.exponent, moved.exponent, 1e-10);
    EXPECT_NEAR(base.std_error, moved.std_error, 1e-10);
    EXPECT_LT(base.ci_low, base.exponent);
    EXPECT_GT(base.ci_high, base.exponent);
}

TEST(PowerLaw, CoverageOfLinearModel) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z;
    int covered = 0;
    for (int r = 0; r < 400; ++r) {
        Eigen::MatrixXd m(40, 2);
        for (int i = 0; i < 40; ++i) {
            m(i, 0) = std::exp(1 + z(rng));
            m(i, 1) = 2.5 * m(i, 0) * std::exp(0.4 * z(rng));
        }
        const auto fit = fit_power_law(Dataset(VariableSet{"x", "y"}, m), "y", "x");
        covered += (fit.ci_low <= 1.0 && 1.0 <= fit.ci_high) ? 1 : 0;
    }
    EXPECT_NEAR(covered / 400.0, 0.95, 0.035);
}
