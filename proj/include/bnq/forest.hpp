#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bnq/dataset.hpp"

namespace bnq {

struct ForestConfig {
    int ntree = 500;
    int mtry = 0;  ///< 0 selects max(1, p / 3)
    int min_leaf = 5;
    std::uint64_t seed = 0;
    int jobs = 1;

    /// Throws ConfigError unless ntree >= 1, min_leaf >= 1 and mtry <= predictors.
    void validate(std::size_t predictors) const;
    int effective_mtry(std::size_t predictors) const;
};

struct TreeNode {
    int feature = -1;  ///< -1 marks a leaf
    double threshold = 0.0;  ///< rows with x <= threshold go left
    int left = -1;
    int right = -1;
    double value = 0.0;
};

class RegressionTree {
public:
    explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}
    double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }

private:
    std::vector<TreeNode> nodes_;
};

class ForestModel {
public:
    const std::vector<std::string>& predictors() const noexcept { return predictors_; }
    const std::string& response() const noexcept { return response_; }
    const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
    /// inbag(t)[i] = number of times row i was drawn for tree t.
    const std::vector<int>& inbag(std::size_t tree) const { return inbag_.at(tree); }

    /// Mean of the trees' predictions.
    double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    Eigen::VectorXd predict_rows(const Eigen::MatrixXd& x) const;

    /// Out-of-bag prediction per training row; NaN for rows in every bootstrap.
    const Eigen::VectorXd& oob_predictions() const noexcept { return oob_; }
    /// 1 - SSE/SST over rows with an out-of-bag prediction.
    double oob_r2() const noexcept { return oob_r2_; }
    double oob_mse() const noexcept { return oob_mse_; }
    /// Total variance reduction attributed to each predictor, averaged over trees.
    const Eigen::VectorXd& impurity_importance() const noexcept { return impurity_; }

private:
    friend ForestModel fit_forest(const Eigen::MatrixXd&, const Eigen::VectorXd&, std::vector<std::string>,
                                  std::string, const ForestConfig&);
    std::vector<std::string> predictors_;
    std::string response_;
    std::vector<RegressionTree> trees_;
    std::vector<std::vector<int>> inbag_;
    Eigen::VectorXd oob_;
    Eigen::VectorXd impurity_;
    double oob_r2_ = 0.0;
    double oob_mse_ = 0.0;
};

/// Bagged CART regression trees with variance-reduction splits.
/// Throws InsufficientRows when n < 2 * min_leaf.
ForestModel fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> predictors,
                       std::string response, const ForestConfig& cfg);
/// Uses every column except `response` as a predictor.
ForestModel fit_forest(const Dataset& data, const std::string& response, const ForestConfig& cfg);

struct ImportanceReport {
    std::vector<std::string> predictors;
    std::vector<double> importance;  ///< mean increase in OOB squared error
    std::vector<double> impurity;
    std::vector<int> rank;           ///< 1 = most important
};

/// Permutes each predictor across the training rows and measures the increase
/// of the forest's out-of-bag mean squared error.
ImportanceReport permutation_importance(const ForestModel& model, const Dataset& data, int repeats = 1,
                                        std::uint64_t seed = 0);

enum class R2Baseline { heldout_mean, training_mean };

struct CvSpec {
    int repeats = 10;
    int folds = 2;
    std::uint64_t seed = 0;
    R2Baseline baseline = R2Baseline::heldout_mean;
};

/// Fold label per row for one repeat; depends only on (seed, n, k, repeat).
std::vector<int> cv_folds(std::size_t n, int k, std::uint64_t seed, int repeat);

/// R² on every held-out fold of every repeat, in (repeat, fold) order.
std::vector<double> cross_validated_r2(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestConfig& cfg,
                                       const CvSpec& cv);

struct TuneCell {
    int ntree = 0;
    int mtry = 0;
    double mean_r2 = 0.0;
    double sd_r2 = 0.0;
};

struct TuneResult {
    std::vector<TuneCell> cells;
    std::size_t best = 0;
    const TuneCell& best_cell() const { return cells.at(best); }
};

/// Default grid: ntree 100..1000 step 100 by mtry 1..p.
std::vector<std::pair<int, int>> default_grid(std::size_t predictors);

TuneResult tune_forest(const Dataset& data, const std::string& response, const std::vector<std::pair<int, int>>& grid,
                       const CvSpec& cv, int min_leaf = 5, int jobs = 1);

struct AblationResult {
    double with_mean = 0.0;
    double with_sd = 0.0;
    double without_mean = 0.0;
    double without_sd = 0.0;
};

/// Paired CV R² with and without `drop`, on identical folds. When mtry exceeds
/// the reduced predictor count it is clamped.
AblationResult ablate_predictor(const Dataset& data, const std::string& response, const std::string& drop,
                                const ForestConfig& cfg, const CvSpec& cv);

struct PowerLawFit {
    double exponent = 0.0;
    double std_error = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double p_value = 0.0;
    std::size_t n = 0;
};

/// OLS of log(response) on log(driver) plus untransformed controls.
/// Throws NonPositiveValue when response or driver has a value <= 0.
PowerLawFit fit_power_law(const Dataset& data, const std::string& response, const std::string& driver,
                          const std::vector<std::string>& controls = {});

std::string tune_result_csv(const TuneResult& result);
std::string importance_csv(const ImportanceReport& report);

}  // namespace bnq
