#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bnq/dataset.hpp"
#include "bnq/graph.hpp"
#include "bnq/score.hpp"

namespace bnq {

enum class DiscretizationMethod { equal_interval, equal_frequency, kmeans, hartemink };

std::string to_string(DiscretizationMethod method);
DiscretizationMethod discretization_method_from_string(std::string name);

struct DiscretizationSpec {
    DiscretizationMethod method = DiscretizationMethod::equal_frequency;
    int bins = 3;
    int hartemink_initial_bins = 20;

    /// Throws ConfigError when bins < 2 or initial bins < bins.
    void validate() const;
};

/// Level indices per cell; every cell is below its variable's level count.
class DiscreteDataset {
public:
    DiscreteDataset(VariableSet variables, Eigen::MatrixXi rows, std::vector<int> levels);

    const VariableSet& variables() const noexcept { return variables_; }
    const Eigen::MatrixXi& rows() const noexcept { return rows_; }
    const std::vector<int>& levels() const noexcept { return levels_; }
    std::size_t n() const noexcept { return static_cast<std::size_t>(rows_.rows()); }
    std::size_t p() const noexcept { return static_cast<std::size_t>(rows_.cols()); }

    DiscreteDataset select_rows(const std::vector<int>& rows) const;

private:
    VariableSet variables_;
    Eigen::MatrixXi rows_;
    std::vector<int> levels_;
};

struct Discretization {
    DiscreteDataset data;
    /// Interior cut points per variable; level k covers [cut[k-1], cut[k]).
    std::vector<std::vector<double>> cut_points;
};

/// Unsupervised per-variable discretization. DegenerateColumn for constant columns.
Discretization discretize(const Dataset& data, const DiscretizationSpec& spec);

/// Hartemink merging with an optional trace of total pairwise mutual
/// information recorded before the first merge and after every merge.
Discretization hartemink_discretize(const Dataset& data, int bins, int initial_bins,
                                    std::vector<double>* total_mi_trace = nullptr);

/// Level of `value` under half-open intervals, the last one closed.
int level_of(double value, const std::vector<double>& cut_points);

/// Plug-in mutual information (natural log); the diagonal holds entropies.
Eigen::MatrixXd pairwise_mutual_information(const DiscreteDataset& data);

/// Multinomial BIC family scores with the 0 ln 0 = 0 convention.
class DiscreteScorer final : public FamilyScorer {
public:
    explicit DiscreteScorer(const DiscreteDataset& data) : data_(&data) {}

    std::size_t num_variables() const override { return data_->p(); }
    double family_score(int node, NodeMask parents) const override;
    double family_loglik(int node, NodeMask parents) const;
    double family_penalty(int node, NodeMask parents) const;

private:
    const DiscreteDataset* data_;
};

double bic_discrete(const Dag& dag, const DiscreteDataset& data);

/// Integer-level CSV plus a JSON sidecar with the cut points.
void write_discrete_csv(const DiscreteDataset& data, std::ostream& out);
nlohmann::json cut_points_json(const Discretization& d);

}  // namespace bnq
