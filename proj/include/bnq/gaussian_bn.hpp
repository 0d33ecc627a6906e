#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bnq/dataset.hpp"
#include "bnq/graph.hpp"
#include "bnq/score.hpp"

namespace bnq {

/// Linear-Gaussian conditional of one node. Coefficients follow the order of
/// Dag::parents(node), i.e. ascending parent index.
struct NodeParameters {
    double intercept = 0.0;
    std::vector<double> coefficients;
    double residual_sd = 1.0;
};

class GaussianBn {
public:
    GaussianBn(Dag dag, std::vector<NodeParameters> nodes);

    const Dag& dag() const noexcept { return dag_; }
    const VariableSet& variables() const noexcept { return dag_.variables(); }
    const NodeParameters& node(int index) const { return nodes_.at(static_cast<std::size_t>(index)); }
    const std::vector<NodeParameters>& nodes() const noexcept { return nodes_; }

    /// Coefficient on parent -> child; throws when the edge is absent.
    double coefficient(int parent, int child) const;

private:
    Dag dag_;
    std::vector<NodeParameters> nodes_;
};

enum class FitScale { raw, standardized };

/// Per-node least squares on the parents; residual_sd is the ML estimate
/// sqrt(SSE / n). Throws InsufficientRows or RankDeficient.
GaussianBn fit(const Dag& dag, const Dataset& data, FitScale scale = FitScale::raw);

/// Gaussian BIC family scores computed from centred columns with a QR solve.
class GaussianScorer final : public FamilyScorer {
public:
    explicit GaussianScorer(const Dataset& data);

    std::size_t num_variables() const override { return static_cast<std::size_t>(centred_.cols()); }
    double family_score(int node, NodeMask parents) const override;

    /// Maximised log-likelihood of the node given its parents.
    double family_loglik(int node, NodeMask parents) const;
    /// (|parents| + 2) / 2 * ln(n): coefficients, intercept and variance.
    double family_penalty(NodeMask parents) const;

    std::size_t n() const { return static_cast<std::size_t>(centred_.rows()); }

private:
    double residual_ss(int node, NodeMask parents) const;

    Eigen::MatrixXd centred_;
    VariableSet variables_;
};

/// loglik - (k/2) ln n, maximised. DegenerateVariance when some node has zero
/// residual variance.
double bic_g(const Dag& dag, const Dataset& data);

/// Ancestral sampling in topological order; deterministic for a given seed.
Dataset simulate(const GaussianBn& bn, std::size_t n, std::uint64_t seed);

struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Exact mean and covariance of the joint Gaussian defined by the network.
Moments implied_moments(const GaussianBn& bn);

struct EdgeStatistic {
    Edge edge;
    double coefficient = 0.0;
    double p_value = 1.0;
};

struct EdgeInference {
    std::vector<EdgeStatistic> edges;  ///< sorted by (from, to)
    std::vector<double> adjusted_r2;   ///< per node; 0 for nodes without parents
};

/// OLS of every node on all of its parents with t-test p-values.
EdgeInference edge_inference(const Dag& dag, const Dataset& data);

nlohmann::json to_json(const GaussianBn& bn);
GaussianBn gaussian_bn_from_json(const nlohmann::json& j);

}  // namespace bnq
