#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bnq/dataset.hpp"
#include "bnq/discrete.hpp"
#include "bnq/graph.hpp"
#include "bnq/score.hpp"

namespace bnq {

struct HcConfig {
    int restarts = 10;      ///< climbs in total; the first starts from the empty graph
    int perturb = 5;        ///< random edge operations applied before each later climb
    int max_parents = 5;
    std::uint64_t seed = 0;
    /// Recompute the full score after every accepted move and compare with the
    /// cached running total (test builds).
    bool verify_deltas = false;

    void validate() const;
};

struct SearchResult {
    Dag dag;
    double score = 0.0;
};

/// Symmetric adjacency mask per node: pair (a, b) may carry an edge iff bit b
/// of allowed[a] is set.
using AllowedPairs = std::vector<NodeMask>;

AllowedPairs all_pairs(std::size_t n);
std::size_t pair_count(const AllowedPairs& allowed);

/// Greedy hill climbing over additions, deletions and reversals with cached
/// family scores and random restarts. Ties between equal deltas go to the
/// lowest (from, to) pair, deletion before reversal.
SearchResult hill_climb(const FamilyScorer& scorer, const VariableSet& variables, const HcConfig& cfg,
                        const AllowedPairs* allowed = nullptr);
SearchResult hill_climb(const Dataset& data, const HcConfig& cfg);
SearchResult hill_climb(const DiscreteDataset& data, const HcConfig& cfg);

/// Fisher-z test of x independent of y given `given`; returns the p-value.
class PartialCorrelationTest {
public:
    explicit PartialCorrelationTest(const Dataset& data);
    double p_value(int x, int y, NodeMask given) const;
    std::size_t num_variables() const { return static_cast<std::size_t>(corr_.rows()); }

private:
    Eigen::MatrixXd corr_;
    double n_;
};

/// Grow-Shrink Markov blanket estimation followed by the neighbourhood test;
/// returns the union of estimated neighbour pairs.
AllowedPairs restrict_gs(const Dataset& data, double alpha);
/// Max-Min Parents and Children; union of the per-node candidate sets.
AllowedPairs restrict_mmpc(const Dataset& data, double alpha);

enum class RestrictMethod { gs, mmpc };
std::string to_string(RestrictMethod method);

/// Hill climbing limited to the pairs accepted by the restrict phase.
Dag hybrid_search(const Dataset& data, double alpha, const HcConfig& cfg, RestrictMethod restrict);

/// Bootstrap arc strength (either orientation) and direction confidence.
class ArcConfidence {
public:
    ArcConfidence() = default;
    /// `oriented(a, b)` is the weight (fraction or posterior mass) of a -> b.
    ArcConfidence(VariableSet variables, const Eigen::MatrixXd& oriented);

    const VariableSet& variables() const noexcept { return variables_; }
    std::size_t size() const noexcept { return variables_.size(); }
    double strength(int a, int b) const { return strength_(a, b); }
    double direction(int a, int b) const { return direction_(a, b); }
    const Eigen::MatrixXd& oriented() const noexcept { return oriented_; }

    double strength(const std::string& a, const std::string& b) const;
    double direction(const std::string& a, const std::string& b) const;

private:
    VariableSet variables_;
    Eigen::MatrixXd oriented_;
    Eigen::MatrixXd strength_;
    Eigen::MatrixXd direction_;
};

/// CSV with header from,to,strength,direction; all ordered pairs, sorted by name.
std::string arc_confidence_csv(const ArcConfidence& conf);

/// Posterior edge probabilities P(a -> b) under a uniform prior over DAGs with
/// family weights exp(score); exact via inclusion-exclusion over node subsets.
Eigen::MatrixXd exact_edge_posteriors(const FamilyScorer& scorer, int max_parents);
ArcConfidence exact_map_edge_probabilities(const Dataset& data, int max_parents);
ArcConfidence exact_map_edge_probabilities(const FamilyScorer& scorer, const VariableSet& variables, int max_parents);

/// Highest-scoring DAG under the parent limit, by dynamic programming over
/// best parent sets and best sinks. Ties go to the lowest node index.
SearchResult exact_map_dag(const FamilyScorer& scorer, const VariableSet& variables, int max_parents);

enum class Learner { hill_climb, hybrid_gs, hybrid_mmpc, exact_map };
std::string to_string(Learner learner);
Learner learner_from_string(const std::string& name);

struct BootstrapOptions {
    double alpha = 0.05;  ///< restrict significance level for hybrid learners
    int jobs = 1;
};

/// One resample's contribution: oriented(a, b) in [0,1], 1 meaning a -> b.
using ResampleLearner = std::function<Eigen::MatrixXd(const std::vector<int>& rows, std::uint64_t seed)>;

/// Non-parametric bootstrap: resample rows with replacement, learn, tabulate.
ArcConfidence bootstrap_average(const VariableSet& variables, std::size_t n, int boot_samples, std::uint64_t seed,
                                const ResampleLearner& learner, int jobs = 1);
ArcConfidence bootstrap_average(const Dataset& data, Learner learner, int boot_samples, const HcConfig& cfg,
                                std::uint64_t seed, const BootstrapOptions& options = {});
/// Discrete data supports hill_climb and exact_map.
ArcConfidence bootstrap_average(const DiscreteDataset& data, Learner learner, int boot_samples, const HcConfig& cfg,
                                std::uint64_t seed, const BootstrapOptions& options = {});

Eigen::MatrixXd adjacency_indicator(const Dag& dag);

struct AveragedNetwork {
    Dag dag;
    double threshold = 0.0;
    ArcConfidence source;
    /// Edges whose orientation was flipped (or dropped) to remove cycles.
    std::vector<Edge> repaired;
};

/// Keeps pairs with strength >= threshold (> when strict), orients by majority
/// direction, then breaks cycles by flipping the kept edge whose direction
/// confidence is closest to 0.5.
AveragedNetwork averaged_network(const ArcConfidence& conf, double threshold, bool strict = false);

nlohmann::json to_json(const AveragedNetwork& net);

}  // namespace bnq
