#pragma once

#include <cstddef>
#include <unordered_map>
#include <vector>

#include "bnq/graph.hpp"

namespace bnq {

/// Decomposable network score: the score of a DAG is the sum over nodes of
/// family_score(node, parents(node)). Higher is better.
class FamilyScorer {
public:
    virtual ~FamilyScorer() = default;
    virtual std::size_t num_variables() const = 0;
    virtual double family_score(int node, NodeMask parents) const = 0;

    double score(const Dag& dag) const;
};

/// Memoizing wrapper; not thread-safe, so each search owns one.
class ScoreCache {
public:
    explicit ScoreCache(const FamilyScorer& scorer) : scorer_(&scorer), table_(scorer.num_variables()) {}

    double operator()(int node, NodeMask parents);
    std::size_t num_variables() const { return scorer_->num_variables(); }
    const FamilyScorer& scorer() const { return *scorer_; }
    std::size_t evaluations() const { return evaluations_; }

private:
    const FamilyScorer* scorer_;
    std::vector<std::unordered_map<NodeMask, double>> table_;
    std::size_t evaluations_ = 0;
};

}  // namespace bnq
