#include "bnq/score.hpp"

#include "bnq/errors.hpp"

namespace bnq {

double FamilyScorer::score(const Dag& dag) const {
    if (dag.size() != num_variables()) throw VariableMismatch("DAG and data have different variable counts");
    double total = 0.0;
    for (std::size_t v = 0; v < dag.size(); ++v) total += family_score(static_cast<int>(v), dag.parent_mask(static_cast<int>(v)));
    return total;
}

double ScoreCache::operator()(int node, NodeMask parents) {
    auto& slot = table_[static_cast<std::size_t>(node)];
    if (const auto it = slot.find(parents); it != slot.end()) return it->second;
    ++evaluations_;
    const double s = scorer_->family_score(node, parents);
    slot.emplace(parents, s);
    return s;
}

}  // namespace bnq
