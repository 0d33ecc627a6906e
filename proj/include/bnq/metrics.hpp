#pragma once

#include <string>
#include <vector>

#include "bnq/graph.hpp"

namespace bnq {

/// Labelled-edge comparison of a learned DAG against the truth.
struct StructureDiff {
    std::vector<Edge> extra;     ///< in learned only (as oriented in learned)
    std::vector<Edge> missing;   ///< in truth only
    std::vector<Edge> reversed;  ///< oriented as in truth
    int shd = 0;
};

StructureDiff diff(const Dag& truth, const Dag& learned);

enum class Recovery { exact, off_by_one, worse };
std::string to_string(Recovery r);

Recovery classify(const Dag& truth, const Dag& learned);

}  // namespace bnq
