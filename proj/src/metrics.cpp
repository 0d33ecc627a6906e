#include "bnq/metrics.hpp"

#include "bnq/errors.hpp"

namespace bnq {

StructureDiff diff(const Dag& truth, const Dag& learned) {
    if (truth.variables() != learned.variables()) throw VariableMismatch("DAGs are over different variable sets");
    StructureDiff out;
    for (const auto& e : truth.edges()) {
        if (learned.has_edge(e.from, e.to)) continue;
        if (learned.has_edge(e.to, e.from)) {
            out.reversed.push_back(e);
        } else {
            out.missing.push_back(e);
        }
    }
    for (const auto& e : learned.edges()) {
        if (!truth.adjacent(e.from, e.to)) out.extra.push_back(e);
    }
    out.shd = static_cast<int>(out.extra.size() + out.missing.size() + out.reversed.size());
    return out;
}

std::string to_string(Recovery r) {
    switch (r) {
        case Recovery::exact: return "exact";
        case Recovery::off_by_one: return "off_by_one";
        case Recovery::worse: return "worse";
    }
    return "worse";
}

Recovery classify(const Dag& truth, const Dag& learned) {
    const int shd = diff(truth, learned).shd;
    if (shd == 0) return Recovery::exact;
    return shd == 1 ? Recovery::off_by_one : Recovery::worse;
}

}  // namespace bnq
