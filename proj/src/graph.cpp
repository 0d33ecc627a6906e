#include "bnq/graph.hpp"

#include <algorithm>
#include <bit>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "bnq/errors.hpp"

namespace bnq {

VariableSet::VariableSet(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.size() > kMaxNodes) {
        throw SizeLimit("at most " + std::to_string(kMaxNodes) + " variables are supported");
    }
    std::unordered_set<std::string> seen;
    for (const auto& name : names_) {
        if (!seen.insert(name).second) throw VariableMismatch("duplicate variable name '" + name + "'");
    }
}

VariableSet::VariableSet(std::initializer_list<std::string> names)
    : VariableSet(std::vector<std::string>(names)) {}

VariableSet VariableSet::numbered(std::size_t n) {
    std::vector<std::string> names;
    names.reserve(n);
    for (std::size_t i = 0; i < n; ++i) names.push_back("V" + std::to_string(i));
    return VariableSet(std::move(names));
}

int VariableSet::index_of(std::string_view name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw VariableMismatch("unknown variable '" + std::string(name) + "'");
    return static_cast<int>(it - names_.begin());
}

bool VariableSet::contains(std::string_view name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

namespace {

void check_node(const Dag& dag, int node) {
    if (node < 0 || static_cast<std::size_t>(node) >= dag.size()) {
        throw std::out_of_range("node index " + std::to_string(node) + " out of range");
    }
}

NodeMask descendants(const std::vector<NodeMask>& parents, int node) {
    // children[i] computed lazily via parent masks
    const auto n = parents.size();
    NodeMask frontier = 0;
    for (std::size_t c = 0; c < n; ++c) {
        if (parents[c] & bit(node)) frontier |= bit(static_cast<int>(c));
    }
    NodeMask seen = frontier;
    while (frontier) {
        NodeMask next = 0;
        for (std::size_t c = 0; c < n; ++c) {
            if (!(seen & bit(static_cast<int>(c))) && (parents[c] & frontier)) next |= bit(static_cast<int>(c));
        }
        seen |= next;
        frontier = next;
    }
    return seen;
}

}  // namespace

bool is_acyclic(const std::vector<NodeMask>& parents) {
    NodeMask placed = 0;
    const auto n = parents.size();
    const NodeMask all = n == kMaxNodes ? ~NodeMask{0} : (bit(static_cast<int>(n)) - 1);
    while (placed != all) {
        bool progress = false;
        for (std::size_t v = 0; v < n; ++v) {
            const NodeMask b = bit(static_cast<int>(v));
            if (!(placed & b) && (parents[v] & ~placed) == 0) {
                placed |= b;
                progress = true;
            }
        }
        if (!progress) return false;
    }
    return true;
}

Dag::Dag(VariableSet variables) : variables_(std::move(variables)), parents_(variables_.size(), 0) {}

Dag::Dag(VariableSet variables, const std::vector<Edge>& edges) : Dag(std::move(variables)) {
    for (const auto& e : edges) {
        check_node(*this, e.from);
        check_node(*this, e.to);
        if (e.from == e.to) throw CycleError("self-loop on '" + variables_[e.from] + "'");
        if (has_edge(e.from, e.to)) {
            throw DuplicateEdge("duplicate edge " + variables_[e.from] + " -> " + variables_[e.to]);
        }
        parents_[e.to] |= bit(e.from);
    }
    if (!is_acyclic(parents_)) throw CycleError("edge set contains a directed cycle");
}

Dag Dag::from_names(VariableSet variables, const std::vector<std::pair<std::string, std::string>>& edges) {
    std::vector<Edge> indexed;
    indexed.reserve(edges.size());
    for (const auto& [p, c] : edges) indexed.push_back({variables.index_of(p), variables.index_of(c)});
    return Dag(std::move(variables), indexed);
}

Dag Dag::from_parent_masks(VariableSet variables, std::vector<NodeMask> parents) {
    if (parents.size() != variables.size()) throw VariableMismatch("parent mask count differs from variable count");
    const auto n = variables.size();
    for (std::size_t v = 0; v < n; ++v) {
        if (parents[v] & bit(static_cast<int>(v))) throw CycleError("self-loop on '" + variables[v] + "'");
        if (n < kMaxNodes && (parents[v] >> n) != 0) throw std::out_of_range("parent mask refers to unknown node");
    }
    if (!is_acyclic(parents)) throw CycleError("parent sets contain a directed cycle");
    Dag dag(std::move(variables));
    dag.parents_ = std::move(parents);
    return dag;
}

std::size_t Dag::edge_count() const noexcept {
    std::size_t count = 0;
    for (auto m : parents_) count += static_cast<std::size_t>(std::popcount(m));
    return count;
}

bool Dag::has_edge(int from, int to) const {
    check_node(*this, from);
    check_node(*this, to);
    return (parents_[to] & bit(from)) != 0;
}

std::vector<int> Dag::parents(int node) const {
    check_node(*this, node);
    std::vector<int> out;
    for (NodeMask m = parents_[node]; m; m &= m - 1) out.push_back(std::countr_zero(m));
    return out;
}

NodeMask Dag::child_mask(int node) const {
    check_node(*this, node);
    NodeMask children = 0;
    for (std::size_t c = 0; c < parents_.size(); ++c) {
        if (parents_[c] & bit(node)) children |= bit(static_cast<int>(c));
    }
    return children;
}

std::vector<Edge> Dag::edges() const {
    std::vector<Edge> out;
    for (std::size_t c = 0; c < parents_.size(); ++c) {
        for (NodeMask m = parents_[c]; m; m &= m - 1) out.push_back({std::countr_zero(m), static_cast<int>(c)});
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool Dag::reaches(int from, int to) const {
    check_node(*this, from);
    check_node(*this, to);
    return (descendants(parents_, from) & bit(to)) != 0;
}

Dag Dag::with_edge(int parent, int child) const {
    check_node(*this, parent);
    check_node(*this, child);
    if (parent == child) throw CycleError("self-loop on '" + variables_[parent] + "'");
    if (has_edge(parent, child)) {
        throw DuplicateEdge("edge " + variables_[parent] + " -> " + variables_[child] + " already present");
    }
    if (child == parent || reaches(child, parent)) {
        throw CycleError("adding " + variables_[parent] + " -> " + variables_[child] + " creates a cycle");
    }
    Dag out = *this;
    out.parents_[child] |= bit(parent);
    return out;
}

Dag Dag::without_edge(int parent, int child) const {
    if (!has_edge(parent, child)) {
        throw std::invalid_argument("edge " + variables_[parent] + " -> " + variables_[child] + " not present");
    }
    Dag out = *this;
    out.parents_[child] &= ~bit(parent);
    return out;
}

Dag Dag::with_reversed(int parent, int child) const {
    return without_edge(parent, child).with_edge(child, parent);
}

std::vector<int> topological_order(const Dag& dag) {
    const auto& parents = dag.parent_masks();
    std::vector<int> order;
    order.reserve(parents.size());
    NodeMask placed = 0;
    while (order.size() < parents.size()) {
        for (std::size_t v = 0; v < parents.size(); ++v) {
            const NodeMask b = bit(static_cast<int>(v));
            if (!(placed & b) && (parents[v] & ~placed) == 0) {
                placed |= b;
                order.push_back(static_cast<int>(v));
                break;
            }
        }
    }
    return order;
}

Dag add_edge_checked(const Dag& dag, int parent, int child) { return dag.with_edge(parent, child); }

void for_each_dag(const VariableSet& variables, const std::function<void(const Dag&)>& visit) {
    const std::size_t n = variables.size();
    if (n > 5) throw SizeLimit("DAG enumeration is limited to 5 nodes, got " + std::to_string(n));
    if (n == 0) {
        visit(Dag(variables));
        return;
    }
    // Each node draws its parent set from the other n-1 nodes; odometer over all choices.
    std::vector<NodeMask> parents(n, 0);
    const NodeMask limit = bit(static_cast<int>(n - 1));
    std::vector<NodeMask> digit(n, 0);
    auto expand = [n](std::size_t v, NodeMask compact) {
        NodeMask out = 0;
        int src = 0;
        for (std::size_t u = 0; u < n; ++u) {
            if (u == v) continue;
            if (compact & bit(src)) out |= bit(static_cast<int>(u));
            ++src;
        }
        return out;
    };
    while (true) {
        for (std::size_t v = 0; v < n; ++v) parents[v] = expand(v, digit[v]);
        if (is_acyclic(parents)) visit(Dag::from_parent_masks(variables, parents));
        std::size_t pos = 0;
        while (pos < n && ++digit[pos] == limit) digit[pos++] = 0;
        if (pos == n) break;
    }
}

void for_each_dag(std::size_t n, const std::function<void(const Dag&)>& visit) {
    if (n > 5) throw SizeLimit("DAG enumeration is limited to 5 nodes, got " + std::to_string(n));
    for_each_dag(VariableSet::numbered(n), visit);
}

std::vector<Dag> enumerate_dags(std::size_t n) {
    std::vector<Dag> out;
    for_each_dag(n, [&](const Dag& d) { out.push_back(d); });
    return out;
}

nlohmann::json to_json(const Dag& dag) {
    const auto& vars = dag.variables();
    std::vector<std::pair<std::string, std::string>> named;
    for (const auto& e : dag.edges()) named.emplace_back(vars[e.from], vars[e.to]);
    std::sort(named.begin(), named.end());
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [p, c] : named) edges.push_back({p, c});
    return {{"variables", vars.names()}, {"edges", edges}};
}

Dag dag_from_json(const nlohmann::json& j) {
    VariableSet vars(j.at("variables").get<std::vector<std::string>>());
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw std::invalid_argument("edge entries must be [parent, child] pairs");
        edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    return Dag::from_names(vars, edges);
}

}  // namespace bnq
