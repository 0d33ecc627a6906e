#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace bnq {

/// Bitmask over node indices; bit i set means node i is a member.
using NodeMask = std::uint64_t;

inline constexpr std::size_t kMaxNodes = 64;

inline constexpr NodeMask bit(int i) { return NodeMask{1} << i; }

/// Ordered, duplicate-free list of variable names. Position defines the column
/// index used everywhere else.
class VariableSet {
public:
    VariableSet() = default;
    VariableSet(std::vector<std::string> names);
    VariableSet(std::initializer_list<std::string> names);

    /// Generic names V0..V{n-1}.
    static VariableSet numbered(std::size_t n);

    std::size_t size() const noexcept { return names_.size(); }
    const std::string& operator[](std::size_t i) const { return names_.at(i); }
    const std::vector<std::string>& names() const noexcept { return names_; }

    /// Index of `name`; throws VariableMismatch when absent.
    int index_of(std::string_view name) const;
    bool contains(std::string_view name) const;

    bool operator==(const VariableSet&) const = default;

private:
    std::vector<std::string> names_;
};

struct Edge {
    int from = 0;
    int to = 0;
    auto operator<=>(const Edge&) const = default;
};

/// Directed acyclic graph over a VariableSet. Values are immutable; every
/// mutation returns a new graph and is rejected if it would create a cycle.
class Dag {
public:
    Dag() = default;
    explicit Dag(VariableSet variables);
    /// Throws CycleError, DuplicateEdge or std::out_of_range on invalid edges.
    Dag(VariableSet variables, const std::vector<Edge>& edges);
    /// Edges given by (parent, child) name.
    static Dag from_names(VariableSet variables, const std::vector<std::pair<std::string, std::string>>& edges);

    /// Builds from per-node parent masks; throws CycleError if cyclic.
    static Dag from_parent_masks(VariableSet variables, std::vector<NodeMask> parents);

    const VariableSet& variables() const noexcept { return variables_; }
    std::size_t size() const noexcept { return variables_.size(); }
    std::size_t edge_count() const noexcept;

    bool has_edge(int from, int to) const;
    bool adjacent(int a, int b) const { return has_edge(a, b) || has_edge(b, a); }
    NodeMask parent_mask(int node) const { return parents_.at(static_cast<std::size_t>(node)); }
    const std::vector<NodeMask>& parent_masks() const noexcept { return parents_; }
    std::vector<int> parents(int node) const;
    NodeMask child_mask(int node) const;

    /// Edges sorted by (from, to) index.
    std::vector<Edge> edges() const;

    /// True when a directed path from -> ... -> to exists (length >= 1).
    bool reaches(int from, int to) const;

    Dag with_edge(int parent, int child) const;
    Dag without_edge(int parent, int child) const;
    Dag with_reversed(int parent, int child) const;

    bool operator==(const Dag& other) const {
        return variables_ == other.variables_ && parents_ == other.parents_;
    }

private:
    VariableSet variables_;
    std::vector<NodeMask> parents_;
};

/// Kahn order with ties broken by lowest index.
std::vector<int> topological_order(const Dag& dag);

/// Same as dag.with_edge: CycleError when child reaches parent, DuplicateEdge
/// when the edge exists.
Dag add_edge_checked(const Dag& dag, int parent, int child);

/// True when the parent masks describe an acyclic graph.
bool is_acyclic(const std::vector<NodeMask>& parents);

/// Visits every labeled DAG on n <= 5 nodes exactly once (SizeLimit beyond).
void for_each_dag(std::size_t n, const std::function<void(const Dag&)>& visit);
void for_each_dag(const VariableSet& variables, const std::function<void(const Dag&)>& visit);
std::vector<Dag> enumerate_dags(std::size_t n);

/// {"variables": [...], "edges": [["Parent","Child"], ...]} with edges sorted
/// lexicographically by name.
nlohmann::json to_json(const Dag& dag);
Dag dag_from_json(const nlohmann::json& j);

}  // namespace bnq
