#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <stdexcept>

#include "bnq/errors.hpp"
#include "bnq/gaussian_bn.hpp"
#include "bnq/random.hpp"
#include "bnq/search.hpp"

namespace bnq {

void HcConfig::validate() const {
    if (restarts < 1) throw ConfigError("hc.restarts", "must be at least 1");
    if (perturb < 0) throw ConfigError("hc.perturb", "must be non-negative");
    if (max_parents < 1) throw ConfigError("hc.max_parents", "must be at least 1");
}

AllowedPairs all_pairs(std::size_t n) {
    const NodeMask full = n >= kMaxNodes ? ~NodeMask{0} : bit(static_cast<int>(n)) - 1;
    AllowedPairs out(n);
    for (std::size_t v = 0; v < n; ++v) out[v] = full & ~bit(static_cast<int>(v));
    return out;
}

std::size_t pair_count(const AllowedPairs& allowed) {
    std::size_t twice = 0;
    for (auto m : allowed) twice += static_cast<std::size_t>(std::popcount(m));
    return twice / 2;
}

namespace {

enum class MoveKind { add, remove, reverse };

struct Move {
    MoveKind kind = MoveKind::add;
    int from = 0;
    int to = 0;
    double delta = 0.0;
};

class Climber {
public:
    Climber(ScoreCache& cache, const AllowedPairs& allowed, const HcConfig& cfg)
        : cache_(cache), allowed_(allowed), cfg_(cfg), n_(static_cast<int>(cache.num_variables())) {}

    /// Climbs from `start` to a local optimum; returns (parents, score).
    std::pair<std::vector<NodeMask>, double> climb(std::vector<NodeMask> parents) {
        parents_ = std::move(parents);
        family_.assign(static_cast<std::size_t>(n_), 0.0);
        total_ = 0.0;
        for (int v = 0; v < n_; ++v) {
            family_[v] = cache_(v, parents_[v]);
            total_ += family_[v];
        }
        while (true) {
            const auto move = best_move();
            if (!move) break;
            apply(*move);
            if (cfg_.verify_deltas) verify();
        }
        return {parents_, total_};
    }

    /// Random legal additions, deletions and reversals starting from the empty graph.
    std::vector<NodeMask> perturbed_start(Rng& rng) const {
        std::vector<NodeMask> parents(static_cast<std::size_t>(n_), 0);
        if (n_ < 2) return parents;
        std::uniform_int_distribution<int> node(0, n_ - 1);
        std::bernoulli_distribution coin(0.5);
        int applied = 0;
        for (int attempt = 0; applied < cfg_.perturb && attempt < 20 * (cfg_.perturb + 1); ++attempt) {
            int u = node(rng), v = node(rng);
            if (u == v || !(allowed_[u] & bit(v))) continue;
            if (parents[u] & bit(v)) std::swap(u, v);  // orient as the existing edge u -> v
            if (parents[v] & bit(u)) {
                const bool reverse = coin(rng);
                parents[v] &= ~bit(u);
                if (reverse) {
                    parents[u] |= bit(v);
                    if (std::popcount(parents[u]) > cfg_.max_parents || !is_acyclic(parents)) {
                        parents[u] &= ~bit(v);
                        parents[v] |= bit(u);
                        continue;
                    }
                }
                ++applied;
            } else {
                if (std::popcount(parents[v]) >= cfg_.max_parents) continue;
                parents[v] |= bit(u);
                if (!is_acyclic(parents)) {
                    parents[v] &= ~bit(u);
                    continue;
                }
                ++applied;
            }
        }
        return parents;
    }

private:
    std::vector<NodeMask> descendant_masks() const {
        std::vector<NodeMask> children(static_cast<std::size_t>(n_), 0);
        for (int c = 0; c < n_; ++c) {
            for (NodeMask m = parents_[c]; m; m &= m - 1) children[std::countr_zero(m)] |= bit(c);
        }
        const auto order = topological_order(Dag::from_parent_masks(VariableSet::numbered(static_cast<std::size_t>(n_)), parents_));
        std::vector<NodeMask> desc(static_cast<std::size_t>(n_), 0);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const int v = *it;
            NodeMask d = children[v];
            for (NodeMask m = children[v]; m; m &= m - 1) d |= desc[std::countr_zero(m)];
            desc[v] = d;
        }
        return desc;
    }

    std::optional<Move> best_move() {
        const auto desc = descendant_masks();
        const double tol = 1e-9 * std::max(1.0, std::fabs(total_));
        std::optional<Move> best;
        auto consider = [&](MoveKind kind, int u, int v, double delta) {
            if (delta <= tol) return;
            if (!best || delta > best->delta + tol) best = Move{kind, u, v, delta};
        };
        for (int u = 0; u < n_; ++u) {
            for (int v = 0; v < n_; ++v) {
                if (u == v || !(allowed_[u] & bit(v))) continue;
                if (parents_[v] & bit(u)) {
                    const double drop_v = cache_(v, parents_[v] & ~bit(u)) - family_[v];
                    consider(MoveKind::remove, u, v, drop_v);
                    if (std::popcount(parents_[u]) < cfg_.max_parents && !other_path(u, v, desc)) {
                        consider(MoveKind::reverse, u, v, drop_v + cache_(u, parents_[u] | bit(v)) - family_[u]);
                    }
                } else if (!(parents_[u] & bit(v)) && std::popcount(parents_[v]) < cfg_.max_parents &&
                           !(desc[v] & bit(u))) {
                    consider(MoveKind::add, u, v, cache_(v, parents_[v] | bit(u)) - family_[v]);
                }
            }
        }
        return best;
    }

    /// A directed path u ~> v other than the edge u -> v itself.
    bool other_path(int u, int v, const std::vector<NodeMask>& desc) const {
        for (int c = 0; c < n_; ++c) {
            if (c == v || !(parents_[c] & bit(u))) continue;
            if (desc[c] & bit(v)) return true;
        }
        return false;
    }

    void set_family(int v, NodeMask parents) {
        parents_[v] = parents;
        const double s = cache_(v, parents);
        total_ += s - family_[v];
        family_[v] = s;
    }

    void apply(const Move& m) {
        switch (m.kind) {
            case MoveKind::add: set_family(m.to, parents_[m.to] | bit(m.from)); break;
            case MoveKind::remove: set_family(m.to, parents_[m.to] & ~bit(m.from)); break;
            case MoveKind::reverse:
                set_family(m.to, parents_[m.to] & ~bit(m.from));
                set_family(m.from, parents_[m.from] | bit(m.to));
                break;
        }
    }

    void verify() const {
        double full = 0.0;
        for (int v = 0; v < n_; ++v) full += cache_.scorer().family_score(v, parents_[v]);
        if (std::fabs(full - total_) > 1e-8 * std::max(1.0, std::fabs(full))) {
            throw std::logic_error("cached score " + std::to_string(total_) + " differs from full rescoring " +
                                   std::to_string(full));
        }
    }

    ScoreCache& cache_;
    const AllowedPairs& allowed_;
    const HcConfig& cfg_;
    int n_;
    std::vector<NodeMask> parents_;
    std::vector<double> family_;
    double total_ = 0.0;
};

}  // namespace

SearchResult hill_climb(const FamilyScorer& scorer, const VariableSet& variables, const HcConfig& cfg,
                        const AllowedPairs* allowed) {
    cfg.validate();
    if (scorer.num_variables() != variables.size()) throw VariableMismatch("scorer and variable set differ in size");
    const AllowedPairs every = all_pairs(variables.size());
    const AllowedPairs& pairs = allowed ? *allowed : every;
    if (pairs.size() != variables.size()) throw VariableMismatch("allowed-pair table has the wrong size");

    ScoreCache cache(scorer);
    Climber climber(cache, pairs, cfg);
    std::vector<NodeMask> best_parents;
    double best_score = 0.0;
    for (int r = 0; r < cfg.restarts; ++r) {
        std::vector<NodeMask> start(variables.size(), 0);
        if (r > 0) {
            Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(r));
            start = climber.perturbed_start(rng);
        }
        auto [parents, score] = climber.climb(std::move(start));
        if (best_parents.empty() || score > best_score + 1e-9 * std::max(1.0, std::fabs(best_score))) {
            best_parents = std::move(parents);
            best_score = score;
        }
    }
    return {Dag::from_parent_masks(variables, std::move(best_parents)), best_score};
}

SearchResult hill_climb(const Dataset& data, const HcConfig& cfg) {
    GaussianScorer scorer(data);
    return hill_climb(scorer, data.variables(), cfg);
}

SearchResult hill_climb(const DiscreteDataset& data, const HcConfig& cfg) {
    DiscreteScorer scorer(data);
    return hill_climb(scorer, data.variables(), cfg);
}

}  // namespace bnq
