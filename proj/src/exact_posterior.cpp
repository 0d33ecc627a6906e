#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "bnq/errors.hpp"
#include "bnq/gaussian_bn.hpp"
#include "bnq/search.hpp"

namespace bnq {

namespace {

using Real = long double;
using Table = std::vector<Real>;

/// A_v(U) = sum of weights over parent sets P subset of U (zeta transform).
Table subset_sums(Table w, int n) {
    const std::size_t full = std::size_t{1} << n;
    for (int i = 0; i < n; ++i) {
        for (std::size_t s = 0; s < full; ++s) {
            if (s & (std::size_t{1} << i)) w[s] += w[s ^ (std::size_t{1} << i)];
        }
    }
    return w;
}

/// Weighted DAG count over subsets by inclusion-exclusion on the sink set.
/// When `only_with` is non-negative, entries for sets lacking that node are
/// taken from `reuse` unchanged.
Table dag_sums(const std::vector<Table>& a, int n, int only_with = -1, const Table* reuse = nullptr) {
    const std::size_t full = std::size_t{1} << n;
    Table z(full, 0.0L);
    z[0] = 1.0L;
    for (std::size_t s = 1; s < full; ++s) {
        if (only_with >= 0 && !(s & (std::size_t{1} << only_with))) {
            z[s] = (*reuse)[s];
            continue;
        }
        Real total = 0.0L;
        for (std::size_t t = s; t; t = (t - 1) & s) {
            const std::size_t rest = s ^ t;
            Real term = z[rest];
            for (std::size_t m = t; m && term != 0.0L; m &= m - 1) term *= a[std::countr_zero(m)][rest];
            total += (std::popcount(t) & 1) ? term : -term;
        }
        z[s] = total;
    }
    return z;
}

}  // namespace

Eigen::MatrixXd exact_edge_posteriors(const FamilyScorer& scorer, int max_parents) {
    const int n = static_cast<int>(scorer.num_variables());
    if (n > 16) throw SizeLimit("exact posteriors support at most 16 variables");
    if (max_parents > 5) throw SizeLimit("exact posteriors support at most 5 parents");
    if (max_parents < 0) throw ConfigError("max_parents", "must be non-negative");
    const std::size_t full = std::size_t{1} << n;

    // Local weights exp(score - max) per node; zero for disallowed parent sets.
    std::vector<Table> weights(static_cast<std::size_t>(n), Table(full, 0.0L));
    for (int v = 0; v < n; ++v) {
        std::vector<double> scores(full, -std::numeric_limits<double>::infinity());
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < full; ++s) {
            if ((s & (std::size_t{1} << v)) || std::popcount(s) > max_parents) continue;
            scores[s] = scorer.family_score(v, static_cast<NodeMask>(s));
            best = std::max(best, scores[s]);
        }
        for (std::size_t s = 0; s < full; ++s) {
            if (std::isfinite(scores[s])) weights[v][s] = std::exp(static_cast<Real>(scores[s] - best));
        }
    }

    std::vector<Table> a(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) a[v] = subset_sums(weights[v], n);
    const Table z = dag_sums(a, n);
    const Real total = z[full - 1];
    if (!(total > 0.0L) || !std::isfinite(total)) throw NumericalRange("posterior normalizer is not positive and finite");

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (int v = 0; v < n; ++v) {
        const Table saved = a[v];
        for (int u = 0; u < n; ++u) {
            if (u == v) continue;
            Table restricted = weights[v];
            for (std::size_t s = 0; s < full; ++s) {
                if (!(s & (std::size_t{1} << u))) restricted[s] = 0.0L;
            }
            a[v] = subset_sums(std::move(restricted), n);
            const Table zu = dag_sums(a, n, v, &z);
            const double prob = static_cast<double>(zu[full - 1] / total);
            out(u, v) = std::clamp(prob, 0.0, 1.0);
        }
        a[v] = saved;
    }
    return out;
}

SearchResult exact_map_dag(const FamilyScorer& scorer, const VariableSet& variables, int max_parents) {
    const int n = static_cast<int>(scorer.num_variables());
    if (scorer.num_variables() != variables.size()) throw VariableMismatch("scorer and variable set differ in size");
    if (n > 16) throw SizeLimit("exact search supports at most 16 variables");
    if (max_parents > 5) throw SizeLimit("exact search supports at most 5 parents");
    if (max_parents < 0) throw ConfigError("max_parents", "must be non-negative");
    const std::size_t full = std::size_t{1} << n;
    constexpr double kNone = -std::numeric_limits<double>::infinity();

    // best_score[v][S]: best family score of v with parents drawn from S.
    std::vector<std::vector<double>> best_score(static_cast<std::size_t>(n), std::vector<double>(full, kNone));
    std::vector<std::vector<NodeMask>> best_parents(static_cast<std::size_t>(n), std::vector<NodeMask>(full, 0));
    for (int v = 0; v < n; ++v) {
        auto& bs = best_score[static_cast<std::size_t>(v)];
        auto& bp = best_parents[static_cast<std::size_t>(v)];
        for (std::size_t s = 0; s < full; ++s) {
            if (s & (std::size_t{1} << v)) continue;
            if (std::popcount(s) <= max_parents) {
                bs[s] = scorer.family_score(v, static_cast<NodeMask>(s));
                bp[s] = static_cast<NodeMask>(s);
            }
            for (std::size_t m = s; m; m &= m - 1) {
                const std::size_t sub = s ^ (m & -m);
                if (bs[sub] > bs[s]) {
                    bs[s] = bs[sub];
                    bp[s] = bp[sub];
                }
            }
        }
    }

    // best[W]: best score of a DAG over W; sink[W]: its last node in some order.
    std::vector<double> best(full, kNone);
    std::vector<int> sink(full, -1);
    best[0] = 0.0;
    for (std::size_t w = 1; w < full; ++w) {
        for (std::size_t m = w; m; m &= m - 1) {
            const int v = std::countr_zero(m);
            const std::size_t rest = w ^ (std::size_t{1} << v);
            const double candidate = best[rest] + best_score[static_cast<std::size_t>(v)][rest];
            if (candidate > best[w]) {
                best[w] = candidate;
                sink[w] = v;
            }
        }
    }
    if (!std::isfinite(best[full - 1])) throw NumericalRange("no DAG has a finite score");

    std::vector<NodeMask> parents(static_cast<std::size_t>(n), 0);
    for (std::size_t w = full - 1; w;) {
        const int v = sink[w];
        w ^= std::size_t{1} << v;
        parents[static_cast<std::size_t>(v)] = best_parents[static_cast<std::size_t>(v)][w];
    }
    return {Dag::from_parent_masks(variables, parents), best[full - 1]};
}

ArcConfidence exact_map_edge_probabilities(const FamilyScorer& scorer, const VariableSet& variables, int max_parents) {
    if (scorer.num_variables() != variables.size()) throw VariableMismatch("scorer and variable set differ in size");
    return ArcConfidence(variables, exact_edge_posteriors(scorer, max_parents));
}

ArcConfidence exact_map_edge_probabilities(const Dataset& data, int max_parents) {
    GaussianScorer scorer(data);
    return exact_map_edge_probabilities(scorer, data.variables(), max_parents);
}

}  // namespace bnq
