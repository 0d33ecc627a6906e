#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bnq/errors.hpp"
#include "bnq/gaussian_bn.hpp"
#include "bnq/parallel.hpp"
#include "bnq/random.hpp"
#include "bnq/search.hpp"

namespace bnq {

ArcConfidence::ArcConfidence(VariableSet variables, const Eigen::MatrixXd& oriented)
    : variables_(std::move(variables)), oriented_(oriented) {
    const auto n = static_cast<Eigen::Index>(variables_.size());
    if (oriented_.rows() != n || oriented_.cols() != n) throw VariableMismatch("confidence matrix size mismatch");
    oriented_.diagonal().setZero();
    strength_ = oriented_ + oriented_.transpose();
    direction_ = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            if (strength_(a, b) > 0.0) direction_(a, b) = oriented_(a, b) / strength_(a, b);
        }
    }
}

double ArcConfidence::strength(const std::string& a, const std::string& b) const {
    return strength_(variables_.index_of(a), variables_.index_of(b));
}

double ArcConfidence::direction(const std::string& a, const std::string& b) const {
    return direction_(variables_.index_of(a), variables_.index_of(b));
}

std::string arc_confidence_csv(const ArcConfidence& conf) {
    const auto& names = conf.variables().names();
    std::vector<int> order(names.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return names[a] < names[b]; });
    std::ostringstream out;
    out << "from,to,strength,direction\n";
    for (int a : order) {
        for (int b : order) {
            if (a == b) continue;
            out << names[a] << ',' << names[b] << ',' << format_double(conf.strength(a, b)) << ','
                << format_double(conf.direction(a, b)) << '\n';
        }
    }
    return out.str();
}

std::string to_string(Learner learner) {
    switch (learner) {
        case Learner::hill_climb: return "hill_climb";
        case Learner::hybrid_gs: return "hybrid_gs";
        case Learner::hybrid_mmpc: return "hybrid_mmpc";
        case Learner::exact_map: return "exact_map";
    }
    return "unknown";
}

Learner learner_from_string(const std::string& name) {
    for (auto l : {Learner::hill_climb, Learner::hybrid_gs, Learner::hybrid_mmpc, Learner::exact_map}) {
        if (to_string(l) == name) return l;
    }
    if (name == "hc") return Learner::hill_climb;
    if (name == "gs") return Learner::hybrid_gs;
    if (name == "mmpc") return Learner::hybrid_mmpc;
    if (name == "map") return Learner::exact_map;
    throw ConfigError("learner", "unknown learner '" + name + "'");
}

Eigen::MatrixXd adjacency_indicator(const Dag& dag) {
    const auto n = static_cast<Eigen::Index>(dag.variables().size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : dag.edges()) out(e.from, e.to) = 1.0;
    return out;
}

ArcConfidence bootstrap_average(const VariableSet& variables, std::size_t n, int boot_samples, std::uint64_t seed,
                                const ResampleLearner& learner, int jobs) {
    if (boot_samples < 1) throw ConfigError("boot_samples", "must be at least 1");
    if (n < 1) throw InsufficientRows("bootstrap needs at least one row");
    const auto p = static_cast<Eigen::Index>(variables.size());
    std::vector<Eigen::MatrixXd> results(static_cast<std::size_t>(boot_samples));
    parallel_for(results.size(), jobs, [&](std::size_t b) {
        Rng rng = make_rng(seed, 0, b);
        std::uniform_int_distribution<int> pick(0, static_cast<int>(n) - 1);
        std::vector<int> rows(n);
        for (auto& r : rows) r = pick(rng);
        results[b] = learner(rows, derive_seed(seed, 1, b));
        if (results[b].rows() != p || results[b].cols() != p) throw VariableMismatch("learner returned wrong size");
    });
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(p, p);
    for (const auto& m : results) sum += m;
    return ArcConfidence(variables, sum / static_cast<double>(boot_samples));
}

ArcConfidence bootstrap_average(const Dataset& data, Learner learner, int boot_samples, const HcConfig& cfg,
                                std::uint64_t seed, const BootstrapOptions& options) {
    cfg.validate();
    auto learn = [&](const std::vector<int>& rows, std::uint64_t learner_seed) -> Eigen::MatrixXd {
        const Dataset sample = data.select_rows(rows);
        HcConfig local = cfg;
        local.seed = learner_seed;
        switch (learner) {
            case Learner::hill_climb: return adjacency_indicator(hill_climb(sample, local).dag);
            case Learner::hybrid_gs:
                return adjacency_indicator(hybrid_search(sample, options.alpha, local, RestrictMethod::gs));
            case Learner::hybrid_mmpc:
                return adjacency_indicator(hybrid_search(sample, options.alpha, local, RestrictMethod::mmpc));
            case Learner::exact_map: {
                GaussianScorer scorer(sample);
                return adjacency_indicator(exact_map_dag(scorer, sample.variables(), cfg.max_parents).dag);
            }
        }
        throw ConfigError("learner", "unsupported learner");
    };
    return bootstrap_average(data.variables(), data.n(), boot_samples, seed, learn, options.jobs);
}

ArcConfidence bootstrap_average(const DiscreteDataset& data, Learner learner, int boot_samples, const HcConfig& cfg,
                                std::uint64_t seed, const BootstrapOptions& options) {
    cfg.validate();
    if (learner != Learner::hill_climb && learner != Learner::exact_map) {
        throw ConfigError("learner", "discrete data supports hill_climb and exact_map only");
    }
    auto learn = [&](const std::vector<int>& rows, std::uint64_t learner_seed) -> Eigen::MatrixXd {
        const DiscreteDataset sample = data.select_rows(rows);
        DiscreteScorer scorer(sample);
        if (learner == Learner::exact_map) {
            return adjacency_indicator(exact_map_dag(scorer, sample.variables(), cfg.max_parents).dag);
        }
        HcConfig local = cfg;
        local.seed = learner_seed;
        return adjacency_indicator(hill_climb(scorer, sample.variables(), local).dag);
    };
    return bootstrap_average(data.variables(), data.n(), boot_samples, seed, learn, options.jobs);
}

namespace {

/// Kept edges lying on a directed cycle (b reaches a for edge a -> b).
std::vector<Edge> cycle_edges(const std::vector<NodeMask>& parents) {
    const int n = static_cast<int>(parents.size());
    std::vector<NodeMask> reach(static_cast<std::size_t>(n), 0);  // reach[v]: nodes reachable from v
    for (int v = 0; v < n; ++v) {
        NodeMask frontier = bit(v), seen = 0;
        while (frontier) {
            const int x = std::countr_zero(frontier);
            frontier &= frontier - 1;
            for (int c = 0; c < n; ++c) {
                if ((parents[c] & bit(x)) && !(seen & bit(c))) {
                    seen |= bit(c);
                    frontier |= bit(c);
                }
            }
        }
        reach[v] = seen;
    }
    std::vector<Edge> out;
    for (int b = 0; b < n; ++b) {
        for (NodeMask m = parents[b]; m; m &= m - 1) {
            const int a = std::countr_zero(m);
            if (reach[b] & bit(a)) out.push_back({a, b});
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

AveragedNetwork averaged_network(const ArcConfidence& conf, double threshold, bool strict) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold", "must lie in [0, 1]");
    const int n = static_cast<int>(conf.size());
    std::vector<NodeMask> parents(static_cast<std::size_t>(n), 0);
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            const double s = conf.strength(a, b);
            const bool keep = s > 0.0 && (strict ? s > threshold : s >= threshold);
            if (!keep) continue;
            if (conf.direction(a, b) >= 0.5) {
                parents[b] |= bit(a);
            } else {
                parents[a] |= bit(b);
            }
        }
    }

    std::vector<Edge> repaired;
    std::vector<std::pair<int, int>> flipped;  // unordered pairs already flipped
    auto was_flipped = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        return std::find(flipped.begin(), flipped.end(), std::pair<int, int>{key.first, key.second}) != flipped.end();
    };
    while (true) {
        const auto on_cycle = cycle_edges(parents);
        if (on_cycle.empty()) break;
        const Edge* pick = nullptr;
        double closest = 2.0;
        for (const auto& e : on_cycle) {
            if (was_flipped(e.from, e.to)) continue;
            const double d = std::fabs(conf.direction(e.from, e.to) - 0.5);
            if (d < closest) {
                closest = d;
                pick = &e;
            }
        }
        if (pick) {
            parents[pick->to] &= ~bit(pick->from);
            parents[pick->from] |= bit(pick->to);
            const auto key = std::minmax(pick->from, pick->to);
            flipped.emplace_back(key.first, key.second);
            repaired.push_back(*pick);
            continue;
        }
        const Edge* weakest = &on_cycle.front();
        for (const auto& e : on_cycle) {
            if (conf.strength(e.from, e.to) < conf.strength(weakest->from, weakest->to)) weakest = &e;
        }
        parents[weakest->to] &= ~bit(weakest->from);
        repaired.push_back(*weakest);
    }
    return {Dag::from_parent_masks(conf.variables(), std::move(parents)), threshold, conf, std::move(repaired)};
}

nlohmann::json to_json(const AveragedNetwork& net) {
    nlohmann::json j = to_json(net.dag);
    j["threshold"] = net.threshold;
    auto repaired = nlohmann::json::array();
    for (const auto& e : net.repaired) {
        repaired.push_back({{"from", net.dag.variables()[e.from]}, {"to", net.dag.variables()[e.to]}});
    }
    j["repaired"] = repaired;
    return j;
}

}  // namespace bnq
