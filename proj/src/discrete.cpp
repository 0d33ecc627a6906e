#include "bnq/discrete.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "bnq/errors.hpp"
#include "bnq/stats.hpp"

namespace bnq {

std::string to_string(DiscretizationMethod method) {
    switch (method) {
        case DiscretizationMethod::equal_interval: return "equal-interval";
        case DiscretizationMethod::equal_frequency: return "equal-frequency";
        case DiscretizationMethod::kmeans: return "kmeans";
        case DiscretizationMethod::hartemink: return "hartemink";
    }
    return "unknown";
}

DiscretizationMethod discretization_method_from_string(std::string name) {
    std::replace(name.begin(), name.end(), '_', '-');
    if (name == "equal-interval" || name == "interval" || name == "I") return DiscretizationMethod::equal_interval;
    if (name == "equal-frequency" || name == "quantile" || name == "F") return DiscretizationMethod::equal_frequency;
    if (name == "kmeans" || name == "K") return DiscretizationMethod::kmeans;
    if (name == "hartemink" || name == "H") return DiscretizationMethod::hartemink;
    throw ConfigError("discretization.method", "unknown discretization method '" + name + "'");
}

void DiscretizationSpec::validate() const {
    if (bins < 2) throw ConfigError("discretization.bins", "must be at least 2");
    if (hartemink_initial_bins < bins) {
        throw ConfigError("discretization.hartemink_initial_bins", "must be at least bins");
    }
}

DiscreteDataset::DiscreteDataset(VariableSet variables, Eigen::MatrixXi rows, std::vector<int> levels)
    : variables_(std::move(variables)), rows_(std::move(rows)), levels_(std::move(levels)) {
    if (static_cast<std::size_t>(rows_.cols()) != variables_.size() || levels_.size() != variables_.size()) {
        throw VariableMismatch("discrete dataset shape differs from its variable set");
    }
    for (Eigen::Index j = 0; j < rows_.cols(); ++j) {
        if (levels_[static_cast<std::size_t>(j)] < 1) throw std::invalid_argument("level counts must be positive");
        if (rows_.rows() > 0 && (rows_.col(j).minCoeff() < 0 || rows_.col(j).maxCoeff() >= levels_[static_cast<std::size_t>(j)])) {
            throw std::invalid_argument("cell outside the level range of '" + variables_[j] + "'");
        }
    }
}

DiscreteDataset DiscreteDataset::select_rows(const std::vector<int>& rows) const {
    Eigen::MatrixXi out(static_cast<Eigen::Index>(rows.size()), rows_.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows_.row(rows[i]);
    return DiscreteDataset(variables_, std::move(out), levels_);
}

int level_of(double value, const std::vector<double>& cut_points) {
    return static_cast<int>(std::upper_bound(cut_points.begin(), cut_points.end(), value) - cut_points.begin());
}

namespace {

std::vector<double> sorted_column(const Dataset& data, Eigen::Index j) {
    const auto col = data.rows().col(j);
    std::vector<double> v(col.data(), col.data() + col.size());
    std::sort(v.begin(), v.end());
    return v;
}

std::vector<double> interval_cuts(const std::vector<double>& sorted, int bins) {
    const double lo = sorted.front();
    const double width = (sorted.back() - lo) / bins;
    std::vector<double> cuts;
    for (int k = 1; k < bins; ++k) cuts.push_back(lo + width * k);
    return cuts;
}

std::vector<double> quantile_cuts(const std::vector<double>& sorted, int bins) {
    std::vector<double> cuts;
    for (int k = 1; k < bins; ++k) cuts.push_back(quantile_type7(sorted, static_cast<double>(k) / bins));
    return cuts;
}

std::vector<double> kmeans_cuts(const std::vector<double>& sorted, int bins) {
    std::vector<double> centres;
    for (int k = 0; k < bins; ++k) centres.push_back(quantile_type7(sorted, (k + 0.5) / bins));
    std::vector<int> assign(sorted.size(), -1);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        std::vector<double> sum(static_cast<std::size_t>(bins), 0.0);
        std::vector<int> count(static_cast<std::size_t>(bins), 0);
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            int best = 0;
            for (int k = 1; k < bins; ++k) {
                if (std::fabs(sorted[i] - centres[k]) < std::fabs(sorted[i] - centres[best])) best = k;
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
            sum[best] += sorted[i];
            ++count[best];
        }
        for (int k = 0; k < bins; ++k) {
            if (count[k] > 0) centres[k] = sum[k] / count[k];
        }
        std::sort(centres.begin(), centres.end());
        if (!changed) break;
    }
    std::vector<double> cuts;
    for (int k = 1; k < bins; ++k) cuts.push_back(0.5 * (centres[k - 1] + centres[k]));
    return cuts;
}

double mi_from_table(const std::vector<double>& table, int rows, int cols, double n) {
    std::vector<double> row_sum(static_cast<std::size_t>(rows), 0.0), col_sum(static_cast<std::size_t>(cols), 0.0);
    for (int a = 0; a < rows; ++a) {
        for (int b = 0; b < cols; ++b) {
            row_sum[a] += table[a * cols + b];
            col_sum[b] += table[a * cols + b];
        }
    }
    double mi = 0.0;
    for (int a = 0; a < rows; ++a) {
        for (int b = 0; b < cols; ++b) {
            const double c = table[a * cols + b];
            if (c > 0.0) mi += c / n * std::log(c * n / (row_sum[a] * col_sum[b]));
        }
    }
    return std::max(mi, 0.0);
}

std::vector<double> contingency(const Eigen::MatrixXi& rows, Eigen::Index a, int la, Eigen::Index b, int lb) {
    std::vector<double> table(static_cast<std::size_t>(la * lb), 0.0);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) table[rows(i, a) * lb + rows(i, b)] += 1.0;
    return table;
}

double entropy(const Eigen::MatrixXi& rows, Eigen::Index a, int levels) {
    std::vector<double> counts(static_cast<std::size_t>(levels), 0.0);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) counts[rows(i, a)] += 1.0;
    const double n = static_cast<double>(rows.rows());
    double h = 0.0;
    for (double c : counts) {
        if (c > 0.0) h -= c / n * std::log(c / n);
    }
    return h;
}

void require_variation(const Dataset& data, Eigen::Index j, const std::vector<double>& sorted) {
    if (sorted.front() == sorted.back()) {
        throw DegenerateColumn("variable '" + data.variables()[j] + "' is constant");
    }
}

Eigen::MatrixXi apply_cuts(const Dataset& data, const std::vector<std::vector<double>>& cuts) {
    Eigen::MatrixXi out(data.rows().rows(), data.rows().cols());
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = level_of(data.rows()(i, j), cuts[j]);
    }
    return out;
}

/// Initial Hartemink cuts: equal-frequency with empty bins removed.
std::vector<double> nonempty_cuts(const std::vector<double>& sorted, int bins) {
    std::vector<double> distinct;
    std::unique_copy(sorted.begin(), sorted.end(), std::back_inserter(distinct));
    std::vector<double> cuts;
    if (static_cast<int>(distinct.size()) <= bins) {
        for (std::size_t k = 1; k < distinct.size(); ++k) cuts.push_back(0.5 * (distinct[k - 1] + distinct[k]));
        return cuts;
    }
    for (double c : quantile_cuts(sorted, bins)) {
        if (!cuts.empty() && c == cuts.back()) continue;
        cuts.push_back(c);
    }
    // drop cuts that leave an empty interval
    std::vector<double> kept;
    double prev = -std::numeric_limits<double>::infinity();
    for (double c : cuts) {
        const auto lo = std::lower_bound(sorted.begin(), sorted.end(), prev);
        const auto hi = std::lower_bound(sorted.begin(), sorted.end(), c);
        if (hi - lo > 0) {
            kept.push_back(c);
            prev = c;
        }
    }
    if (!kept.empty() && std::lower_bound(sorted.begin(), sorted.end(), kept.back()) == sorted.end()) kept.pop_back();
    return kept;
}

}  // namespace

Discretization hartemink_discretize(const Dataset& data, int bins, int initial_bins, std::vector<double>* trace) {
    DiscretizationSpec{DiscretizationMethod::hartemink, bins, initial_bins}.validate();
    if (data.n() < static_cast<std::size_t>(bins)) throw InsufficientRows("fewer rows than bins");
    const auto p = static_cast<Eigen::Index>(data.p());
    std::vector<std::vector<double>> cuts(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto sorted = sorted_column(data, j);
        require_variation(data, j, sorted);
        cuts[j] = nonempty_cuts(sorted, initial_bins);
        if (static_cast<int>(cuts[j].size()) + 1 < bins) {
            throw DegenerateColumn("variable '" + data.variables()[j] + "' has fewer than " + std::to_string(bins) +
                                   " distinct values");
        }
    }
    Eigen::MatrixXi levels = apply_cuts(data, cuts);
    const double n = static_cast<double>(data.n());
    auto level_count = [&](Eigen::Index j) { return static_cast<int>(cuts[j].size()) + 1; };
    auto total_mi = [&] {
        double total = 0.0;
        for (Eigen::Index a = 0; a < p; ++a) {
            for (Eigen::Index b = a + 1; b < p; ++b) {
                total += mi_from_table(contingency(levels, a, level_count(a), b, level_count(b)), level_count(a), level_count(b), n);
            }
        }
        return total;
    };
    if (trace) trace->push_back(total_mi());

    bool pending = true;
    while (pending) {
        pending = false;
        for (Eigen::Index v = 0; v < p; ++v) {
            const int lv = level_count(v);
            if (lv <= bins) continue;
            std::vector<std::vector<double>> tables;
            for (Eigen::Index u = 0; u < p; ++u) {
                tables.push_back(u == v ? std::vector<double>{} : contingency(levels, v, lv, u, level_count(u)));
            }
            int best_merge = 0;
            double best_mi = -1.0;
            for (int j = 0; j + 1 < lv; ++j) {
                double mi = 0.0;
                for (Eigen::Index u = 0; u < p; ++u) {
                    if (u == v) continue;
                    const int lu = level_count(u);
                    std::vector<double> merged(static_cast<std::size_t>((lv - 1) * lu), 0.0);
                    for (int a = 0; a < lv; ++a) {
                        const int target = a <= j ? a : a - 1;
                        for (int b = 0; b < lu; ++b) merged[target * lu + b] += tables[u][a * lu + b];
                    }
                    mi += mi_from_table(merged, lv - 1, lu, n);
                }
                if (mi > best_mi + 1e-12) {
                    best_mi = mi;
                    best_merge = j;
                }
            }
            // merging levels j and j+1 removes cut j
            cuts[v].erase(cuts[v].begin() + best_merge);
            for (Eigen::Index i = 0; i < levels.rows(); ++i) {
                if (levels(i, v) > best_merge) --levels(i, v);
            }
            if (trace) trace->push_back(total_mi());
            if (level_count(v) > bins) pending = true;
        }
    }
    std::vector<int> level_counts(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) level_counts[j] = level_count(j);
    return {DiscreteDataset(data.variables(), std::move(levels), std::move(level_counts)), std::move(cuts)};
}

Discretization discretize(const Dataset& data, const DiscretizationSpec& spec) {
    spec.validate();
    if (spec.method == DiscretizationMethod::hartemink) {
        return hartemink_discretize(data, spec.bins, spec.hartemink_initial_bins);
    }
    if (data.n() < static_cast<std::size_t>(spec.bins)) throw InsufficientRows("fewer rows than bins");
    std::vector<std::vector<double>> cuts(data.p());
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(data.p()); ++j) {
        const auto sorted = sorted_column(data, j);
        require_variation(data, j, sorted);
        switch (spec.method) {
            case DiscretizationMethod::equal_interval: cuts[j] = interval_cuts(sorted, spec.bins); break;
            case DiscretizationMethod::equal_frequency: cuts[j] = quantile_cuts(sorted, spec.bins); break;
            case DiscretizationMethod::kmeans: cuts[j] = kmeans_cuts(sorted, spec.bins); break;
            case DiscretizationMethod::hartemink: break;
        }
    }
    auto levels = apply_cuts(data, cuts);
    return {DiscreteDataset(data.variables(), std::move(levels), std::vector<int>(data.p(), spec.bins)), std::move(cuts)};
}

Eigen::MatrixXd pairwise_mutual_information(const DiscreteDataset& data) {
    const auto p = static_cast<Eigen::Index>(data.p());
    const double n = static_cast<double>(data.n());
    Eigen::MatrixXd mi = Eigen::MatrixXd::Zero(p, p);
    if (data.n() == 0) return mi;
    const auto& lv = data.levels();
    for (Eigen::Index a = 0; a < p; ++a) {
        mi(a, a) = entropy(data.rows(), a, lv[a]);
        for (Eigen::Index b = a + 1; b < p; ++b) {
            mi(a, b) = mi(b, a) = mi_from_table(contingency(data.rows(), a, lv[a], b, lv[b]), lv[a], lv[b], n);
        }
    }
    return mi;
}

double DiscreteScorer::family_loglik(int node, NodeMask parents) const {
    const auto& rows = data_->rows();
    const auto& levels = data_->levels();
    const int r = levels[static_cast<std::size_t>(node)];
    std::vector<int> parent_idx;
    std::vector<long long> stride;
    long long q = 1;
    for (NodeMask m = parents; m; m &= m - 1) {
        const int p = std::countr_zero(m);
        parent_idx.push_back(p);
        stride.push_back(q);
        q *= levels[static_cast<std::size_t>(p)];
    }
    auto config_of = [&](Eigen::Index i) {
        long long c = 0;
        for (std::size_t k = 0; k < parent_idx.size(); ++k) c += stride[k] * rows(i, parent_idx[k]);
        return c;
    };
    double loglik = 0.0;
    auto accumulate = [&](auto& counts, auto& totals) {
        for (const auto& [key, count] : counts) {
            const double c = static_cast<double>(count);
            loglik += c * std::log(c / static_cast<double>(totals[key / r]));
        }
    };
    if (q * r <= (1LL << 22)) {
        std::vector<long long> counts(static_cast<std::size_t>(q * r), 0), totals(static_cast<std::size_t>(q), 0);
        for (Eigen::Index i = 0; i < rows.rows(); ++i) {
            const long long c = config_of(i);
            ++counts[static_cast<std::size_t>(c * r + rows(i, node))];
            ++totals[static_cast<std::size_t>(c)];
        }
        for (std::size_t k = 0; k < counts.size(); ++k) {
            if (counts[k] > 0) {
                const double c = static_cast<double>(counts[k]);
                loglik += c * std::log(c / static_cast<double>(totals[k / static_cast<std::size_t>(r)]));
            }
        }
    } else {
        std::unordered_map<long long, long long> counts, totals;
        for (Eigen::Index i = 0; i < rows.rows(); ++i) {
            const long long c = config_of(i);
            ++counts[c * r + rows(i, node)];
            ++totals[c];
        }
        accumulate(counts, totals);
    }
    return loglik;
}

double DiscreteScorer::family_penalty(int node, NodeMask parents) const {
    const auto& levels = data_->levels();
    double q = 1.0;
    for (NodeMask m = parents; m; m &= m - 1) q *= levels[static_cast<std::size_t>(std::countr_zero(m))];
    const double k = (levels[static_cast<std::size_t>(node)] - 1) * q;
    return 0.5 * k * std::log(static_cast<double>(data_->n()));
}

double DiscreteScorer::family_score(int node, NodeMask parents) const {
    return family_loglik(node, parents) - family_penalty(node, parents);
}

double bic_discrete(const Dag& dag, const DiscreteDataset& data) {
    if (dag.variables() != data.variables()) throw VariableMismatch("DAG and dataset variables differ");
    return DiscreteScorer(data).score(dag);
}

void write_discrete_csv(const DiscreteDataset& data, std::ostream& out) {
    const auto& names = data.variables().names();
    for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
    out << '\n';
    for (Eigen::Index i = 0; i < data.rows().rows(); ++i) {
        for (Eigen::Index j = 0; j < data.rows().cols(); ++j) out << (j ? "," : "") << data.rows()(i, j);
        out << '\n';
    }
}

nlohmann::json cut_points_json(const Discretization& d) {
    nlohmann::json j = nlohmann::json::object();
    const auto& names = d.data.variables().names();
    for (std::size_t v = 0; v < names.size(); ++v) {
        j[names[v]] = {{"levels", d.data.levels()[v]}, {"cut_points", d.cut_points[v]}};
    }
    return j;
}

}  // namespace bnq
