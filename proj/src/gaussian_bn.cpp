#include "bnq/gaussian_bn.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <random>

#include "bnq/errors.hpp"
#include "bnq/random.hpp"
#include "bnq/stats.hpp"

namespace bnq {

namespace {

Eigen::MatrixXd parent_columns(const Eigen::MatrixXd& m, NodeMask parents) {
    Eigen::MatrixXd out(m.rows(), std::popcount(parents));
    Eigen::Index j = 0;
    for (NodeMask p = parents; p; p &= p - 1) out.col(j++) = m.col(std::countr_zero(p));
    return out;
}

}  // namespace

GaussianBn::GaussianBn(Dag dag, std::vector<NodeParameters> nodes) : dag_(std::move(dag)), nodes_(std::move(nodes)) {
    if (nodes_.size() != dag_.size()) throw VariableMismatch("one parameter block per node is required");
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
        const auto& p = nodes_[v];
        const auto expected = dag_.parents(static_cast<int>(v)).size();
        if (p.coefficients.size() != expected) {
            throw std::invalid_argument("node '" + dag_.variables()[v] + "' has " + std::to_string(expected) +
                                        " parents but " + std::to_string(p.coefficients.size()) + " coefficients");
        }
        if (!std::isfinite(p.residual_sd) || p.residual_sd < 0.0) {
            throw std::invalid_argument("node '" + dag_.variables()[v] + "' has an invalid residual sd");
        }
    }
}

double GaussianBn::coefficient(int parent, int child) const {
    const auto parents = dag_.parents(child);
    for (std::size_t i = 0; i < parents.size(); ++i) {
        if (parents[i] == parent) return nodes_[static_cast<std::size_t>(child)].coefficients[i];
    }
    throw std::invalid_argument("edge " + dag_.variables()[parent] + " -> " + dag_.variables()[child] + " not present");
}

GaussianBn fit(const Dag& dag, const Dataset& data, FitScale scale) {
    if (dag.variables() != data.variables()) throw VariableMismatch("DAG and dataset variables differ");
    if (scale == FitScale::standardized) return fit(dag, data.standardized(), FitScale::raw);
    const auto& m = data.rows();
    const double n = static_cast<double>(data.n());
    std::vector<NodeParameters> nodes(dag.size());
    for (std::size_t v = 0; v < dag.size(); ++v) {
        const NodeMask parents = dag.parent_mask(static_cast<int>(v));
        const auto k = static_cast<std::size_t>(std::popcount(parents));
        if (data.n() <= k + 1) {
            throw InsufficientRows("node '" + dag.variables()[v] + "' with " + std::to_string(k) + " parents needs more than " +
                                   std::to_string(k + 1) + " rows");
        }
        const auto r = ols(parent_columns(m, parents), m.col(static_cast<Eigen::Index>(v)));
        auto& node = nodes[v];
        node.intercept = r.coefficients(0);
        node.coefficients.assign(r.coefficients.data() + 1, r.coefficients.data() + r.coefficients.size());
        node.residual_sd = std::sqrt(r.rss / n);
    }
    return GaussianBn(dag, std::move(nodes));
}

GaussianScorer::GaussianScorer(const Dataset& data) : centred_(data.rows()), variables_(data.variables()) {
    for (Eigen::Index j = 0; j < centred_.cols(); ++j) centred_.col(j).array() -= centred_.col(j).mean();
}

double GaussianScorer::residual_ss(int node, NodeMask parents) const {
    const Eigen::VectorXd y = centred_.col(node);
    const double tss = y.squaredNorm();
    double rss = tss;
    if (parents != 0) {
        const Eigen::MatrixXd x = parent_columns(centred_, parents);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
        if (qr.rank() < x.cols()) {
            throw RankDeficient("parents of '" + variables_[node] + "' are linearly dependent");
        }
        rss = (y - x * qr.solve(y)).squaredNorm();
    }
    if (tss == 0.0 || rss <= 1e-20 * tss) {
        throw DegenerateVariance("node '" + variables_[node] + "' has zero residual variance");
    }
    return rss;
}

double GaussianScorer::family_loglik(int node, NodeMask parents) const {
    const double n = static_cast<double>(centred_.rows());
    const double sigma2 = residual_ss(node, parents) / n;
    return -0.5 * n * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0);
}

double GaussianScorer::family_penalty(NodeMask parents) const {
    const double k = static_cast<double>(std::popcount(parents)) + 2.0;
    return 0.5 * k * std::log(static_cast<double>(centred_.rows()));
}

double GaussianScorer::family_score(int node, NodeMask parents) const {
    if (static_cast<std::size_t>(centred_.rows()) <= static_cast<std::size_t>(std::popcount(parents)) + 1) {
        throw InsufficientRows("too few rows to score a family with " + std::to_string(std::popcount(parents)) + " parents");
    }
    return family_loglik(node, parents) - family_penalty(parents);
}

double bic_g(const Dag& dag, const Dataset& data) {
    if (dag.variables() != data.variables()) throw VariableMismatch("DAG and dataset variables differ");
    return GaussianScorer(data).score(dag);
}

Dataset simulate(const GaussianBn& bn, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InsufficientRows("simulate needs n >= 1");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto rows = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd out(rows, static_cast<Eigen::Index>(bn.dag().size()));
    for (int v : topological_order(bn.dag())) {
        const auto& p = bn.node(v);
        Eigen::VectorXd col = Eigen::VectorXd::Constant(rows, p.intercept);
        const auto parents = bn.dag().parents(v);
        for (std::size_t i = 0; i < parents.size(); ++i) col += p.coefficients[i] * out.col(parents[i]);
        for (Eigen::Index r = 0; r < rows; ++r) col(r) += p.residual_sd * normal(rng);
        out.col(v) = col;
    }
    return Dataset(bn.variables(), std::move(out));
}

Moments implied_moments(const GaussianBn& bn) {
    const auto n = static_cast<Eigen::Index>(bn.dag().size());
    Moments m{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
    std::vector<int> done;
    for (int v : topological_order(bn.dag())) {
        const auto& p = bn.node(v);
        const auto parents = bn.dag().parents(v);
        double mu = p.intercept;
        for (std::size_t i = 0; i < parents.size(); ++i) mu += p.coefficients[i] * m.mean(parents[i]);
        m.mean(v) = mu;
        // cov(v, u) = sum_i b_i cov(parent_i, u) for every u already placed
        for (int u : done) {
            double c = 0.0;
            for (std::size_t i = 0; i < parents.size(); ++i) c += p.coefficients[i] * m.covariance(parents[i], u);
            m.covariance(v, u) = m.covariance(u, v) = c;
        }
        double var = p.residual_sd * p.residual_sd;
        for (std::size_t i = 0; i < parents.size(); ++i) {
            for (std::size_t j = 0; j < parents.size(); ++j) {
                var += p.coefficients[i] * p.coefficients[j] * m.covariance(parents[i], parents[j]);
            }
        }
        m.covariance(v, v) = var;
        done.push_back(v);
    }
    return m;
}

EdgeInference edge_inference(const Dag& dag, const Dataset& data) {
    if (dag.variables() != data.variables()) throw VariableMismatch("DAG and dataset variables differ");
    EdgeInference out;
    out.adjusted_r2.assign(dag.size(), 0.0);
    for (std::size_t v = 0; v < dag.size(); ++v) {
        const NodeMask parents = dag.parent_mask(static_cast<int>(v));
        if (parents == 0) continue;
        const auto r = ols(parent_columns(data.rows(), parents), data.rows().col(static_cast<Eigen::Index>(v)));
        Eigen::Index j = 1;
        for (NodeMask p = parents; p; p &= p - 1, ++j) {
            out.edges.push_back({{std::countr_zero(p), static_cast<int>(v)}, r.coefficients(j), r.p_values(j)});
        }
        out.adjusted_r2[v] = r.adjusted_r2;
    }
    std::sort(out.edges.begin(), out.edges.end(),
              [](const EdgeStatistic& a, const EdgeStatistic& b) { return a.edge < b.edge; });
    return out;
}

nlohmann::json to_json(const GaussianBn& bn) {
    const auto& vars = bn.variables();
    nlohmann::json nodes = nlohmann::json::object();
    for (std::size_t v = 0; v < vars.size(); ++v) {
        std::vector<std::string> parents;
        for (int p : bn.dag().parents(static_cast<int>(v))) parents.push_back(vars[p]);
        const auto& node = bn.node(static_cast<int>(v));
        nodes[vars[v]] = {{"intercept", node.intercept},
                          {"parents", parents},
                          {"coefficients", node.coefficients},
                          {"residual_sd", node.residual_sd}};
    }
    return {{"variables", vars.names()}, {"nodes", nodes}};
}

GaussianBn gaussian_bn_from_json(const nlohmann::json& j) {
    VariableSet vars(j.at("variables").get<std::vector<std::string>>());
    std::vector<std::pair<std::string, std::string>> edges;
    const auto& nodes = j.at("nodes");
    for (const auto& name : vars.names()) {
        for (const auto& p : nodes.at(name).at("parents")) edges.emplace_back(p.get<std::string>(), name);
    }
    Dag dag = Dag::from_names(vars, edges);
    std::vector<NodeParameters> params(vars.size());
    for (std::size_t v = 0; v < vars.size(); ++v) {
        const auto& node = nodes.at(vars[v]);
        const auto listed = node.at("parents").get<std::vector<std::string>>();
        const auto coefs = node.at("coefficients").get<std::vector<double>>();
        if (listed.size() != coefs.size()) throw std::invalid_argument("parents and coefficients differ in length for '" + vars[v] + "'");
        // stored order may differ from index order
        for (int p : dag.parents(static_cast<int>(v))) {
            const auto it = std::find(listed.begin(), listed.end(), vars[p]);
            params[v].coefficients.push_back(coefs[static_cast<std::size_t>(it - listed.begin())]);
        }
        params[v].intercept = node.at("intercept").get<double>();
        params[v].residual_sd = node.at("residual_sd").get<double>();
    }
    return GaussianBn(std::move(dag), std::move(params));
}

}  // namespace bnq
