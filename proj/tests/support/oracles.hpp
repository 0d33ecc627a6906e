#pragma once
// Independent reference computations used only by tests. Nothing here calls
// into the library's numerical code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Labeled DAG count: a(n) = sum_k (-1)^(k+1) C(n,k) 2^(k(n-k)) a(n-k).
inline long long dag_count(int n) {
    std::vector<long long> a(static_cast<std::size_t>(n) + 1, 0);
    a[0] = 1;
    for (int m = 1; m <= n; ++m) {
        long long total = 0;
        long long binom = 1;
        for (int k = 1; k <= m; ++k) {
            binom = binom * (m - k + 1) / k;
            const long long term = binom * (1LL << (k * (m - k))) * a[static_cast<std::size_t>(m - k)];
            total += (k % 2 == 1) ? term : -term;
        }
        a[static_cast<std::size_t>(m)] = total;
    }
    return a[static_cast<std::size_t>(n)];
}

/// Adjacency matrix graph: adj[u][v] means u -> v.
using Adj = std::vector<std::vector<bool>>;

inline bool acyclic(const Adj& adj) {
    const auto n = adj.size();
    std::vector<int> state(n, 0);
    std::function<bool(std::size_t)> dfs = [&](std::size_t u) {
        state[u] = 1;
        for (std::size_t v = 0; v < n; ++v) {
            if (!adj[u][v]) continue;
            if (state[v] == 1) return false;
            if (state[v] == 0 && !dfs(v)) return false;
        }
        state[u] = 2;
        return true;
    };
    for (std::size_t u = 0; u < n; ++u) {
        if (state[u] == 0 && !dfs(u)) return false;
    }
    return true;
}

/// Every acyclic digraph on n nodes, by filtering all 2^(n(n-1)) digraphs.
inline std::vector<Adj> all_dags(int n) {
    std::vector<std::pair<int, int>> slots;
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
            if (u != v) slots.emplace_back(u, v);
    std::vector<Adj> out;
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << slots.size()); ++code) {
        Adj adj(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n), false));
        bool both = false;
        for (std::size_t s = 0; s < slots.size(); ++s) {
            if (code >> s & 1) adj[slots[s].first][slots[s].second] = true;
        }
        for (int u = 0; u < n && !both; ++u)
            for (int v = u + 1; v < n; ++v)
                if (adj[u][v] && adj[v][u]) both = true;
        if (!both && acyclic(adj)) out.push_back(adj);
    }
    return out;
}

inline std::vector<int> parents_of(const Adj& adj, int v) {
    std::vector<int> out;
    for (std::size_t u = 0; u < adj.size(); ++u) {
        if (adj[u][static_cast<std::size_t>(v)]) out.push_back(static_cast<int>(u));
    }
    return out;
}

/// Least squares with intercept via normal equations in long double and
/// Gauss-Jordan elimination with partial pivoting. Returns the RSS.
inline long double normal_equations_rss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                        std::vector<long double>* beta_out = nullptr) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto k = static_cast<std::size_t>(x.cols()) + 1;
    std::vector<std::vector<long double>> a(k, std::vector<long double>(k + 1, 0.0L));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<long double> row(k);
        row[0] = 1.0L;
        for (std::size_t j = 1; j < k; ++j) row[j] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1));
        for (std::size_t r = 0; r < k; ++r) {
            for (std::size_t c = 0; c < k; ++c) a[r][c] += row[r] * row[c];
            a[r][k] += row[r] * y(static_cast<Eigen::Index>(i));
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < k; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        for (std::size_t r = 0; r < k; ++r) {
            if (r == c) continue;
            const long double f = a[r][c] / a[c][c];
            for (std::size_t cc = c; cc <= k; ++cc) a[r][cc] -= f * a[c][cc];
        }
    }
    std::vector<long double> beta(k);
    for (std::size_t r = 0; r < k; ++r) beta[r] = a[r][k] / a[r][r];
    long double rss = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        long double fit = beta[0];
        for (std::size_t j = 1; j < k; ++j) fit += beta[j] * x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1));
        const long double e = y(static_cast<Eigen::Index>(i)) - fit;
        rss += e * e;
    }
    if (beta_out) *beta_out = beta;
    return rss;
}

/// BIC-g family score: -n/2 (ln(2 pi rss/n) + 1) - (|Pa| + 2)/2 ln n.
inline double gaussian_family_score(const Eigen::MatrixXd& data, int node, const std::vector<int>& parents) {
    const auto n = static_cast<double>(data.rows());
    Eigen::MatrixXd x(data.rows(), static_cast<Eigen::Index>(parents.size()));
    for (std::size_t j = 0; j < parents.size(); ++j) x.col(static_cast<Eigen::Index>(j)) = data.col(parents[j]);
    const double rss = static_cast<double>(normal_equations_rss(x, data.col(node)));
    const double loglik = -n / 2.0 * (std::log(2.0 * std::numbers::pi * rss / n) + 1.0);
    return loglik - (static_cast<double>(parents.size()) + 2.0) / 2.0 * std::log(n);
}

/// Multinomial BIC family score from explicit count tables.
inline double discrete_family_score(const Eigen::MatrixXi& data, const std::vector<int>& levels, int node,
                                    const std::vector<int>& parents) {
    std::map<std::vector<int>, std::map<int, int>> counts;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        std::vector<int> config;
        for (int p : parents) config.push_back(data(i, p));
        ++counts[config][data(i, node)];
    }
    double loglik = 0.0;
    for (const auto& [config, cells] : counts) {
        int total = 0;
        for (const auto& [level, c] : cells) total += c;
        for (const auto& [level, c] : cells) loglik += c * std::log(static_cast<double>(c) / total);
    }
    double q = 1.0;
    for (int p : parents) q *= levels[static_cast<std::size_t>(p)];
    const double k = (levels[static_cast<std::size_t>(node)] - 1) * q;
    return loglik - k / 2.0 * std::log(static_cast<double>(data.rows()));
}

/// Exact edge posteriors by summing exp(score) over every DAG.
inline Eigen::MatrixXd brute_force_posteriors(int n, int max_parents,
                                              const std::function<double(int, const std::vector<int>&)>& family) {
    const auto dags = all_dags(n);
    std::vector<long double> log_w;
    for (const auto& g : dags) {
        long double s = 0.0L;
        bool ok = true;
        for (int v = 0; v < n && ok; ++v) {
            const auto pa = parents_of(g, v);
            if (static_cast<int>(pa.size()) > max_parents) ok = false;
            else s += family(v, pa);
        }
        log_w.push_back(ok ? s : -INFINITY);
    }
    const long double mx = *std::max_element(log_w.begin(), log_w.end());
    long double z = 0.0L;
    Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> acc =
        Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
    for (std::size_t g = 0; g < dags.size(); ++g) {
        const long double w = std::exp(log_w[g] - mx);
        z += w;
        for (int u = 0; u < n; ++u)
            for (int v = 0; v < n; ++v)
                if (dags[g][u][v]) acc(u, v) += w;
    }
    return (acc / z).cast<double>();
}

/// Random linear-Gaussian data over a random DAG for property tests.
inline Eigen::MatrixXd random_gaussian_data(int p, int n, std::uint64_t seed, double edge_prob = 0.5) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0), coef(0.5, 1.5);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);  // b(i, j): i -> j, i < j
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j)
            if (u(rng) < edge_prob) b(i, j) = (u(rng) < 0.5 ? -1 : 1) * coef(rng);
    Eigen::MatrixXd x(n, p);
    for (int r = 0; r < n; ++r) {
        for (int j = 0; j < p; ++j) {
            double v = z(rng);
            for (int i = 0; i < j; ++i) v += b(i, j) * x(r, i);
            x(r, j) = v;
        }
    }
    return x;
}

}  // namespace oracle
