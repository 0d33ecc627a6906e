#include <bit>
#include <cmath>
#include <limits>

#include "bnq/errors.hpp"
#include "bnq/gaussian_bn.hpp"
#include "bnq/search.hpp"
#include "bnq/stats.hpp"

namespace bnq {

PartialCorrelationTest::PartialCorrelationTest(const Dataset& data) : n_(static_cast<double>(data.n())) {
    if (data.p() > kMaxNodes) throw SizeLimit("at most 64 variables are supported");
    const Eigen::MatrixXd centred = data.rows().rowwise() - data.rows().colwise().mean();
    Eigen::MatrixXd cov = centred.transpose() * centred;
    const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    for (Eigen::Index j = 0; j < sd.size(); ++j) {
        if (!(sd(j) > 0.0)) throw DegenerateColumn("column '" + data.variables()[static_cast<std::size_t>(j)] + "' is constant");
    }
    corr_ = cov.array() / (sd * sd.transpose()).array();
    corr_.diagonal().setOnes();
}

double PartialCorrelationTest::p_value(int x, int y, NodeMask given) const {
    const int k = std::popcount(given);
    const double dof = n_ - k - 3.0;
    if (dof <= 0.0) return 1.0;
    double r = 0.0;
    if (k == 0) {
        r = corr_(x, y);
    } else {
        std::vector<int> idx{x, y};
        for (NodeMask m = given; m; m &= m - 1) idx.push_back(std::countr_zero(m));
        const auto m = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXd sub(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j) sub(i, j) = corr_(idx[i], idx[j]);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
        lu.setThreshold(1e-12);
        if (!lu.isInvertible()) throw SingularCorrelation("conditioning correlation matrix is singular");
        const Eigen::MatrixXd prec = lu.inverse();
        r = -prec(0, 1) / std::sqrt(prec(0, 0) * prec(1, 1));
    }
    if (!std::isfinite(r)) throw SingularCorrelation("partial correlation is undefined");
    if (std::fabs(r) >= 1.0) return 0.0;
    const double z = std::sqrt(dof) * std::atanh(r);
    return normal_two_sided_p(z);
}

namespace {

/// Calls f(S) for subsets S of `pool`; all subsets when small, otherwise those of size <= 3.
template <class F>
bool all_subsets(NodeMask pool, F&& f) {
    const int size = std::popcount(pool);
    if (size <= 12) {
        NodeMask s = 0;
        while (true) {
            if (!f(s)) return false;
            if (s == pool) break;
            s = (s - pool) & pool;
        }
        return true;
    }
    std::vector<int> members;
    for (NodeMask m = pool; m; m &= m - 1) members.push_back(std::countr_zero(m));
    if (!f(NodeMask{0})) return false;
    const auto count = members.size();
    for (std::size_t a = 0; a < count; ++a) {
        if (!f(bit(members[a]))) return false;
        for (std::size_t b = a + 1; b < count; ++b) {
            if (!f(bit(members[a]) | bit(members[b]))) return false;
            for (std::size_t c = b + 1; c < count; ++c) {
                if (!f(bit(members[a]) | bit(members[b]) | bit(members[c]))) return false;
            }
        }
    }
    return true;
}

NodeMask grow_shrink_blanket(const PartialCorrelationTest& test, int x, int p, double alpha) {
    NodeMask mb = 0;
    for (bool grew = true; grew;) {
        grew = false;
        for (int y = 0; y < p; ++y) {
            if (y == x || (mb & bit(y))) continue;
            if (test.p_value(x, y, mb) < alpha) {
                mb |= bit(y);
                grew = true;
                break;
            }
        }
    }
    for (bool shrank = true; shrank;) {
        shrank = false;
        for (NodeMask m = mb; m; m &= m - 1) {
            const int y = std::countr_zero(m);
            if (test.p_value(x, y, mb & ~bit(y)) >= alpha) {
                mb &= ~bit(y);
                shrank = true;
                break;
            }
        }
    }
    return mb;
}

void add_pair(AllowedPairs& out, int a, int b) {
    out[a] |= bit(b);
    out[b] |= bit(a);
}

}  // namespace

AllowedPairs restrict_gs(const Dataset& data, double alpha) {
    const PartialCorrelationTest test(data);
    const int p = static_cast<int>(data.p());
    std::vector<NodeMask> blanket(static_cast<std::size_t>(p));
    for (int x = 0; x < p; ++x) blanket[x] = grow_shrink_blanket(test, x, p, alpha);

    AllowedPairs out(static_cast<std::size_t>(p), 0);
    for (int x = 0; x < p; ++x) {
        for (NodeMask m = blanket[x]; m; m &= m - 1) {
            const int y = std::countr_zero(m);
            const NodeMask bx = blanket[x] & ~bit(y);
            const NodeMask by = blanket[y] & ~bit(x);
            const NodeMask pool = std::popcount(bx) <= std::popcount(by) ? bx : by;
            const bool dependent = all_subsets(pool, [&](NodeMask s) { return test.p_value(x, y, s) < alpha; });
            if (dependent) add_pair(out, x, y);
        }
    }
    return out;
}

AllowedPairs restrict_mmpc(const Dataset& data, double alpha) {
    const PartialCorrelationTest test(data);
    const int p = static_cast<int>(data.p());
    AllowedPairs out(static_cast<std::size_t>(p), 0);

    for (int t = 0; t < p; ++t) {
        NodeMask cpc = 0;
        NodeMask open = all_pairs(static_cast<std::size_t>(p))[t];
        // Forward: admit the candidate whose worst-case association is strongest.
        while (open) {
            int chosen = -1;
            double chosen_p = std::numeric_limits<double>::infinity();
            for (NodeMask m = open; m; m &= m - 1) {
                const int x = std::countr_zero(m);
                double worst = 0.0;
                all_subsets(cpc, [&](NodeMask s) {
                    worst = std::max(worst, test.p_value(t, x, s));
                    return worst < alpha;
                });
                if (worst >= alpha) {
                    open &= ~bit(x);
                } else if (worst < chosen_p) {
                    chosen_p = worst;
                    chosen = x;
                }
            }
            if (chosen < 0) break;
            cpc |= bit(chosen);
            open &= ~bit(chosen);
        }
        // Backward: drop members made independent by some subset of the others.
        for (NodeMask m = cpc; m; m &= m - 1) {
            const int x = std::countr_zero(m);
            const bool keep = all_subsets(cpc & ~bit(x), [&](NodeMask s) { return test.p_value(t, x, s) < alpha; });
            if (!keep) cpc &= ~bit(x);
        }
        for (NodeMask m = cpc; m; m &= m - 1) add_pair(out, t, std::countr_zero(m));
    }
    return out;
}

std::string to_string(RestrictMethod method) {
    return method == RestrictMethod::gs ? "gs" : "mmpc";
}

Dag hybrid_search(const Dataset& data, double alpha, const HcConfig& cfg, RestrictMethod restrict) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha", "must lie in (0, 1)");
    const AllowedPairs allowed = restrict == RestrictMethod::gs ? restrict_gs(data, alpha) : restrict_mmpc(data, alpha);
    GaussianScorer scorer(data);
    return hill_climb(scorer, data.variables(), cfg, &allowed).dag;
}

}  // namespace bnq
