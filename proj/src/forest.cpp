#include "bnq/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "bnq/errors.hpp"
#include "bnq/parallel.hpp"
#include "bnq/random.hpp"
#include "bnq/stats.hpp"

namespace bnq {

void ForestConfig::validate(std::size_t predictors) const {
    if (ntree < 1) throw ConfigError("ntree", "must be at least 1");
    if (min_leaf < 1) throw ConfigError("min_leaf", "must be at least 1");
    if (predictors < 1) throw ConfigError("predictors", "at least one predictor is required");
    if (mtry < 0 || static_cast<std::size_t>(mtry) > predictors) {
        throw ConfigError("mtry", "must lie in [1, " + std::to_string(predictors) + "]");
    }
}

int ForestConfig::effective_mtry(std::size_t predictors) const {
    if (mtry > 0) return mtry;
    return std::max(1, static_cast<int>(predictors) / 3);
}

double RegressionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    int id = 0;
    while (nodes_[id].feature >= 0) {
        const auto& node = nodes_[id];
        id = x(node.feature) <= node.threshold ? node.left : node.right;
    }
    return nodes_[id].value;
}

double ForestModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict(x);
    return sum / static_cast<double>(trees_.size());
}

Eigen::VectorXd ForestModel::predict_rows(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = predict(x.row(i));
    return out;
}

namespace {

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int mtry, int min_leaf, Rng& rng)
        : x_(x), y_(y), mtry_(mtry), min_leaf_(min_leaf), rng_(rng), impurity_(Eigen::VectorXd::Zero(x.cols())) {}

    int build(std::vector<int> rows) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        const auto m = static_cast<double>(rows.size());
        double sum = 0.0;
        for (int r : rows) sum += y_(r);
        nodes_[id].value = sum / m;

        const bool constant = std::all_of(rows.begin(), rows.end(), [&](int r) { return y_(r) == y_(rows[0]); });
        if (constant || rows.size() < 2 * static_cast<std::size_t>(min_leaf_)) return id;

        const auto split = best_split(rows, sum);
        if (split.feature < 0) return id;

        std::vector<int> left, right;
        for (int r : rows) (x_(r, split.feature) <= split.threshold ? left : right).push_back(r);
        impurity_(split.feature) += split.gain;
        rows.clear();
        rows.shrink_to_fit();
        const int l = build(std::move(left));
        const int rgt = build(std::move(right));
        nodes_[id].feature = split.feature;
        nodes_[id].threshold = split.threshold;
        nodes_[id].left = l;
        nodes_[id].right = rgt;
        return id;
    }

    std::vector<TreeNode> take_nodes() { return std::move(nodes_); }
    const Eigen::VectorXd& impurity() const { return impurity_; }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
    };

    Split best_split(const std::vector<int>& rows, double total) {
        const int p = static_cast<int>(x_.cols());
        std::vector<int> features(static_cast<std::size_t>(p));
        std::iota(features.begin(), features.end(), 0);
        for (int i = 0; i < mtry_; ++i) {
            std::uniform_int_distribution<int> pick(i, p - 1);
            std::swap(features[i], features[pick(rng_)]);
        }
        const auto m = rows.size();
        const double parent = total * total / static_cast<double>(m);
        Split best;
        std::vector<int> order(rows);
        for (int k = 0; k < mtry_; ++k) {
            const int f = features[k];
            std::sort(order.begin(), order.end(), [&](int a, int b) { return x_(a, f) < x_(b, f); });
            double left_sum = 0.0;
            for (std::size_t i = 0; i + 1 < m; ++i) {
                left_sum += y_(order[i]);
                const std::size_t nl = i + 1, nr = m - nl;
                if (nl < static_cast<std::size_t>(min_leaf_)) continue;
                if (nr < static_cast<std::size_t>(min_leaf_)) break;
                const double a = x_(order[i], f), b = x_(order[i + 1], f);
                if (!(a < b)) continue;
                const double right_sum = total - left_sum;
                const double gain = left_sum * left_sum / static_cast<double>(nl) +
                                    right_sum * right_sum / static_cast<double>(nr) - parent;
                if (gain > best.gain && gain > 1e-12 * (1.0 + std::fabs(parent))) {
                    double mid = 0.5 * (a + b);
                    if (!(mid < b)) mid = a;
                    best = {f, mid, gain};
                }
            }
        }
        return best;
    }

    const Eigen::MatrixXd& x_;
    const Eigen::VectorXd& y_;
    int mtry_;
    int min_leaf_;
    Rng& rng_;
    std::vector<TreeNode> nodes_;
    Eigen::VectorXd impurity_;
};

void ensure_finite(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (!x.allFinite() || !y.allFinite()) throw NumericalRange("forest inputs must be finite");
}

double r2_against(const Eigen::VectorXd& y, const Eigen::VectorXd& pred, double baseline) {
    const double ssr = (y - pred).squaredNorm();
    const double sst = (y.array() - baseline).square().sum();
    if (sst == 0.0) return ssr == 0.0 ? 1.0 : 0.0;
    return 1.0 - ssr / sst;
}

}  // namespace

ForestModel fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> predictors,
                       std::string response, const ForestConfig& cfg) {
    const auto p = static_cast<std::size_t>(x.cols());
    cfg.validate(p);
    if (predictors.size() != p || y.size() != x.rows()) throw VariableMismatch("forest input dimensions disagree");
    const auto n = static_cast<std::size_t>(x.rows());
    if (n < 2 * static_cast<std::size_t>(cfg.min_leaf)) {
        throw InsufficientRows("forest needs at least 2 * min_leaf rows");
    }
    ensure_finite(x, y);
    const int mtry = cfg.effective_mtry(p);

    ForestModel model;
    model.predictors_ = std::move(predictors);
    model.response_ = std::move(response);
    model.inbag_.assign(static_cast<std::size_t>(cfg.ntree), std::vector<int>(n, 0));
    std::vector<std::vector<TreeNode>> nodes(static_cast<std::size_t>(cfg.ntree));
    std::vector<Eigen::VectorXd> impurity(static_cast<std::size_t>(cfg.ntree));

    parallel_for(nodes.size(), cfg.jobs, [&](std::size_t t) {
        Rng rng = make_rng(cfg.seed, 0, t);
        std::uniform_int_distribution<int> draw(0, static_cast<int>(n) - 1);
        std::vector<int> rows(n);
        for (auto& r : rows) {
            r = draw(rng);
            ++model.inbag_[t][static_cast<std::size_t>(r)];
        }
        TreeBuilder builder(x, y, mtry, cfg.min_leaf, rng);
        builder.build(std::move(rows));
        impurity[t] = builder.impurity();
        nodes[t] = builder.take_nodes();
    });

    model.impurity_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    model.trees_.reserve(nodes.size());
    for (std::size_t t = 0; t < nodes.size(); ++t) {
        model.trees_.emplace_back(std::move(nodes[t]));
        model.impurity_ += impurity[t];
    }
    model.impurity_ /= static_cast<double>(cfg.ntree);

    Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXi count = Eigen::VectorXi::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < model.trees_.size(); ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            if (model.inbag_[t][i]) continue;
            sum(static_cast<Eigen::Index>(i)) += model.trees_[t].predict(x.row(static_cast<Eigen::Index>(i)));
            ++count(static_cast<Eigen::Index>(i));
        }
    }
    model.oob_ = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> ys, preds;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        if (count(i) == 0) continue;
        model.oob_(i) = sum(i) / count(i);
        ys.push_back(y(i));
        preds.push_back(model.oob_(i));
    }
    if (!ys.empty()) {
        const Eigen::Map<Eigen::VectorXd> yv(ys.data(), static_cast<Eigen::Index>(ys.size()));
        const Eigen::Map<Eigen::VectorXd> pv(preds.data(), static_cast<Eigen::Index>(preds.size()));
        model.oob_mse_ = (yv - pv).squaredNorm() / static_cast<double>(ys.size());
        model.oob_r2_ = r2_against(yv, pv, yv.mean());
    } else {
        model.oob_mse_ = std::numeric_limits<double>::quiet_NaN();
        model.oob_r2_ = std::numeric_limits<double>::quiet_NaN();
    }
    return model;
}

namespace {

std::pair<Eigen::MatrixXd, Eigen::VectorXd> design(const Dataset& data, const std::vector<std::string>& predictors,
                                                   const std::string& response) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(data.n()), static_cast<Eigen::Index>(predictors.size()));
    for (std::size_t j = 0; j < predictors.size(); ++j) x.col(static_cast<Eigen::Index>(j)) = data.column(predictors[j]);
    return {std::move(x), data.column(response)};
}

std::vector<std::string> predictors_except(const Dataset& data, const std::string& response) {
    if (!data.variables().contains(response)) throw VariableMismatch("response column '" + response + "' not found");
    std::vector<std::string> out;
    for (const auto& name : data.variables().names()) {
        if (name != response) out.push_back(name);
    }
    return out;
}

}  // namespace

ForestModel fit_forest(const Dataset& data, const std::string& response, const ForestConfig& cfg) {
    auto predictors = predictors_except(data, response);
    auto [x, y] = design(data, predictors, response);
    return fit_forest(x, y, std::move(predictors), response, cfg);
}

ImportanceReport permutation_importance(const ForestModel& model, const Dataset& data, int repeats, std::uint64_t seed) {
    if (repeats < 1) throw ConfigError("repeats", "must be at least 1");
    auto [x, y] = design(data, model.predictors(), model.response());
    const auto n = static_cast<std::size_t>(x.rows());
    if (model.trees().empty() || model.inbag(0).size() != n) {
        throw VariableMismatch("importance data must be the training data");
    }
    auto oob_mse = [&](const Eigen::MatrixXd& xs) {
        double sse = 0.0;
        std::size_t rows = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            int count = 0;
            for (std::size_t t = 0; t < model.trees().size(); ++t) {
                if (model.inbag(t)[i]) continue;
                sum += model.trees()[t].predict(xs.row(static_cast<Eigen::Index>(i)));
                ++count;
            }
            if (count == 0) continue;
            const double e = y(static_cast<Eigen::Index>(i)) - sum / count;
            sse += e * e;
            ++rows;
        }
        return rows ? sse / static_cast<double>(rows) : 0.0;
    };
    const double base = oob_mse(x);
    const auto p = model.predictors().size();
    ImportanceReport report;
    report.predictors = model.predictors();
    report.importance.assign(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        for (int r = 0; r < repeats; ++r) {
            Rng rng = make_rng(seed, j, static_cast<std::uint64_t>(r));
            std::vector<int> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            Eigen::MatrixXd xp = x;
            for (std::size_t i = 0; i < n; ++i) {
                xp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    x(perm[i], static_cast<Eigen::Index>(j));
            }
            report.importance[j] += oob_mse(xp) - base;
        }
        report.importance[j] /= repeats;
    }
    report.impurity.assign(model.impurity_importance().data(),
                           model.impurity_importance().data() + model.impurity_importance().size());
    std::vector<int> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return report.importance[a] > report.importance[b]; });
    report.rank.assign(p, 0);
    for (std::size_t k = 0; k < p; ++k) report.rank[order[k]] = static_cast<int>(k) + 1;
    return report;
}

std::vector<int> cv_folds(std::size_t n, int k, std::uint64_t seed, int repeat) {
    if (k < 2) throw ConfigError("folds", "must be at least 2");
    if (n < static_cast<std::size_t>(k)) throw InsufficientRows("fewer rows than folds");
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng = make_rng(seed, 0, static_cast<std::uint64_t>(repeat));
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> label(n);
    for (std::size_t i = 0; i < n; ++i) label[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    return label;
}

std::vector<double> cross_validated_r2(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestConfig& cfg,
                                       const CvSpec& cv) {
    if (cv.repeats < 1) throw ConfigError("repeats", "must be at least 1");
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<std::string> names(static_cast<std::size_t>(x.cols()));
    for (std::size_t j = 0; j < names.size(); ++j) names[j] = "x" + std::to_string(j);
    std::vector<double> out;
    for (int rep = 0; rep < cv.repeats; ++rep) {
        const auto label = cv_folds(n, cv.folds, cv.seed, rep);
        for (int f = 0; f < cv.folds; ++f) {
            std::vector<Eigen::Index> train, test;
            for (std::size_t i = 0; i < n; ++i) (label[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
            ForestConfig local = cfg;
            local.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep) + 1, static_cast<std::uint64_t>(f));
            const Eigen::MatrixXd xtr = x(train, Eigen::all);
            const Eigen::VectorXd ytr = y(train);
            const auto model = fit_forest(xtr, ytr, names, "y", local);
            const Eigen::VectorXd yte = y(test);
            const Eigen::VectorXd pred = model.predict_rows(x(test, Eigen::all));
            const double baseline = cv.baseline == R2Baseline::heldout_mean ? yte.mean() : ytr.mean();
            out.push_back(r2_against(yte, pred, baseline));
        }
    }
    return out;
}

std::vector<std::pair<int, int>> default_grid(std::size_t predictors) {
    std::vector<std::pair<int, int>> grid;
    for (int ntree = 100; ntree <= 1000; ntree += 100) {
        for (int mtry = 1; mtry <= static_cast<int>(predictors); ++mtry) grid.emplace_back(ntree, mtry);
    }
    return grid;
}

TuneResult tune_forest(const Dataset& data, const std::string& response, const std::vector<std::pair<int, int>>& grid,
                       const CvSpec& cv, int min_leaf, int jobs) {
    if (grid.empty()) throw ConfigError("grid", "must not be empty");
    const auto predictors = predictors_except(data, response);
    const auto [x, y] = design(data, predictors, response);
    TuneResult result;
    for (const auto& [ntree, mtry] : grid) {
        ForestConfig cfg{ntree, mtry, min_leaf, cv.seed, jobs};
        if (mtry < 1) throw ConfigError("mtry", "grid values must be at least 1");
        cfg.validate(predictors.size());
        const auto r2 = cross_validated_r2(x, y, cfg, cv);
        result.cells.push_back({ntree, mtry, mean(r2), sample_sd(r2)});
    }
    for (std::size_t i = 1; i < result.cells.size(); ++i) {
        if (result.cells[i].mean_r2 > result.cells[result.best].mean_r2) result.best = i;
    }
    return result;
}

AblationResult ablate_predictor(const Dataset& data, const std::string& response, const std::string& drop,
                                const ForestConfig& cfg, const CvSpec& cv) {
    const auto predictors = predictors_except(data, response);
    if (std::find(predictors.begin(), predictors.end(), drop) == predictors.end()) {
        throw VariableMismatch("'" + drop + "' is not a predictor");
    }
    std::vector<std::string> reduced;
    for (const auto& p : predictors) {
        if (p != drop) reduced.push_back(p);
    }
    if (reduced.empty()) throw ConfigError("drop", "cannot drop the only predictor");
    const auto [x, y] = design(data, predictors, response);
    const auto [xr, yr] = design(data, reduced, response);
    ForestConfig reduced_cfg = cfg;
    reduced_cfg.mtry = std::min(cfg.effective_mtry(predictors.size()), static_cast<int>(reduced.size()));
    const auto with = cross_validated_r2(x, y, cfg, cv);
    const auto without = cross_validated_r2(xr, yr, reduced_cfg, cv);
    return {mean(with), sample_sd(with), mean(without), sample_sd(without)};
}

PowerLawFit fit_power_law(const Dataset& data, const std::string& response, const std::string& driver,
                          const std::vector<std::string>& controls) {
    const auto n = static_cast<Eigen::Index>(data.n());
    const Eigen::VectorXd y = data.column(response);
    const Eigen::VectorXd d = data.column(driver);
    if ((y.array() <= 0.0).any()) throw NonPositiveValue("'" + response + "' has non-positive values");
    if ((d.array() <= 0.0).any()) throw NonPositiveValue("'" + driver + "' has non-positive values");
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(controls.size()) + 1);
    x.col(0) = d.array().log().matrix();
    for (std::size_t j = 0; j < controls.size(); ++j) x.col(static_cast<Eigen::Index>(j) + 1) = data.column(controls[j]);
    const auto fit = ols(x, y.array().log().matrix());
    PowerLawFit out;
    out.exponent = fit.coefficients(1);
    out.std_error = fit.std_errors(1);
    out.p_value = fit.p_values(1);
    out.n = data.n();
    const double q = fit.df_residual > 0 ? student_t_quantile(0.975, fit.df_residual) : 0.0;
    out.ci_low = out.exponent - q * out.std_error;
    out.ci_high = out.exponent + q * out.std_error;
    return out;
}

std::string tune_result_csv(const TuneResult& result) {
    std::ostringstream out;
    out << "ntree,mtry,mean_r2,sd_r2,best\n";
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        const auto& c = result.cells[i];
        out << c.ntree << ',' << c.mtry << ',' << format_double(c.mean_r2) << ',' << format_double(c.sd_r2) << ','
            << (i == result.best ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string importance_csv(const ImportanceReport& report) {
    std::ostringstream out;
    out << "predictor,importance,impurity,rank\n";
    for (std::size_t j = 0; j < report.predictors.size(); ++j) {
        out << report.predictors[j] << ',' << format_double(report.importance[j]) << ','
            << format_double(report.impurity[j]) << ',' << report.rank[j] << '\n';
    }
    return out.str();
}

}  // namespace bnq
