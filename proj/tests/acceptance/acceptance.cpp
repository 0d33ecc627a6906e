// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bnq/dataset.hpp"
#include "bnq/dates.hpp"
#include "bnq/discrete.hpp"
#include "bnq/forest.hpp"
#include "bnq/gaussian_bn.hpp"
#include "bnq/graph.hpp"
#include "bnq/ingest.hpp"
#include "bnq/quality.hpp"
#include "bnq/search.hpp"
#include "bnq/simstudy.hpp"
#include "bnq/stats.hpp"
#include "oracles.hpp"

using namespace bnq;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Dataset numbered(const Eigen::MatrixXd& m) { return Dataset(VariableSet::numbered(static_cast<std::size_t>(m.cols())), m); }

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

// ---------------------------------------------------------------- 1, 2

const SimStudyReport& simstudy_report() {
    static const SimStudyReport report = [] {
        SimStudyConfig cfg;
        cfg.replicates = 100;
        cfg.boot_samples = 100;
        cfg.hc.restarts = 10;
        cfg.sample_size = 200;
        cfg.seed = 0;
        cfg.hc.seed = 0;
        cfg.jobs = 0;
        return run_simstudy(cfg);
    }();
    return report;
}

Outcome criterion_1() {
    const auto& r = simstudy_report();
    const double hc = r.row("HC", 0.85).exact_fraction();
    const double map = r.row("MAP", 0.85).exact_fraction();
    double worst_discrete = 0.0;
    for (const auto& row : r.rows) {
        if (row.discretization != "none") worst_discrete = std::max(worst_discrete, row.exact_fraction());
    }
    const bool ok = hc >= 0.4 && map >= 0.4 && worst_discrete <= 0.05 && r.failures.empty();
    return {ok, "HC=" + fmt(hc) + " MAP=" + fmt(map) + " at 0.85; max discretized exact=" + fmt(worst_discrete) +
                    "; failures=" + std::to_string(r.failures.size())};
}

Outcome criterion_2() {
    const auto& r = simstudy_report();
    const double hc85 = r.row("HC", 0.85).exact_fraction();
    const double hc100 = r.row("HC", 1.00).exact_fraction();
    double best = -1.0;
    for (const auto& row : r.rows) {
        if (row.method == "MAP") best = std::max(best, row.exact_fraction());
    }
    std::string peaks;
    bool peak_in_range = false;
    for (const auto& row : r.rows) {
        if (row.method != "MAP" || row.exact_fraction() != best) continue;
        peaks += (peaks.empty() ? "" : "/") + fmt(row.threshold, 3);
        if (row.threshold >= 0.75 - 1e-12 && row.threshold <= 0.95 + 1e-12) peak_in_range = true;
    }
    return {hc85 - hc100 >= 0.2 && peak_in_range, "HC 0.85=" + fmt(hc85) + " vs 1.00=" + fmt(hc100) +
                                                      "; MAP peak " + fmt(best) + " at " + peaks};
}

// ---------------------------------------------------------------- 3

Outcome criterion_3() {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto data = numbered(oracle::random_gaussian_data(4, 50, 3000 + s, 0.5));
        const GaussianScorer scorer(data);
        const auto dp = exact_edge_posteriors(scorer, 3);
        const auto brute = oracle::brute_force_posteriors(
            4, 3, [&](int v, const std::vector<int>& pa) { return oracle::gaussian_family_score(data.rows(), v, pa); });
        worst = std::max(worst, (dp - brute).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-9 && oracle::all_dags(4).size() == 543,
            "max |dp - enumeration| over 20 datasets = " + fmt(worst, 3)};
}

// ---------------------------------------------------------------- 4

Outcome criterion_4() {
    const auto dags = oracle::all_dags(3);
    int hits = 0;
    for (int r = 0; r < 100; ++r) {
        const auto data = numbered(oracle::random_gaussian_data(3, 100, 4000 + static_cast<std::uint64_t>(r)));
        HcConfig cfg;
        cfg.restarts = 10;
        cfg.seed = static_cast<std::uint64_t>(r);
        const auto found = hill_climb(data, cfg);
        double best = -INFINITY;
        for (const auto& g : dags) {
            double s = 0.0;
            for (int v = 0; v < 3; ++v) s += oracle::gaussian_family_score(data.rows(), v, oracle::parents_of(g, v));
            best = std::max(best, s);
        }
        hits += std::abs(found.score - best) <= 1e-9 * std::abs(best) ? 1 : 0;
    }
    return {hits >= 90 && dags.size() == 25, std::to_string(hits) + "/100 runs reach the exhaustive optimum"};
}

// ---------------------------------------------------------------- 5

Outcome criterion_5() {
    const auto data = numbered(oracle::random_gaussian_data(4, 120, 5000, 0.6));
    const GaussianScorer scorer(data);
    double worst_identity = 0.0, worst_oracle = 0.0;
    for (const auto& dag : enumerate_dags(4)) {
        double sum = 0.0, oracle_sum = 0.0;
        for (int v = 0; v < 4; ++v) {
            const NodeMask pa = dag.parent_mask(v);
            sum += scorer.family_score(v, pa);
            oracle_sum += oracle::gaussian_family_score(data.rows(), v, dag.parents(v));
            worst_identity = std::max(worst_identity, std::abs(scorer.family_score(v, pa) -
                                                               (scorer.family_loglik(v, pa) - scorer.family_penalty(pa))));
        }
        const double total = bic_g(dag, data);
        worst_identity = std::max({worst_identity, std::abs(total - sum), std::abs(total - scorer.score(dag))});
        worst_oracle = std::max(worst_oracle, std::abs(total - oracle_sum) / std::max(1.0, std::abs(oracle_sum)));
    }

    DiscretizationSpec spec;
    const auto disc = discretize(data, spec);
    const DiscreteScorer dscorer(disc.data);
    double worst_discrete_identity = 0.0, worst_discrete_oracle = 0.0;
    for (const auto& dag : enumerate_dags(4)) {
        double sum = 0.0, oracle_sum = 0.0;
        for (int v = 0; v < 4; ++v) {
            sum += dscorer.family_score(v, dag.parent_mask(v));
            oracle_sum += oracle::discrete_family_score(disc.data.rows(), disc.data.levels(), v, dag.parents(v));
        }
        const double total = bic_discrete(dag, disc.data);
        worst_discrete_identity = std::max({worst_discrete_identity, std::abs(total - sum),
                                            std::abs(total - dscorer.score(dag))});
        worst_discrete_oracle =
            std::max(worst_discrete_oracle, std::abs(total - oracle_sum) / std::max(1.0, std::abs(oracle_sum)));
    }

    std::mt19937_64 rng(5001);
    std::normal_distribution<double> z;
    const int n = 250;
    Eigen::MatrixXd col(n, 1);
    for (int i = 0; i < n; ++i) col(i, 0) = z(rng);
    const double mu = col.col(0).mean();
    const double var = (col.col(0).array() - mu).square().sum() / n;
    const double closed = -n / 2.0 * (std::log(2.0 * M_PI * var) + 1.0) - (2.0 / 2.0) * std::log(static_cast<double>(n));
    const Dataset single(VariableSet{"X"}, col);
    const double closed_err = std::abs(bic_g(Dag(single.variables()), single) - closed);

    const bool ok = worst_identity <= 1e-9 && worst_oracle <= 1e-9 && worst_discrete_identity <= 1e-9 &&
                    worst_discrete_oracle <= 1e-9 && closed_err <= 1e-9;
    return {ok, "decomposition err g=" + fmt(worst_identity, 2) + " d=" + fmt(worst_discrete_identity, 2) +
                    "; vs oracle g=" + fmt(worst_oracle, 2) + " d=" + fmt(worst_discrete_oracle, 2) +
                    "; closed form err=" + fmt(closed_err, 2)};
}

// ---------------------------------------------------------------- 6

GaussianBn random_network(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto vars = VariableSet::numbered(6);
    std::vector<Edge> edges;
    for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j)
            if (u(rng) < 0.5) edges.push_back({i, j});
    const Dag dag(vars, edges);
    std::vector<NodeParameters> nodes(6);
    for (int v = 0; v < 6; ++v) {
        nodes[static_cast<std::size_t>(v)].intercept = 4.0 * u(rng) - 2.0;
        nodes[static_cast<std::size_t>(v)].residual_sd = 0.5 + u(rng);
        for (std::size_t k = 0; k < dag.parents(v).size(); ++k) {
            nodes[static_cast<std::size_t>(v)].coefficients.push_back((u(rng) < 0.5 ? -1 : 1) * (0.3 + 0.9 * u(rng)));
        }
    }
    return GaussianBn(dag, nodes);
}

Outcome criterion_6() {
    const auto bn = random_network(6000);
    const auto data = simulate(bn, 200000, 6001);
    const auto m = implied_moments(bn);
    const Eigen::MatrixXd& x = data.rows();
    const Eigen::VectorXd mu = x.colwise().mean();
    const Eigen::MatrixXd c = x.rowwise() - mu.transpose();
    const Eigen::MatrixXd cov = c.transpose() * c / static_cast<double>(x.rows() - 1);
    double mean_err = 0.0, cov_err = 0.0;
    for (int i = 0; i < 6; ++i) {
        const double sd = std::sqrt(m.covariance(i, i));
        mean_err = std::max(mean_err, std::abs(mu(i) - m.mean(i)) / sd);
        for (int j = 0; j < 6; ++j) {
            cov_err = std::max(cov_err, std::abs(cov(i, j) - m.covariance(i, j)) /
                                            std::sqrt(m.covariance(i, i) * m.covariance(j, j)));
        }
    }
    return {mean_err <= 0.01 && cov_err <= 0.02, std::to_string(bn.dag().edge_count()) +
                                                     " edges; max standardized mean err=" + fmt(mean_err, 3) +
                                                     ", max scaled cov err=" + fmt(cov_err, 3)};
}

// ---------------------------------------------------------------- 7

Outcome criterion_7() {
    // y = 2x exactly.
    Eigen::MatrixXd x(4, 1);
    x << 1, 2, 3, 4;
    Eigen::VectorXd y(4);
    y << 2, 4, 6, 8;
    const auto perfect = ols(x, y);
    bool ok = std::abs(perfect.coefficients(0)) <= 1e-12 && std::abs(perfect.coefficients(1) - 2.0) <= 1e-12 &&
              perfect.r2 == 1.0 && perfect.adjusted_r2 == 1.0 && perfect.p_values(1) == 0.0;

    // y = (1, 3, 2, 4): slope 0.8, intercept 0.5, R² 0.64, adjusted 0.46,
    // slope p = 1 - t / sqrt(t² + 2) = 0.2, intercept p = 1 - sqrt(5/59).
    y << 1, 3, 2, 4;
    const auto hand = ols(x, y);
    const double err = std::max({std::abs(hand.coefficients(0) - 0.5), std::abs(hand.coefficients(1) - 0.8),
                                 std::abs(hand.r2 - 0.64), std::abs(hand.adjusted_r2 - 0.46),
                                 std::abs(hand.p_values(1) - 0.2), std::abs(hand.p_values(0) - (1.0 - std::sqrt(5.0 / 59.0))),
                                 std::abs(hand.std_errors(1) - std::sqrt(0.18)), std::abs(hand.rss - 1.8)});
    ok = ok && err <= 1e-12;

    std::mt19937_64 rng(7000);
    std::normal_distribution<double> z;
    std::vector<double> ps;
    for (int rep = 0; rep < 1000; ++rep) {
        Eigen::MatrixXd xs(30, 1);
        Eigen::VectorXd ys(30);
        for (int i = 0; i < 30; ++i) xs(i, 0) = z(rng), ys(i) = z(rng);
        ps.push_back(ols(xs, ys).p_values(1));
    }
    const double ks = ks_distance_uniform(ps);
    ok = ok && ks < 0.05;
    return {ok, "perfect fit R2=" + fmt(perfect.r2) + "; hand dataset max err=" + fmt(err, 2) +
                    "; null KS=" + fmt(ks, 3)};
}

// ---------------------------------------------------------------- 8

std::vector<ReleaseAggregate> synthetic_releases(std::mt19937_64& rng, bool usage_driven) {
    std::normal_distribution<double> z;
    std::uniform_int_distribution<int> duration(1, 90);
    std::vector<ReleaseAggregate> out;
    for (int i = 0; i < 200; ++i) {
        ReleaseAggregate r;
        r.release = "r" + std::to_string(i);
        r.release_date = 17000 + 5 * i + duration(rng) % 5;
        r.release_duration = duration(rng);
        const double users = std::exp(5.0 + z(rng));
        r.new_users = std::max<long long>(1, std::llround(users));
        const double log_intensity = 3.0 + 0.5 * z(rng);
        r.usage_intensity = std::exp(log_intensity);
        r.usage_frequency = std::exp(0.5 * log_intensity + 0.3 * z(rng));
        if (usage_driven) {
            r.exceptions = std::llround(std::exp(-4.0 + 0.9 * std::log(users) + 0.8 * log_intensity + 0.3 * z(rng)));
        } else {
            const double q = std::exp(-2.0 + 0.5 * z(rng));
            r.exceptions = std::llround(q * static_cast<double>(r.new_users));
        }
        out.push_back(r);
    }
    return out;
}

Outcome criterion_8() {
    HcConfig hc;
    int clean = 0, found = 0;
    std::mt19937_64 rng(8000);
    for (int run = 0; run < 50; ++run) {
        hc.seed = static_cast<std::uint64_t>(run);
        const auto normalized = quality_dataset(synthetic_releases(rng, false));
        const auto net = averaged_network(bootstrap_average(normalized, Learner::hill_climb, 100, hc, 100 + run), 0.85);
        const auto& v = net.dag.variables();
        const int quality = v.index_of("Quality");
        bool linked = false;
        for (const char* usage : {"New.Users", "Usage.Intensity", "Usage.Frequency"}) {
            linked = linked || net.dag.adjacent(quality, v.index_of(usage));
        }
        clean += linked ? 0 : 1;

        const auto raw = log_transform(synthetic_releases(rng, true));
        const auto net2 = averaged_network(bootstrap_average(raw, Learner::hill_climb, 100, hc, 200 + run), 0.85);
        const auto& w = net2.dag.variables();
        found += net2.dag.has_edge(w.index_of("New.Users"), w.index_of("Exceptions")) ? 1 : 0;
    }
    return {clean >= 45 && found >= 45, "normalized: no Quality-usage edge in " + std::to_string(clean) +
                                            "/50; unnormalized: New.Users->Exceptions in " + std::to_string(found) + "/50"};
}

// ---------------------------------------------------------------- 9

Outcome criterion_9() {
    std::mt19937_64 rng(9000);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> k(1.0, 1.6);
    int covered = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const double exponent = k(rng);
        Eigen::MatrixXd m(40, 2);
        for (int i = 0; i < 40; ++i) {
            const double users = std::exp(4.0 + 1.2 * z(rng));
            m(i, 0) = 0.05 * std::pow(users, exponent) * std::exp(0.5 * z(rng));
            m(i, 1) = users;
        }
        const auto fit = fit_power_law(Dataset({"Exceptions", "New.Users"}, m), "Exceptions", "New.Users");
        covered += fit.ci_low <= exponent && exponent <= fit.ci_high ? 1 : 0;
    }
    const double rate = covered / 1000.0;
    return {rate >= 0.93 && rate <= 0.97, "coverage " + fmt(rate) + " over 1000 replicates"};
}

// ---------------------------------------------------------------- 10

Outcome criterion_10() {
    std::mt19937_64 rng(10000);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.0, 1.0);

    Eigen::MatrixXd x(500, 1);
    Eigen::VectorXd y(500);
    for (int i = 0; i < 500; ++i) x(i, 0) = u(rng), y(i) = x(i, 0);
    ForestConfig cfg;
    cfg.ntree = 300;
    cfg.seed = 1;
    const double oob = fit_forest(x, y, {"x"}, "y", cfg).oob_r2();

    int ordered = 0, reduced = 0;
    for (int run = 0; run < 50; ++run) {
        const int n = 200;
        Eigen::MatrixXd m(n, 7);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 6; ++j) m(i, j) = z(rng);
            m(i, 6) = 3.0 * m(i, 0) + 1.5 * m(i, 1) + 0.5 * z(rng);
        }
        const Dataset d({"s1", "s2", "n1", "n2", "n3", "n4", "y"}, m);
        ForestConfig fc;
        fc.ntree = 150;
        fc.mtry = 2;
        fc.seed = static_cast<std::uint64_t>(run);
        const auto model = fit_forest(d, "y", fc);
        const auto imp = permutation_importance(model, d, 2, static_cast<std::uint64_t>(run));
        ordered += imp.rank[0] == 1 && imp.rank[1] == 2 ? 1 : 0;

        Eigen::MatrixXd r(n, 4);
        for (int i = 0; i < n; ++i) {
            const double log_downloads = 8.0 + 1.5 * z(rng);
            r(i, 0) = std::exp(log_downloads);
            r(i, 1) = 100.0 * u(rng);
            r(i, 2) = z(rng);
            r(i, 3) = 0.8 * log_downloads + 0.01 * r(i, 1) + 0.6 * z(rng);
        }
        const Dataset release({"Downloads", "Age", "Noise", "Quality"}, r);
        ForestConfig ac;
        ac.ntree = 100;
        ac.mtry = 2;
        ac.seed = static_cast<std::uint64_t>(run);
        CvSpec cv;
        cv.repeats = 2;
        cv.folds = 2;
        cv.seed = static_cast<std::uint64_t>(run);
        const auto ab = ablate_predictor(release, "Quality", "Downloads", ac, cv);
        reduced += ab.without_mean < ab.with_mean ? 1 : 0;
    }
    return {oob >= 0.9 && ordered >= 48 && reduced >= 48,
            "OOB R2 on y=x " + fmt(oob) + "; rank order correct " + std::to_string(ordered) +
                "/50; ablation lowers CV R2 " + std::to_string(reduced) + "/50"};
}

// ---------------------------------------------------------------- 11

Outcome criterion_11() {
    std::mt19937_64 rng(11000);
    int post_ok = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<UsageRecord> rs;
        const int days = 1 + static_cast<int>(rng() % 30);
        for (int d = 0; d < days; ++d) {
            UsageRecord r;
            r.date = parse_date("2018-01-01") + std::chrono::days(d);
            r.release = "1.0";
            r.new_users = static_cast<long long>(rng() % 20);
            r.users = static_cast<long long>(rng() % 60);
            r.time_on_site = static_cast<double>(rng() % 1000);
            r.exceptions = static_cast<long long>(rng() % 5);
            rs.push_back(r);
        }
        const auto fixed = correct_new_users(rs);
        bool good = fixed.size() == rs.size();
        long long running = 0;
        for (std::size_t i = 0; good && i < rs.size(); ++i) {
            running += fixed[i].new_users;
            auto other = fixed[i];
            other.new_users = rs[i].new_users;
            good = running >= fixed[i].users && fixed[i].new_users >= rs[i].new_users && other == rs[i];
        }
        post_ok += good ? 1 : 0;
    }

    std::ifstream in(fs::path(BNQ_FIXTURES_DIR) / "series" / "alpha.csv");
    const auto series = read_daily_series_csv(in, "alpha");
    const auto tl = timeline(series);
    const std::vector<double> issues{1, 0, 2, 1, 0, 0, 3, 1, 0, 1, 2, 0, 1, 1};
    const std::vector<double> downloads{100, 120, 0, 110, 100, 90, 130, 100, 100, 80, 100, 100, 140, 100};
    bool hand = tl.points.size() == 14 && tl.trend_available;
    for (std::size_t i = 0; hand && i < 14; ++i) {
        const auto& p = tl.points[i];
        hand = p.new_issues == static_cast<long long>(issues[i]) && *p.downloads == static_cast<long long>(downloads[i]);
        if (i == 2) {
            hand = hand && p.quality.infinite && p.excluded;
        } else {
            hand = hand && !p.quality.infinite && p.quality.value == issues[i] / downloads[i] && !p.excluded && p.trend;
        }
    }

    int cumulative_ok = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const Day start = parse_date("2018-01-01") + std::chrono::days(static_cast<int>(rng() % 30));
        const Day end = start + std::chrono::days(static_cast<int>(rng() % 40));
        std::vector<Day> dates;
        const int count = static_cast<int>(rng() % 50);
        for (int k = 0; k < count; ++k) dates.push_back(parse_date("2017-12-15") + std::chrono::days(static_cast<int>(rng() % 100)));
        DownloadSeries dl;
        dl.start = start;
        const auto s = build_daily_series(dl, dates, start, end);
        bool good = s.issues_before_start == std::count_if(dates.begin(), dates.end(), [&](Day c) { return c < start; });
        for (std::size_t i = 0; good && i < s.days(); ++i) {
            const Day day = start + std::chrono::days(static_cast<long long>(i));
            good = s.cumulative_issues[i] == std::count_if(dates.begin(), dates.end(), [&](Day c) { return c <= day; });
        }
        cumulative_ok += good ? 1 : 0;
    }
    return {post_ok == 1000 && hand && cumulative_ok == 500,
            "correct_new_users " + std::to_string(post_ok) + "/1000; fixture timeline " + (hand ? "exact" : "MISMATCH") +
                "; cumulative oracle " + std::to_string(cumulative_ok) + "/500"};
}

// ---------------------------------------------------------------- 12

std::string tree_digest(const fs::path& dir) {
    std::vector<std::string> parts;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream f(e.path(), std::ios::binary);
        std::ostringstream s;
        s << f.rdbuf();
        parts.push_back(fs::relative(e.path(), dir).string() + ":" + sha256_hex(s.str()));
    }
    std::sort(parts.begin(), parts.end());
    std::string all;
    for (const auto& p : parts) all += p + "\n";
    return sha256_hex(all);
}

DailySeries screen_fixture(std::mt19937_64& rng, bool proportional) {
    std::uniform_int_distribution<long long> dl(1000, 6000);
    DailySeries s;
    s.package = "fixture";
    s.start = parse_date("2018-01-01");
    long long total = 0;
    for (int d = 0; d < 60; ++d) {
        const long long downloads = dl(rng);
        std::poisson_distribution<long long> issues(proportional ? downloads / 500.0 : 6.0);
        total += issues(rng);
        s.downloads.emplace_back(downloads);
        s.cumulative_issues.push_back(total);
    }
    return s;
}

Outcome criterion_12() {
    const fs::path http = fs::path(BNQ_FIXTURES_DIR) / "http";
    const std::string npm = "http://npm.fixture", gh = "http://github.fixture";
    const Day start = parse_date("2018-01-01"), end = parse_date("2018-01-31");
    const fs::path cache_dir = fs::temp_directory_path() / ("bnq_acceptance_cache_" + std::to_string(::getpid()));
    fs::remove_all(cache_dir);

    auto produce = [&](Transport* transport, int window) {
        ResponseCache cache(cache_dir);
        Fetcher fetcher(&cache, transport);
        const auto downloads = fetch_downloads(fetcher, npm, "left-pad", start, end, window);
        const auto issues = fetch_issues(fetcher, gh, "acme/left-pad");
        return std::make_pair(daily_series_csv(build_daily_series(downloads, issues, start, end)), fetcher.network_calls());
    };

    auto cold_transport = FixtureTransport::from_directory(http);
    const auto cold = produce(cold_transport.get(), kMaxDownloadWindowDays);
    const auto digest_before = tree_digest(cache_dir);
    auto warm_transport = FixtureTransport::from_directory(http);
    const auto warm = produce(warm_transport.get(), kMaxDownloadWindowDays);
    const auto offline = produce(nullptr, kMaxDownloadWindowDays);
    const bool replay = cold.second > 0 && warm.first == cold.first && offline.first == cold.first && warm.second == 0 &&
                        warm_transport->calls() == 0 && tree_digest(cache_dir) == digest_before;
    fs::remove_all(cache_dir);

    auto whole_t = FixtureTransport::from_directory(http);
    auto chunk_t = FixtureTransport::from_directory(http);
    ResponseCache c1(cache_dir / "a"), c2(cache_dir / "b");
    Fetcher f1(&c1, whole_t.get()), f2(&c2, chunk_t.get());
    const auto whole = fetch_downloads(f1, npm, "left-pad", start, end);
    const auto chunked = fetch_downloads(f2, npm, "left-pad", start, end, 16);
    const bool chunks = whole.downloads == chunked.downloads && whole.gaps == chunked.gaps && chunk_t->calls() == 2 &&
                        whole.downloads.size() == 31;
    fs::remove_all(cache_dir);

    std::mt19937_64 rng(12000);
    int flagged = 0, quiet = 0;
    for (int k = 0; k < 50; ++k) {
        flagged += screen_significance(screen_fixture(rng, true), false).p_value < 0.05 ? 1 : 0;
        quiet += screen_significance(screen_fixture(rng, false), false).p_value > 0.05 ? 1 : 0;
    }
    return {replay && chunks && flagged >= 45 && quiet >= 45,
            std::string("warm replay ") + (replay ? "identical, 0 network calls" : "DIFFERS") + "; chunked " +
                (chunks ? "equal" : "DIFFERS") + "; screen flags " + std::to_string(flagged) +
                "/50 proportional, clears " + std::to_string(quiet) + "/50 independent"};
}

}  // namespace

int main() {
    const std::vector<std::function<Outcome()>> criteria{criterion_1, criterion_2, criterion_3,  criterion_4,
                                                         criterion_5, criterion_6, criterion_7,  criterion_8,
                                                         criterion_9, criterion_10, criterion_11, criterion_12};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += o.pass ? 0 : 1;
        std::printf("criterion %2zu: %s  %s  [%.1fs]\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
