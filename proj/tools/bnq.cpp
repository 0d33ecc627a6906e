#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "bnq/dataset.hpp"
#include "bnq/discrete.hpp"
#include "bnq/errors.hpp"
#include "bnq/forest.hpp"
#include "bnq/gaussian_bn.hpp"
#include "bnq/ingest.hpp"
#include "bnq/parallel.hpp"
#include "bnq/quality.hpp"
#include "bnq/search.hpp"
#include "bnq/simstudy.hpp"

#ifndef BNQ_VERSION
#define BNQ_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kError = 1, kValidation = 2, kPartial = 3 };

/// Values from the YAML config file for one subcommand. Keys may sit at the
/// top level or under a section named after the subcommand.
class FileConfig {
public:
    FileConfig() = default;
    FileConfig(const std::string& path, const std::string& section) {
        if (path.empty()) return;
        YAML::Node root;
        try {
            root = YAML::LoadFile(path);
        } catch (const YAML::Exception& e) {
            throw bnq::ConfigError("config", "cannot read '" + path + "': " + e.what());
        }
        if (!root.IsMap() && !root.IsNull()) throw bnq::ConfigError("config", "top level must be a mapping");
        for (const auto& kv : root) {
            const auto key = kv.first.as<std::string>();
            if (key == section && kv.second.IsMap()) {
                for (const auto& inner : kv.second) values_[inner.first.as<std::string>()] = {inner.second, section + "." + inner.first.as<std::string>()};
            } else {
                values_.emplace(key, Entry{kv.second, key});
            }
        }
    }

    template <class T>
    void apply(const std::string& key, T& target) {
        const auto it = values_.find(key);
        if (it == values_.end()) return;
        used_.push_back(key);
        try {
            target = it->second.node.template as<T>();
        } catch (const YAML::Exception&) {
            throw bnq::ConfigError(it->second.path, "has the wrong type");
        }
    }

    /// Rejects keys that no option consumed.
    void check_unused(const std::vector<std::string>& ignorable) const {
        for (const auto& [key, entry] : values_) {
            if (std::find(used_.begin(), used_.end(), key) != used_.end()) continue;
            if (std::find(ignorable.begin(), ignorable.end(), key) != ignorable.end()) continue;
            throw bnq::ConfigError(entry.path, "unknown configuration key");
        }
    }

private:
    struct Entry {
        YAML::Node node;
        std::string path;
    };
    std::map<std::string, Entry> values_;
    std::vector<std::string> used_;
};

/// Flag value if given, else file value if present, else the default in `target`.
template <class T>
void resolve(FileConfig& file, const std::string& key, const std::optional<T>& flag, T& target) {
    file.apply(key, target);
    if (flag) target = *flag;
}

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> out;
};

struct Run {
    std::string command;
    std::uint64_t seed = 0;
    int jobs = 1;
    fs::path out = "out";
    json config = json::object();
    json inputs = json::array();
    json outputs = json::array();
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    void input(const fs::path& p) { inputs.push_back({{"path", p.string()}, {"sha256", bnq::sha256_file(p)}}); }

    fs::path write(const std::string& name, const std::string& content) {
        const fs::path p = out / name;
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        if (!f) throw bnq::Error("cannot write '" + p.string() + "'");
        f << content;
        outputs.push_back(p.string());
        return p;
    }

    void manifest(int exit_code) const {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        const json m{{"command", command},   {"config", config},   {"seed", seed},
                     {"version", BNQ_VERSION}, {"inputs", inputs},   {"outputs", outputs},
                     {"wall_time_seconds", wall}, {"exit_code", exit_code}};
        std::ofstream f(out / "manifest.json", std::ios::trunc);
        f << m.dump(2) << '\n';
    }
};

Run start_run(const std::string& command, FileConfig& file, const Common& common) {
    Run run;
    run.command = command;
    resolve(file, "seed", common.seed, run.seed);
    resolve(file, "jobs", common.jobs, run.jobs);
    std::string out = "out";
    resolve(file, "out", common.out, out);
    if (run.jobs < 0) throw bnq::ConfigError("jobs", "must be non-negative");
    bnq::set_default_jobs(run.jobs);
    run.out = out;
    fs::create_directories(run.out);
    run.config["seed"] = run.seed;
    run.config["jobs"] = run.jobs;
    run.config["out"] = out;
    return run;
}

void add_common(CLI::App* cmd, Common& common) {
    cmd->add_option("--config", common.config, "YAML configuration file; flags override its values");
    cmd->add_option("--seed", common.seed, "Master random seed (default 0)");
    cmd->add_option("--jobs", common.jobs, "Worker thread cap; 0 uses all cores (default 1)");
    cmd->add_option("--out", common.out, "Output directory (default ./out)");
}

std::string sanitize(std::string name) {
    for (auto& c : name) {
        if (c == '/' || c == '\\' || c == ':') c = '_';
    }
    if (!name.empty() && name.front() == '@') name.erase(0, 1);
    return name;
}

// ---------------------------------------------------------------- simstudy

struct SimFlags {
    std::optional<int> replicates, boot, restarts, perturb, max_parents, bins, initial_bins;
    std::optional<std::size_t> sample_size;
    std::optional<double> alpha;
    std::optional<std::vector<std::string>> methods;
    std::optional<std::vector<double>> thresholds;
    std::optional<std::string> truth;
};

int cmd_simstudy(const Common& common, const SimFlags& f) {
    FileConfig file(common.config, "simstudy");
    Run run = start_run("simstudy", file, common);
    bnq::SimStudyConfig cfg{bnq::default_truth()};
    std::vector<std::string> methods;
    for (const auto& m : cfg.methods) methods.push_back(m.label);
    int bins = 3, initial_bins = 20;
    std::string truth_path;
    resolve(file, "replicates", f.replicates, cfg.replicates);
    resolve(file, "sample_size", f.sample_size, cfg.sample_size);
    resolve(file, "boot_samples", f.boot, cfg.boot_samples);
    resolve(file, "restarts", f.restarts, cfg.hc.restarts);
    resolve(file, "perturb", f.perturb, cfg.hc.perturb);
    resolve(file, "max_parents", f.max_parents, cfg.hc.max_parents);
    resolve(file, "alpha", f.alpha, cfg.alpha);
    resolve(file, "methods", f.methods, methods);
    resolve(file, "thresholds", f.thresholds, cfg.thresholds);
    resolve(file, "bins", f.bins, bins);
    resolve(file, "initial_bins", f.initial_bins, initial_bins);
    resolve(file, "truth", f.truth, truth_path);
    file.check_unused({"seed", "jobs", "out"});
    for (std::size_t i = 0; i < cfg.thresholds.size(); ++i) {
        const double t = cfg.thresholds[i];
        if (!(t >= 0.0 && t <= 1.0)) throw bnq::ConfigError("thresholds[" + std::to_string(i) + "]", "must lie in [0, 1]");
    }
    cfg.methods.clear();
    for (const auto& label : methods) cfg.methods.push_back(bnq::method_from_label(label, bins, initial_bins));
    if (!truth_path.empty()) {
        std::ifstream in(truth_path);
        if (!in) throw bnq::Error("cannot open '" + truth_path + "'");
        cfg.truth = bnq::gaussian_bn_from_json(json::parse(in));
        run.input(truth_path);
    }
    cfg.seed = run.seed;
    cfg.hc.seed = run.seed;
    cfg.jobs = run.jobs;
    cfg.validate();

    run.config.update({{"replicates", cfg.replicates}, {"sample_size", cfg.sample_size},
                       {"boot_samples", cfg.boot_samples}, {"restarts", cfg.hc.restarts},
                       {"perturb", cfg.hc.perturb}, {"max_parents", cfg.hc.max_parents}, {"alpha", cfg.alpha},
                       {"methods", methods}, {"thresholds", cfg.thresholds}, {"bins", bins},
                       {"initial_bins", initial_bins}, {"truth", bnq::to_json(cfg.truth)}});

    const auto report = bnq::run_simstudy(cfg);
    run.write("simstudy.csv", bnq::simstudy_csv(report));
    run.write("simstudy.txt", bnq::simstudy_table(report));
    int code = kOk;
    if (!report.failures.empty()) {
        std::string text;
        for (const auto& line : report.failures) text += line + "\n";
        run.write("failures.txt", text);
        std::cerr << report.failures.size() << " method runs failed; see failures.txt\n";
        code = kPartial;
    }
    run.manifest(code);
    std::cout << bnq::simstudy_table(report);
    return code;
}

// ---------------------------------------------------------------- learn

struct LearnFlags {
    std::string data;
    std::optional<std::string> learner, discretize;
    std::optional<int> boot, restarts, perturb, max_parents, bins, initial_bins;
    std::optional<double> threshold, alpha;
    bool strict = false;
    bool standardize = false;
};

int cmd_learn(const Common& common, const LearnFlags& f) {
    FileConfig file(common.config, "learn");
    Run run = start_run("learn", file, common);
    std::string learner_name = "hill_climb", disc_name = "none";
    int boot = 100, bins = 3, initial_bins = 20;
    double threshold = 0.85, alpha = 0.05;
    bnq::HcConfig hc;
    resolve(file, "learner", f.learner, learner_name);
    resolve(file, "discretize", f.discretize, disc_name);
    resolve(file, "boot_samples", f.boot, boot);
    resolve(file, "restarts", f.restarts, hc.restarts);
    resolve(file, "perturb", f.perturb, hc.perturb);
    resolve(file, "max_parents", f.max_parents, hc.max_parents);
    resolve(file, "bins", f.bins, bins);
    resolve(file, "initial_bins", f.initial_bins, initial_bins);
    resolve(file, "threshold", f.threshold, threshold);
    resolve(file, "alpha", f.alpha, alpha);
    bool strict = f.strict, standardize = f.standardize;
    if (!f.strict) file.apply("strict", strict);
    if (!f.standardize) file.apply("standardize", standardize);
    file.check_unused({"seed", "jobs", "out"});
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw bnq::ConfigError("threshold", "must lie in [0, 1]");
    if (!(alpha > 0.0 && alpha < 1.0)) throw bnq::ConfigError("alpha", "must lie in (0, 1)");
    const auto learner = bnq::learner_from_string(learner_name);
    hc.seed = run.seed;
    hc.validate();

    run.input(f.data);
    const auto raw = bnq::read_dataset_csv(fs::path(f.data));
    const auto data = standardize ? raw.standardized() : raw;
    run.config.update({{"data", f.data}, {"learner", bnq::to_string(learner)}, {"discretize", disc_name},
                       {"boot_samples", boot}, {"restarts", hc.restarts}, {"perturb", hc.perturb},
                       {"max_parents", hc.max_parents}, {"bins", bins}, {"initial_bins", initial_bins},
                       {"threshold", threshold}, {"alpha", alpha}, {"strict", strict}, {"standardize", standardize}});

    bnq::ArcConfidence conf;
    if (disc_name != "none") {
        bnq::DiscretizationSpec spec{bnq::discretization_method_from_string(disc_name), bins, initial_bins};
        spec.validate();
        const auto disc = bnq::discretize(data, spec);
        conf = bnq::bootstrap_average(disc.data, learner, boot, hc, run.seed, {alpha, run.jobs});
        run.write("cut_points.json", bnq::cut_points_json(disc).dump(2) + "\n");
    } else {
        conf = bnq::bootstrap_average(data, learner, boot, hc, run.seed, {alpha, run.jobs});
    }
    const auto net = bnq::averaged_network(conf, threshold, strict);
    run.write("arc_confidence.csv", bnq::arc_confidence_csv(conf));
    run.write("network.json", bnq::to_json(net).dump(2) + "\n");

    const auto inference = bnq::edge_inference(net.dag, raw);
    std::ostringstream csv;
    csv << "from,to,coefficient,p_value\n";
    for (const auto& e : inference.edges) {
        csv << data.variables()[e.edge.from] << ',' << data.variables()[e.edge.to] << ','
            << bnq::format_double(e.coefficient) << ',' << bnq::format_double(e.p_value) << '\n';
    }
    csv << "\nnode,adjusted_r2\n";
    for (std::size_t v = 0; v < inference.adjusted_r2.size(); ++v) {
        csv << data.variables()[v] << ',' << bnq::format_double(inference.adjusted_r2[v]) << '\n';
    }
    run.write("edge_inference.csv", csv.str());
    run.manifest(kOk);
    for (const auto& e : net.dag.edges()) {
        std::cout << data.variables()[e.from] << " -> " << data.variables()[e.to] << "  strength "
                  << conf.strength(e.from, e.to) << "  direction " << conf.direction(e.from, e.to) << '\n';
    }
    return kOk;
}

// ---------------------------------------------------------------- quality

struct QualityFlags {
    std::string usage;
    std::vector<std::string> series;
    std::optional<std::string> log_policy;
    std::optional<double> span;
    bool power_law = false;
};

int cmd_quality(const Common& common, const QualityFlags& f) {
    FileConfig file(common.config, "quality");
    Run run = start_run("quality", file, common);
    std::string policy_name = "log1p";
    double span = 0.3;
    bool power_law = f.power_law;
    resolve(file, "log_policy", f.log_policy, policy_name);
    resolve(file, "span", f.span, span);
    if (!f.power_law) file.apply("power_law", power_law);
    file.check_unused({"seed", "jobs", "out"});
    const auto policy = bnq::log_policy_from_string(policy_name);
    if (!(span > 0.0)) throw bnq::ConfigError("span", "must be positive");
    if (f.usage.empty() && f.series.empty()) throw bnq::ConfigError("inputs", "give --usage and/or --series");
    run.config.update({{"usage", f.usage}, {"series", f.series}, {"log_policy", policy_name}, {"span", span},
                       {"power_law", power_law}});

    if (!f.usage.empty()) {
        run.input(f.usage);
        const auto releases = bnq::aggregate_releases(bnq::load_usage_csv(fs::path(f.usage)));
        run.write("aggregates.csv", bnq::aggregates_csv(releases));
        std::ostringstream q;
        q << "release,exceptions,new_users,quality,infinite\n";
        for (const auto& r : releases) {
            const auto v = bnq::quality_metric(static_cast<double>(r.exceptions), static_cast<double>(r.new_users));
            q << r.release << ',' << r.exceptions << ',' << r.new_users << ',';
            if (!v.infinite) q << bnq::format_double(v.value);
            q << ',' << (v.infinite ? 1 : 0) << '\n';
        }
        run.write("quality.csv", q.str());
        std::ostringstream transformed;
        bnq::write_dataset_csv(bnq::log_transform(releases, policy), transformed);
        run.write("transformed.csv", transformed.str());
        if (power_law) {
            std::vector<bnq::ReleaseAggregate> positive;
            for (const auto& r : releases) {
                if (r.exceptions > 0 && r.new_users > 0) positive.push_back(r);
            }
            Eigen::MatrixXd m(static_cast<Eigen::Index>(positive.size()), 2);
            for (std::size_t i = 0; i < positive.size(); ++i) {
                m(static_cast<Eigen::Index>(i), 0) = static_cast<double>(positive[i].exceptions);
                m(static_cast<Eigen::Index>(i), 1) = static_cast<double>(positive[i].new_users);
            }
            std::ostringstream pl;
            pl << "response,driver,exponent,ci_low,ci_high,p_value,n,dropped\n";
            if (positive.size() < 3) throw bnq::InsufficientRows("power-law fit needs three releases with exceptions and users");
            const auto fit = bnq::fit_power_law(bnq::Dataset({"Exceptions", "New.Users"}, m), "Exceptions", "New.Users");
            pl << "Exceptions,New.Users," << bnq::format_double(fit.exponent) << ',' << bnq::format_double(fit.ci_low)
               << ',' << bnq::format_double(fit.ci_high) << ',' << bnq::format_double(fit.p_value) << ',' << fit.n << ','
               << releases.size() - positive.size() << '\n';
            run.write("power_law.csv", pl.str());
        }
    }

    if (!f.series.empty()) {
        std::vector<std::pair<std::string, std::vector<bnq::QualityValue>>> values;
        std::ostringstream trends, screen;
        trends << "package,direction,trend_available\n";
        screen << "package,slope,p_value,r2,p_value_date,r2_date,days\n";
        for (const auto& path : f.series) {
            run.input(path);
            std::ifstream in(path);
            if (!in) throw bnq::Error("cannot open '" + path + "'");
            const auto package = fs::path(path).stem().string();
            const auto series = bnq::read_daily_series_csv(in, package);
            const auto tl = bnq::timeline(series, span);
            for (const auto& w : tl.warnings) std::cerr << package << ": " << w << '\n';
            run.write("timeline_" + sanitize(package) + ".csv", bnq::timeline_csv(tl));
            trends << package << ',' << bnq::to_string(bnq::direction_of_trend(tl)) << ',' << (tl.trend_available ? 1 : 0)
                   << '\n';
            std::vector<bnq::QualityValue> daily;
            for (const auto& p : tl.points) {
                if (p.downloads) daily.push_back(p.quality);
            }
            values.emplace_back(package, std::move(daily));
            try {
                const auto plain = bnq::screen_significance(series, false);
                const auto dated = bnq::screen_significance(series, true);
                screen << package << ',' << bnq::format_double(plain.slope) << ',' << bnq::format_double(plain.p_value)
                       << ',' << bnq::format_double(plain.r2) << ',' << bnq::format_double(dated.p_value) << ','
                       << bnq::format_double(dated.r2) << ',' << plain.days << '\n';
            } catch (const bnq::Error& e) {
                std::cerr << package << ": significance screen skipped: " << e.what() << '\n';
            }
        }
        const auto dist = bnq::quality_distribution(values);
        run.write("trends.csv", trends.str());
        run.write("significance.csv", screen.str());
        std::ostringstream d;
        d << bnq::distribution_csv(dist) << "\nmedian_above_one,min_above_one\n"
          << dist.median_above_one << ',' << dist.min_above_one << '\n';
        run.write("distribution.csv", d.str());
    }
    run.manifest(kOk);
    return kOk;
}

// ---------------------------------------------------------------- rf

struct RfFlags {
    std::string data;
    std::string response;
    std::optional<std::vector<int>> ntree, mtry;
    std::optional<int> repeats, folds, min_leaf, importance_repeats;
    std::optional<std::string> ablate, baseline;
};

int cmd_rf(const Common& common, const RfFlags& f) {
    FileConfig file(common.config, "rf");
    Run run = start_run("rf", file, common);
    std::vector<int> ntree, mtry;
    bnq::CvSpec cv;
    int min_leaf = 5, importance_repeats = 5;
    std::string ablate, baseline = "heldout";
    resolve(file, "ntree", f.ntree, ntree);
    resolve(file, "mtry", f.mtry, mtry);
    resolve(file, "repeats", f.repeats, cv.repeats);
    resolve(file, "folds", f.folds, cv.folds);
    resolve(file, "min_leaf", f.min_leaf, min_leaf);
    resolve(file, "importance_repeats", f.importance_repeats, importance_repeats);
    resolve(file, "ablate", f.ablate, ablate);
    resolve(file, "baseline", f.baseline, baseline);
    file.check_unused({"seed", "jobs", "out"});
    if (baseline != "heldout" && baseline != "training") throw bnq::ConfigError("baseline", "expected heldout or training");
    cv.baseline = baseline == "heldout" ? bnq::R2Baseline::heldout_mean : bnq::R2Baseline::training_mean;
    cv.seed = run.seed;

    run.input(f.data);
    const auto data = bnq::read_dataset_csv(fs::path(f.data));
    if (!data.variables().contains(f.response)) throw bnq::ConfigError("response", "column '" + f.response + "' not found");
    const std::size_t p = data.p() - 1;
    if (ntree.empty()) {
        for (int t = 100; t <= 1000; t += 100) ntree.push_back(t);
    }
    if (mtry.empty()) {
        for (int m = 1; m <= static_cast<int>(p); ++m) mtry.push_back(m);
    }
    std::vector<std::pair<int, int>> grid;
    for (int t : ntree)
        for (int m : mtry) grid.emplace_back(t, m);
    run.config.update({{"data", f.data}, {"response", f.response}, {"ntree", ntree}, {"mtry", mtry},
                       {"repeats", cv.repeats}, {"folds", cv.folds}, {"min_leaf", min_leaf},
                       {"importance_repeats", importance_repeats}, {"ablate", ablate}, {"baseline", baseline}});

    const auto tuned = bnq::tune_forest(data, f.response, grid, cv, min_leaf, run.jobs);
    run.write("tune.csv", bnq::tune_result_csv(tuned));
    const auto& best = tuned.best_cell();
    const bnq::ForestConfig cfg{best.ntree, best.mtry, min_leaf, run.seed, run.jobs};
    const auto model = bnq::fit_forest(data, f.response, cfg);
    const auto importance = bnq::permutation_importance(model, data, importance_repeats, run.seed);
    run.write("importance.csv", bnq::importance_csv(importance));
    std::cout << "best ntree=" << best.ntree << " mtry=" << best.mtry << " R2=" << best.mean_r2 << " (sd: " << best.sd_r2
              << ")\n";
    if (!ablate.empty()) {
        const auto ab = bnq::ablate_predictor(data, f.response, ablate, cfg, cv);
        std::ostringstream out;
        out << "dropped,r2_with,sd_with,r2_without,sd_without\n"
            << ablate << ',' << bnq::format_double(ab.with_mean) << ',' << bnq::format_double(ab.with_sd) << ','
            << bnq::format_double(ab.without_mean) << ',' << bnq::format_double(ab.without_sd) << '\n';
        run.write("ablation.csv", out.str());
        std::cout << "without " << ablate << ": R2=" << ab.without_mean << " (sd: " << ab.without_sd << ")\n";
    }
    run.manifest(kOk);
    return kOk;
}

// ---------------------------------------------------------------- fetch

struct FetchFlags {
    std::vector<std::string> packages;
    std::string repos;
    std::string start, end;
    std::optional<std::string> npm_base, github_base, cache_dir, token, fixtures;
    std::optional<int> window;
    std::optional<double> popularity;
    bool live = false;
    bool include_prs = false;
};

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

int cmd_fetch(const Common& common, const FetchFlags& f) {
    FileConfig file(common.config, "fetch");
    Run run = start_run("fetch", file, common);
    std::vector<std::string> packages = f.packages;
    std::string repos_path = f.repos, start = f.start, end = f.end;
    std::string npm_base = env_or("BNQ_NPM_BASE", "https://api.npmjs.org");
    std::string github_base = env_or("BNQ_GITHUB_BASE", "https://api.github.com");
    std::string cache_dir = env_or("BNQ_CACHE_DIR", (run.out / "cache").string());
    std::string token = env_or("GITHUB_TOKEN", "");
    std::string fixtures;
    int window = bnq::kMaxDownloadWindowDays;
    double popularity = 10000.0;
    bool live = f.live, include_prs = f.include_prs;
    if (packages.empty()) file.apply("packages", packages);
    if (repos_path.empty()) file.apply("repos", repos_path);
    if (start.empty()) file.apply("start", start);
    if (end.empty()) file.apply("end", end);
    resolve(file, "npm_base", f.npm_base, npm_base);
    resolve(file, "github_base", f.github_base, github_base);
    resolve(file, "cache_dir", f.cache_dir, cache_dir);
    resolve(file, "token", f.token, token);
    resolve(file, "fixtures", f.fixtures, fixtures);
    resolve(file, "window", f.window, window);
    resolve(file, "popularity", f.popularity, popularity);
    if (!f.live) file.apply("live", live);
    if (!f.include_prs) file.apply("include_prs", include_prs);
    file.check_unused({"seed", "jobs", "out"});

    std::map<std::string, std::string> repo_of;
    if (!repos_path.empty()) {
        std::ifstream in(repos_path);
        if (!in) throw bnq::Error("cannot open '" + repos_path + "'");
        for (const auto& [pkg, repo] : bnq::parse_repo_map(in)) {
            repo_of[pkg] = repo;
            if (std::find(packages.begin(), packages.end(), pkg) == packages.end()) packages.push_back(pkg);
        }
        run.input(repos_path);
    }
    if (packages.empty()) throw bnq::ConfigError("packages", "at least one package is required");
    if (start.empty() || end.empty()) throw bnq::ConfigError("start", "--start and --end are required");
    const auto day0 = bnq::parse_date(start), day1 = bnq::parse_date(end);
    if (day1 < day0) throw bnq::ConfigError("end", "must not precede start");
    run.config.update({{"packages", packages}, {"repos", repos_path}, {"start", start}, {"end", end},
                       {"npm_base", npm_base}, {"github_base", github_base}, {"cache_dir", cache_dir},
                       {"fixtures", fixtures}, {"window", window}, {"popularity", popularity}, {"live", live},
                       {"include_prs", include_prs}});

    bnq::ResponseCache cache(cache_dir);
    std::unique_ptr<bnq::Transport> transport;
    if (!fixtures.empty()) {
        transport = bnq::FixtureTransport::from_directory(fixtures);
    } else if (live) {
        transport = std::make_unique<bnq::LiveTransport>();
    }
    bnq::Fetcher fetcher(&cache, transport.get());
    bnq::IssueFetchOptions issue_opts{include_prs, token.empty() ? std::nullopt : std::optional<std::string>(token)};

    struct Outcome {
        std::optional<bnq::DailySeries> series;
        std::vector<bnq::Day> gaps;
        std::string error;
    };
    std::vector<Outcome> outcomes(packages.size());
    bnq::parallel_for(packages.size(), std::min(4, std::max(1, run.jobs)), [&](std::size_t i) {
        const auto& pkg = packages[i];
        try {
            const auto downloads = bnq::fetch_downloads(fetcher, npm_base, pkg, day0, day1, window);
            std::vector<bnq::Day> issues;
            if (const auto it = repo_of.find(pkg); it != repo_of.end()) {
                issues = bnq::fetch_issues(fetcher, github_base, it->second, issue_opts);
            }
            outcomes[i].series = bnq::build_daily_series(downloads, issues, day0, day1);
            outcomes[i].gaps = downloads.gaps;
        } catch (const bnq::CacheMiss& e) {
            outcomes[i].error = std::string(e.what());
        } catch (const bnq::Error& e) {
            outcomes[i].error = e.what();
        }
    });

    std::ostringstream gaps, failures, summary;
    gaps << "package,date\n";
    failures << "package,error\n";
    summary << "package,repo,monthly_downloads,popular,issues_before_start\n";
    std::size_t failed = 0, misses = 0;
    for (std::size_t i = 0; i < packages.size(); ++i) {
        const auto& o = outcomes[i];
        if (!o.series) {
            ++failed;
            if (o.error.find("live fetching") != std::string::npos) ++misses;
            failures << packages[i] << ",\"" << o.error << "\"\n";
            continue;
        }
        run.write("series_" + sanitize(packages[i]) + ".csv", bnq::daily_series_csv(*o.series));
        for (const auto& d : o.gaps) gaps << packages[i] << ',' << bnq::format_date(d) << '\n';
        const double monthly = bnq::monthly_downloads(*o.series);
        const auto repo = repo_of.count(packages[i]) ? repo_of[packages[i]] : std::string();
        summary << packages[i] << ',' << repo << ',' << bnq::format_double(monthly) << ','
                << (bnq::filter_popular({{packages[i], monthly}}, popularity).empty() ? 0 : 1) << ','
                << o.series->issues_before_start << '\n';
    }
    run.write("packages.csv", summary.str());
    run.write("gaps.csv", gaps.str());
    if (failed) run.write("failures.csv", failures.str());
    const int code = failed == 0 ? kOk : (failed == packages.size() ? kError : kPartial);
    run.manifest(code);
    if (misses && !live && fixtures.empty()) {
        std::cerr << "cache is cold for " << misses << " package(s); rerun with --live to fetch from the network\n";
    }
    if (failed) std::cerr << failed << " of " << packages.size() << " packages failed; see failures.csv\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian-network structure learning and usage-normalized software quality analysis"};
    app.set_version_flag("--version", BNQ_VERSION);
    app.require_subcommand(1);

    Common common;
    SimFlags sim;
    auto* simstudy = app.add_subcommand("simstudy", "Structure-recovery simulation study");
    add_common(simstudy, common);
    simstudy->add_option("--replicates", sim.replicates, "Simulated datasets (default 100)");
    simstudy->add_option("--sample-size", sim.sample_size, "Rows per dataset (default 200)");
    simstudy->add_option("--boot", sim.boot, "Bootstrap resamples per dataset (default 100)");
    simstudy->add_option("--restarts", sim.restarts, "Hill-climbing climbs (default 10)");
    simstudy->add_option("--perturb", sim.perturb, "Random edge operations per restart (default 5)");
    simstudy->add_option("--max-parents", sim.max_parents, "Parent limit (default 5)");
    simstudy->add_option("--alpha", sim.alpha, "Restrict-phase significance level (default 0.05)");
    simstudy->add_option("--methods", sim.methods, "Method labels, e.g. HC MAP Hybrid-gs HC-D-F");
    simstudy->add_option("--thresholds", sim.thresholds, "Averaging thresholds (default 0.55..1.00 step 0.05)");
    simstudy->add_option("--bins", sim.bins, "Discretization bins (default 3)");
    simstudy->add_option("--initial-bins", sim.initial_bins, "Hartemink starting bins (default 20)");
    simstudy->add_option("--truth", sim.truth, "Ground-truth network JSON (default: built-in six-node network)");

    LearnFlags learn_f;
    auto* learn = app.add_subcommand("learn", "Bootstrap-averaged network from a CSV dataset");
    add_common(learn, common);
    learn->add_option("--data", learn_f.data, "Input CSV with a header row")->required();
    learn->add_option("--learner", learn_f.learner, "hill_climb | hybrid_gs | hybrid_mmpc | exact_map");
    learn->add_option("--discretize", learn_f.discretize, "none | equal_interval | equal_frequency | kmeans | hartemink");
    learn->add_option("--boot", learn_f.boot, "Bootstrap resamples (default 100)");
    learn->add_option("--restarts", learn_f.restarts, "Hill-climbing climbs (default 10)");
    learn->add_option("--perturb", learn_f.perturb, "Random edge operations per restart (default 5)");
    learn->add_option("--max-parents", learn_f.max_parents, "Parent limit (default 5)");
    learn->add_option("--bins", learn_f.bins, "Discretization bins (default 3)");
    learn->add_option("--initial-bins", learn_f.initial_bins, "Hartemink starting bins (default 20)");
    learn->add_option("--threshold", learn_f.threshold, "Arc strength threshold in [0, 1] (default 0.85)");
    learn->add_option("--alpha", learn_f.alpha, "Restrict-phase significance level (default 0.05)");
    learn->add_flag("--strict", learn_f.strict, "Keep arcs with strength strictly above the threshold");
    learn->add_flag("--standardize", learn_f.standardize, "Scale columns to unit variance before learning");

    QualityFlags quality_f;
    auto* quality = app.add_subcommand("quality", "Release aggregates, quality metric and timelines");
    add_common(quality, common);
    quality->add_option("--usage", quality_f.usage, "Usage CSV (date,release,new_users,...)");
    quality->add_option("--series", quality_f.series, "Daily series CSVs written by 'fetch'");
    quality->add_option("--log-policy", quality_f.log_policy, "log1p | strict-log (default log1p)");
    quality->add_option("--span", quality_f.span, "LOESS span (default 0.3)");
    quality->add_flag("--power-law", quality_f.power_law, "Fit exceptions ~ new_users^k with a 95% interval");

    RfFlags rf_f;
    auto* rf = app.add_subcommand("rf", "Random-forest tuning, importance and ablation");
    add_common(rf, common);
    rf->add_option("--data", rf_f.data, "Input CSV with a header row")->required();
    rf->add_option("--response", rf_f.response, "Response column")->required();
    rf->add_option("--ntree", rf_f.ntree, "Grid values for ntree (default 100..1000 step 100)");
    rf->add_option("--mtry", rf_f.mtry, "Grid values for mtry (default 1..p)");
    rf->add_option("--repeats", rf_f.repeats, "Cross-validation repeats (default 10)");
    rf->add_option("--folds", rf_f.folds, "Cross-validation folds (default 2)");
    rf->add_option("--min-leaf", rf_f.min_leaf, "Minimum rows per leaf (default 5)");
    rf->add_option("--importance-repeats", rf_f.importance_repeats, "Permutations per predictor (default 5)");
    rf->add_option("--ablate", rf_f.ablate, "Predictor to drop for a paired R² comparison");
    rf->add_option("--baseline", rf_f.baseline, "R² baseline: heldout | training fold mean (default heldout)");

    FetchFlags fetch_f;
    auto* fetch = app.add_subcommand("fetch", "Download counts and issue histories into daily series");
    add_common(fetch, common);
    fetch->add_option("--packages", fetch_f.packages, "Package names");
    fetch->add_option("--repos", fetch_f.repos, "File of package=owner/repo lines");
    fetch->add_option("--start", fetch_f.start, "First day, YYYY-MM-DD");
    fetch->add_option("--end", fetch_f.end, "Last day, YYYY-MM-DD");
    fetch->add_option("--npm-base", fetch_f.npm_base, "Downloads API base URL (env BNQ_NPM_BASE)");
    fetch->add_option("--github-base", fetch_f.github_base, "Issues API base URL (env BNQ_GITHUB_BASE)");
    fetch->add_option("--cache-dir", fetch_f.cache_dir, "Response cache directory (env BNQ_CACHE_DIR; default <out>/cache)");
    fetch->add_option("--token", fetch_f.token, "Issues API token (env GITHUB_TOKEN)");
    fetch->add_option("--fixtures", fetch_f.fixtures, "Serve requests from a recorded fixture directory");
    fetch->add_option("--window", fetch_f.window, "Maximum days per downloads request (default 540)");
    fetch->add_option("--popularity", fetch_f.popularity, "Monthly downloads needed to count as popular (default 10000)");
    fetch->add_flag("--live", fetch_f.live, "Allow network access on cache misses");
    fetch->add_flag("--include-prs", fetch_f.include_prs, "Count pull requests as issues");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (*simstudy) return cmd_simstudy(common, sim);
        if (*learn) return cmd_learn(common, learn_f);
        if (*quality) return cmd_quality(common, quality_f);
        if (*rf) return cmd_rf(common, rf_f);
        if (*fetch) return cmd_fetch(common, fetch_f);
    } catch (const bnq::ConfigError& e) {
        std::cerr << "configuration error: " << e.field() << ": " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kError;
    }
    return kError;
}
