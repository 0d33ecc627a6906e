#include "bnq/simstudy.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "bnq/errors.hpp"
#include "bnq/parallel.hpp"
#include "bnq/random.hpp"

namespace bnq {

MethodSpec method_from_label(const std::string& label, int bins, int initial_bins) {
    MethodSpec spec;
    spec.label = label;
    std::string base = label;
    const auto d = label.find("-D-");
    if (d != std::string::npos) {
        base = label.substr(0, d);
        DiscretizationSpec disc;
        disc.method = discretization_method_from_string(label.substr(d + 3));
        disc.bins = bins;
        disc.hartemink_initial_bins = initial_bins;
        disc.validate();
        spec.discretization = disc;
    }
    if (base == "HC") {
        spec.learner = Learner::hill_climb;
    } else if (base == "MAP") {
        spec.learner = Learner::exact_map;
    } else if (base == "Hybrid-gs") {
        spec.learner = Learner::hybrid_gs;
    } else if (base == "Hybrid-mmpc") {
        spec.learner = Learner::hybrid_mmpc;
    } else {
        throw ConfigError("methods", "unknown method '" + label + "'");
    }
    if (spec.discretization && (spec.learner == Learner::hybrid_gs || spec.learner == Learner::hybrid_mmpc)) {
        throw ConfigError("methods", "hybrid restricts need continuous data: '" + label + "'");
    }
    return spec;
}

std::vector<MethodSpec> default_methods() {
    std::vector<MethodSpec> out;
    for (const char* label : {"HC", "MAP", "Hybrid-gs", "Hybrid-mmpc", "HC-D-F", "HC-D-H"}) {
        out.push_back(method_from_label(label));
    }
    return out;
}

std::vector<double> default_thresholds() {
    std::vector<double> out;
    for (int k = 11; k <= 20; ++k) out.push_back(k / 20.0);
    return out;
}

void SimStudyConfig::validate() const {
    if (replicates < 1) throw ConfigError("replicates", "must be at least 1");
    if (boot_samples < 1) throw ConfigError("boot_samples", "must be at least 1");
    if (sample_size < 2) throw ConfigError("sample_size", "must be at least 2");
    if (methods.empty()) throw ConfigError("methods", "must not be empty");
    if (thresholds.empty()) throw ConfigError("thresholds", "must not be empty");
    for (double t : thresholds) {
        if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("thresholds", "must lie in [0, 1]");
    }
    hc.validate();
}

const SimStudyRow& SimStudyReport::row(const std::string& method, double threshold) const {
    for (const auto& r : rows) {
        if (r.method == method && std::fabs(r.threshold - threshold) < 1e-12) return r;
    }
    throw std::out_of_range("no report row for " + method);
}

GaussianBn default_truth() {
    const VariableSet vars{"Release.Date", "Release.Duration", "New.Users",
                           "Usage.Intensity", "Usage.Frequency", "Exceptions"};
    const Dag dag = Dag::from_names(vars, {{"Release.Date", "Release.Duration"},
                                           {"Release.Date", "Exceptions"},
                                           {"New.Users", "Exceptions"},
                                           {"New.Users", "Release.Duration"},
                                           {"Release.Duration", "Usage.Intensity"},
                                           {"Usage.Intensity", "Usage.Frequency"}});
    // Coefficients follow ascending parent index.
    std::vector<NodeParameters> nodes(6);
    nodes[1].coefficients = {0.8, -0.6};  // Release.Duration <- Release.Date, New.Users
    nodes[3].coefficients = {0.7};        // Usage.Intensity <- Release.Duration
    nodes[4].coefficients = {1.1};        // Usage.Frequency <- Usage.Intensity
    nodes[5].coefficients = {1.2, 0.9};   // Exceptions <- Release.Date, New.Users
    return GaussianBn(dag, std::move(nodes));
}

SimStudyReport run_simstudy(const SimStudyConfig& cfg) {
    cfg.validate();
    const std::size_t methods = cfg.methods.size();
    const std::size_t thresholds = cfg.thresholds.size();
    // outcome[r][m][t]
    std::vector<std::vector<std::vector<Recovery>>> outcome(
        static_cast<std::size_t>(cfg.replicates),
        std::vector<std::vector<Recovery>>(methods, std::vector<Recovery>(thresholds, Recovery::worse)));
    std::vector<std::vector<std::string>> failures(static_cast<std::size_t>(cfg.replicates));

    parallel_for(outcome.size(), cfg.jobs, [&](std::size_t r) {
        const Dataset data = simulate(cfg.truth, cfg.sample_size, derive_seed(cfg.seed, 1, r));
        for (std::size_t m = 0; m < methods; ++m) {
            const auto& method = cfg.methods[m];
            const std::uint64_t boot_seed = derive_seed(cfg.seed, 2 + m, r);
            try {
                ArcConfidence conf;
                if (method.discretization) {
                    const auto disc = discretize(data, *method.discretization);
                    conf = bootstrap_average(disc.data, method.learner, cfg.boot_samples, cfg.hc, boot_seed);
                } else {
                    conf = bootstrap_average(data, method.learner, cfg.boot_samples, cfg.hc, boot_seed,
                                             BootstrapOptions{cfg.alpha, 1});
                }
                for (std::size_t t = 0; t < thresholds; ++t) {
                    outcome[r][m][t] = classify(cfg.truth.dag(), averaged_network(conf, cfg.thresholds[t]).dag);
                }
            } catch (const std::exception& e) {
                failures[r].push_back("replicate " + std::to_string(r) + ", method " + method.label + ": " + e.what());
            }
        }
    });

    SimStudyReport report;
    for (std::size_t m = 0; m < methods; ++m) {
        for (std::size_t t = 0; t < thresholds; ++t) {
            SimStudyRow row;
            row.method = cfg.methods[m].label;
            row.discretization = cfg.methods[m].discretization ? to_string(cfg.methods[m].discretization->method) : "none";
            row.threshold = cfg.thresholds[t];
            row.replicates = cfg.replicates;
            for (const auto& rep : outcome) {
                switch (rep[m][t]) {
                    case Recovery::exact: ++row.exact; break;
                    case Recovery::off_by_one: ++row.off_by_one; break;
                    case Recovery::worse: ++row.worse; break;
                }
            }
            report.rows.push_back(std::move(row));
        }
    }
    for (auto& f : failures) report.failures.insert(report.failures.end(), f.begin(), f.end());
    return report;
}

std::string simstudy_csv(const SimStudyReport& report) {
    std::ostringstream out;
    out << "method,discretization,threshold,exact,off_by_one,worse\n";
    for (const auto& r : report.rows) {
        out << r.method << ',' << r.discretization << ',' << format_double(r.threshold) << ','
            << format_double(r.exact_fraction()) << ',' << format_double(r.off_by_one_fraction()) << ','
            << format_double(r.worse_fraction()) << '\n';
    }
    return out.str();
}

std::string simstudy_table(const SimStudyReport& report) {
    std::size_t width = 6;
    for (const auto& r : report.rows) width = std::max(width, r.method.size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(width)) << "Method" << "  Threshold  Exact  Off-by-one\n";
    out << std::fixed;
    for (const auto& r : report.rows) {
        out << std::left << std::setw(static_cast<int>(width)) << r.method << "  " << std::right << std::setw(9)
            << std::setprecision(2) << r.threshold << "  " << std::setw(5) << std::setprecision(3)
            << r.exact_fraction() << "  " << std::setw(10) << r.off_by_one_fraction() << '\n';
    }
    return out.str();
}

}  // namespace bnq
