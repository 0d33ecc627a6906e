#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bnq/discrete.hpp"
#include "bnq/gaussian_bn.hpp"
#include "bnq/metrics.hpp"
#include "bnq/search.hpp"

namespace bnq {

struct MethodSpec {
    std::string label;  ///< e.g. "HC", "MAP", "Hybrid-gs", "HC-D-F"
    Learner learner = Learner::hill_climb;
    std::optional<DiscretizationSpec> discretization;
};

/// Parses labels of the form HC, MAP, Hybrid-gs, Hybrid-mmpc with an optional
/// -D-I / -D-F / -D-K / -D-H suffix (hill climbing and MAP only).
MethodSpec method_from_label(const std::string& label, int bins = 3, int initial_bins = 20);
std::vector<MethodSpec> default_methods();
/// 0.55, 0.60, ..., 1.00.
std::vector<double> default_thresholds();

/// Fixed six-node network over the release variables.
GaussianBn default_truth();

struct SimStudyConfig {
    GaussianBn truth = default_truth();
    int replicates = 100;
    std::size_t sample_size = 200;
    std::vector<MethodSpec> methods = default_methods();
    std::vector<double> thresholds = default_thresholds();
    int boot_samples = 100;
    HcConfig hc{};
    double alpha = 0.05;
    std::uint64_t seed = 0;
    int jobs = 1;

    void validate() const;
};

struct SimStudyRow {
    std::string method;
    std::string discretization;  ///< "none" for continuous arms
    double threshold = 0.0;
    int exact = 0;
    int off_by_one = 0;
    int worse = 0;
    int replicates = 0;

    double exact_fraction() const { return static_cast<double>(exact) / replicates; }
    double off_by_one_fraction() const { return static_cast<double>(off_by_one) / replicates; }
    double worse_fraction() const { return static_cast<double>(worse) / replicates; }
};

struct SimStudyReport {
    std::vector<SimStudyRow> rows;   ///< method-major, thresholds in config order
    std::vector<std::string> failures;  ///< "replicate r, method m: reason"

    const SimStudyRow& row(const std::string& method, double threshold) const;
};


SimStudyReport run_simstudy(const SimStudyConfig& cfg);

std::string simstudy_csv(const SimStudyReport& report);
std::string simstudy_table(const SimStudyReport& report);

}  // namespace bnq
