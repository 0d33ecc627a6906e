#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bnq/dataset.hpp"
#include "bnq/dates.hpp"

namespace bnq {

struct UsageRecord {
    Day date{};
    std::string release;
    long long new_users = 0;
    long long users = 0;
    long long new_visits = 0;
    long long visits = 0;
    double time_on_site = 0.0;  ///< seconds
    long long exceptions = 0;

    bool operator==(const UsageRecord&) const = default;
};

/// Raises new_users on any day where the running total falls below that day's
/// users. Input must be in nondecreasing date order (UnsortedInput otherwise).
std::vector<UsageRecord> correct_new_users(std::vector<UsageRecord> records);

struct ReleaseAggregate {
    std::string release;
    long long release_date = 0;  ///< days since 1970-01-01
    long long release_duration = 0;
    long long exceptions = 0;
    long long new_users = 0;
    double usage_intensity = 0.0;  ///< time on site per new user
    double usage_frequency = 0.0;  ///< new visits per new user
    bool zero_users = false;       ///< per-user fields were set to 0
};

/// One release's records in any order. Throws EmptyRelease.
ReleaseAggregate aggregate_release(std::vector<UsageRecord> records);
/// Groups by release, corrects new users, aggregates; ordered by date then name.
std::vector<ReleaseAggregate> aggregate_releases(const std::vector<UsageRecord>& records);

enum class LogPolicy { log1p, strict_log };
LogPolicy log_policy_from_string(const std::string& name);

/// Release.Date, Release.Duration, New.Users, Usage.Intensity, Usage.Frequency, Exceptions.
Dataset log_transform(const std::vector<ReleaseAggregate>& releases, LogPolicy policy = LogPolicy::log1p);
/// As log_transform with Exceptions replaced by Quality (exceptions per new user).
/// Throws NumericalRange when a release has exceptions but no new users.
Dataset quality_dataset(const std::vector<ReleaseAggregate>& releases, LogPolicy policy = LogPolicy::log1p);

struct QualityValue {
    double value = 0.0;
    bool infinite = false;  ///< failures > 0 with zero usage

    bool operator==(const QualityValue&) const = default;
};

QualityValue quality_metric(double failures, double usage);

/// Per-day downloads (nullopt marks a gap) and cumulative issue counts.
struct DailySeries {
    std::string package;
    Day start{};
    std::vector<std::optional<long long>> downloads;
    std::vector<long long> cumulative_issues;
    long long issues_before_start = 0;

    std::size_t days() const { return cumulative_issues.size(); }
};

/// First differences of the cumulative counts; day 0 is relative to
/// issues_before_start. Negative steps are clamped to 0 and counted.
std::vector<long long> daily_new_issues(const DailySeries& series, std::size_t* clamped = nullptr);

/// Local linear regression with tricube weights over the nearest
/// ceil(span * n) points, evaluated at `at`. Throws InsufficientRows for n < 3.
std::vector<double> loess(const std::vector<double>& x, const std::vector<double>& y, double span,
                          const std::vector<double>& at);

struct TimelinePoint {
    Day date{};
    std::optional<long long> downloads;
    long long new_issues = 0;
    QualityValue quality;
    bool excluded = false;  ///< left out of the trend fit (gap or zero downloads)
    std::optional<double> trend;
};

struct Timeline {
    std::string package;
    std::vector<TimelinePoint> points;
    double span = 0.3;
    bool trend_available = false;
    std::vector<std::string> warnings;
};

inline constexpr std::size_t kMinTrendDays = 10;

/// Daily quality plus a LOESS trend when at least ten usable days exist.
Timeline timeline(const DailySeries& series, double span = 0.3);

struct SignificanceResult {
    double slope = 0.0;
    double p_value = 1.0;
    double r2 = 0.0;
    std::size_t days = 0;
};

/// OLS of daily new issues on downloads, optionally controlling for the day index.
SignificanceResult screen_significance(const DailySeries& series, bool with_date_control);

struct QualitySummary {
    std::string package;
    double min = 0.0;
    double median = 0.0;
    double q90 = 0.0;  ///< finite days only
    std::size_t infinite_days = 0;
};

struct Histogram {
    std::vector<double> edges;
    std::vector<int> counts;
};

struct QualityDistribution {
    std::vector<QualitySummary> packages;
    std::size_t median_above_one = 0;
    std::size_t min_above_one = 0;
    Histogram median_histogram;
};

QualityDistribution quality_distribution(const std::vector<std::pair<std::string, std::vector<QualityValue>>>& packages,
                                         int histogram_bins = 20);

enum class TrendDirection { increasing, decreasing, flat };
std::string to_string(TrendDirection d);

/// Sign of last - first over finite values, flat within 1e-3 of the range.
TrendDirection direction_of_trend(const std::vector<double>& trend);
TrendDirection direction_of_trend(const Timeline& timeline);

std::string aggregates_csv(const std::vector<ReleaseAggregate>& releases);
std::string timeline_csv(const Timeline& timeline);
std::string distribution_csv(const QualityDistribution& dist);

}  // namespace bnq
