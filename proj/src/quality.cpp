#include "bnq/quality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "bnq/errors.hpp"
#include "bnq/stats.hpp"

namespace bnq {

std::vector<UsageRecord> correct_new_users(std::vector<UsageRecord> records) {
    long long running = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i > 0 && records[i].date < records[i - 1].date) {
            throw UnsortedInput("usage records for release '" + records[i].release + "' are not in date order");
        }
        running += records[i].new_users;
        if (running < records[i].users) {
            records[i].new_users += records[i].users - running;
            running = records[i].users;
        }
    }
    return records;
}

ReleaseAggregate aggregate_release(std::vector<UsageRecord> records) {
    if (records.empty()) throw EmptyRelease("release has no usage records");
    std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
    ReleaseAggregate out;
    out.release = records.front().release;
    out.release_date = days_since_epoch(records.front().date);
    out.release_duration = days_since_epoch(records.back().date) - out.release_date + 1;
    double time = 0.0;
    long long visits = 0;
    for (const auto& r : records) {
        out.exceptions += r.exceptions;
        out.new_users += r.new_users;
        time += r.time_on_site;
        visits += r.new_visits;
    }
    if (out.new_users > 0) {
        out.usage_intensity = time / static_cast<double>(out.new_users);
        out.usage_frequency = static_cast<double>(visits) / static_cast<double>(out.new_users);
    } else {
        out.zero_users = true;
    }
    return out;
}

std::vector<ReleaseAggregate> aggregate_releases(const std::vector<UsageRecord>& records) {
    std::map<std::string, std::vector<UsageRecord>> groups;
    for (const auto& r : records) groups[r.release].push_back(r);
    std::vector<ReleaseAggregate> out;
    for (auto& [name, group] : groups) {
        std::stable_sort(group.begin(), group.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
        out.push_back(aggregate_release(correct_new_users(std::move(group))));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::tie(a.release_date, a.release) < std::tie(b.release_date, b.release);
    });
    return out;
}

LogPolicy log_policy_from_string(const std::string& name) {
    if (name == "log1p") return LogPolicy::log1p;
    if (name == "strict-log" || name == "strict_log" || name == "log") return LogPolicy::strict_log;
    throw ConfigError("log_policy", "expected log1p or strict-log, got '" + name + "'");
}

namespace {

double apply_log(double v, LogPolicy policy, const char* column) {
    if (v < 0.0) throw NonPositiveValue(std::string(column) + " has a negative value");
    if (policy == LogPolicy::log1p) return std::log1p(v);
    if (v <= 0.0) throw NonPositiveValue(std::string(column) + " has a zero value under strict-log");
    return std::log(v);
}

Dataset release_dataset(const std::vector<ReleaseAggregate>& releases, LogPolicy policy, bool quality) {
    if (releases.empty()) throw InsufficientRows("no releases to transform");
    const auto n = static_cast<Eigen::Index>(releases.size());
    Eigen::MatrixXd m(n, 6);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = releases[static_cast<std::size_t>(i)];
        m(i, 0) = apply_log(static_cast<double>(r.release_date), policy, "Release.Date");
        m(i, 1) = apply_log(static_cast<double>(r.release_duration), policy, "Release.Duration");
        m(i, 2) = apply_log(static_cast<double>(r.new_users), policy, "New.Users");
        m(i, 3) = apply_log(r.usage_intensity, policy, "Usage.Intensity");
        m(i, 4) = apply_log(r.usage_frequency, policy, "Usage.Frequency");
        if (quality) {
            const auto q = quality_metric(static_cast<double>(r.exceptions), static_cast<double>(r.new_users));
            if (q.infinite) throw NumericalRange("release '" + r.release + "' has exceptions but no new users");
            m(i, 5) = apply_log(q.value, policy, "Quality");
        } else {
            m(i, 5) = apply_log(static_cast<double>(r.exceptions), policy, "Exceptions");
        }
    }
    return Dataset(VariableSet{"Release.Date", "Release.Duration", "New.Users", "Usage.Intensity", "Usage.Frequency",
                               quality ? "Quality" : "Exceptions"},
                   std::move(m));
}

}  // namespace

Dataset log_transform(const std::vector<ReleaseAggregate>& releases, LogPolicy policy) {
    return release_dataset(releases, policy, false);
}

Dataset quality_dataset(const std::vector<ReleaseAggregate>& releases, LogPolicy policy) {
    return release_dataset(releases, policy, true);
}

QualityValue quality_metric(double failures, double usage) {
    if (failures < 0.0 || usage < 0.0) throw NumericalRange("failures and usage must be non-negative");
    if (failures == 0.0) return {0.0, false};
    if (usage == 0.0) return {std::numeric_limits<double>::infinity(), true};
    return {failures / usage, false};
}

std::vector<long long> daily_new_issues(const DailySeries& series, std::size_t* clamped) {
    std::vector<long long> out(series.days());
    std::size_t negatives = 0;
    long long previous = series.issues_before_start;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const long long step = series.cumulative_issues[i] - previous;
        if (step < 0) ++negatives;
        out[i] = std::max(step, 0LL);
        previous = series.cumulative_issues[i];
    }
    if (clamped) *clamped = negatives;
    return out;
}

std::vector<double> loess(const std::vector<double>& x, const std::vector<double>& y, double span,
                          const std::vector<double>& at) {
    if (x.size() != y.size()) throw VariableMismatch("loess x and y differ in length");
    if (!(span > 0.0)) throw ConfigError("span", "must be positive");
    const std::size_t n = x.size();
    if (n < 3) throw InsufficientRows("loess needs at least three points");
    const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(span * static_cast<double>(n))), 3, n);
    std::vector<double> out;
    out.reserve(at.size());
    std::vector<double> dist(n);
    for (double x0 : at) {
        for (std::size_t i = 0; i < n; ++i) dist[i] = std::fabs(x[i] - x0);
        std::vector<double> sorted = dist;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
        double h = sorted[k - 1];
        if (span > 1.0) h *= span;
        double sw = 0.0, sx = 0.0, sy = 0.0;
        std::vector<double> w(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (h == 0.0) {
                w[i] = dist[i] == 0.0 ? 1.0 : 0.0;
            } else if (dist[i] < h) {
                const double u = dist[i] / h;
                const double t = 1.0 - u * u * u;
                w[i] = t * t * t;
            }
            sw += w[i];
            sx += w[i] * x[i];
            sy += w[i] * y[i];
        }
        if (sw == 0.0) {
            // Only the boundary neighbours remain: fall back to equal weights on them.
            for (std::size_t i = 0; i < n; ++i) {
                if (dist[i] <= h) {
                    w[i] = 1.0;
                    sw += 1.0;
                    sx += x[i];
                    sy += y[i];
                }
            }
        }
        const double mx = sx / sw, my = sy / sw;
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sxx += w[i] * (x[i] - mx) * (x[i] - mx);
            sxy += w[i] * (x[i] - mx) * (y[i] - my);
        }
        const double scale = std::max(1.0, sxx);
        out.push_back(sxx > 1e-12 * scale ? my + sxy / sxx * (x0 - mx) : my);
    }
    return out;
}

Timeline timeline(const DailySeries& series, double span) {
    if (series.downloads.size() != series.cumulative_issues.size()) {
        throw VariableMismatch("downloads and issue series differ in length");
    }
    Timeline out;
    out.package = series.package;
    out.span = span;
    std::size_t clamped = 0;
    const auto issues = daily_new_issues(series, &clamped);
    if (clamped) out.warnings.push_back(std::to_string(clamped) + " negative issue-count steps clamped to 0");

    std::vector<double> xs, ys, all_x;
    for (std::size_t i = 0; i < series.days(); ++i) {
        TimelinePoint pt;
        pt.date = series.start + std::chrono::days{static_cast<long long>(i)};
        pt.downloads = series.downloads[i];
        pt.new_issues = issues[i];
        if (pt.downloads) {
            pt.quality = quality_metric(static_cast<double>(issues[i]), static_cast<double>(*pt.downloads));
        }
        pt.excluded = !pt.downloads || *pt.downloads == 0;
        if (!pt.excluded) {
            xs.push_back(static_cast<double>(i));
            ys.push_back(pt.quality.value);
        }
        all_x.push_back(static_cast<double>(i));
        out.points.push_back(pt);
    }
    if (xs.size() >= kMinTrendDays) {
        const auto trend = loess(xs, ys, span, all_x);
        for (std::size_t i = 0; i < out.points.size(); ++i) out.points[i].trend = trend[i];
        out.trend_available = true;
    } else {
        out.warnings.push_back("fewer than 10 usable days; trend not fitted");
    }
    return out;
}

SignificanceResult screen_significance(const DailySeries& series, bool with_date_control) {
    const auto issues = daily_new_issues(series);
    std::vector<std::size_t> days;
    for (std::size_t i = 0; i < series.days(); ++i) {
        if (series.downloads[i]) days.push_back(i);
    }
    if (days.size() < kMinTrendDays) throw InsufficientRows("significance screening needs at least 10 days");
    const auto n = static_cast<Eigen::Index>(days.size());
    Eigen::MatrixXd x(n, with_date_control ? 2 : 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto i = days[static_cast<std::size_t>(r)];
        x(r, 0) = static_cast<double>(*series.downloads[i]);
        if (with_date_control) x(r, 1) = static_cast<double>(i);
        y(r) = static_cast<double>(issues[i]);
    }
    const auto fit = ols(x, y);
    return {fit.coefficients(1), fit.p_values(1), fit.r2, days.size()};
}

QualityDistribution quality_distribution(const std::vector<std::pair<std::string, std::vector<QualityValue>>>& packages,
                                         int histogram_bins) {
    if (histogram_bins < 1) throw ConfigError("histogram_bins", "must be at least 1");
    QualityDistribution out;
    std::vector<double> medians;
    for (const auto& [name, values] : packages) {
        if (values.empty()) continue;
        QualitySummary s;
        s.package = name;
        std::vector<double> all, finite;
        for (const auto& q : values) {
            if (q.infinite) {
                all.push_back(std::numeric_limits<double>::infinity());
                ++s.infinite_days;
            } else {
                all.push_back(q.value);
                finite.push_back(q.value);
            }
        }
        s.min = *std::min_element(all.begin(), all.end());
        s.median = quantile_type7(all, 0.5);
        s.q90 = finite.empty() ? std::numeric_limits<double>::infinity() : quantile_type7(finite, 0.9);
        if (s.median > 1.0) ++out.median_above_one;
        if (s.min > 1.0) ++out.min_above_one;
        if (std::isfinite(s.median)) medians.push_back(s.median);
        out.packages.push_back(std::move(s));
    }
    std::sort(out.packages.begin(), out.packages.end(), [](const auto& a, const auto& b) { return a.package < b.package; });
    if (!medians.empty()) {
        const double lo = *std::min_element(medians.begin(), medians.end());
        double hi = *std::max_element(medians.begin(), medians.end());
        if (hi == lo) hi = lo + 1.0;
        auto& h = out.median_histogram;
        for (int b = 0; b <= histogram_bins; ++b) h.edges.push_back(lo + (hi - lo) * b / histogram_bins);
        h.counts.assign(static_cast<std::size_t>(histogram_bins), 0);
        for (double m : medians) {
            auto b = static_cast<int>((m - lo) / (hi - lo) * histogram_bins);
            ++h.counts[static_cast<std::size_t>(std::clamp(b, 0, histogram_bins - 1))];
        }
    }
    return out;
}

std::string to_string(TrendDirection d) {
    switch (d) {
        case TrendDirection::increasing: return "increasing";
        case TrendDirection::decreasing: return "decreasing";
        case TrendDirection::flat: return "flat";
    }
    return "flat";
}

TrendDirection direction_of_trend(const std::vector<double>& trend) {
    std::vector<double> finite;
    for (double v : trend) {
        if (std::isfinite(v)) finite.push_back(v);
    }
    if (finite.size() < 2) return TrendDirection::flat;
    const auto [lo, hi] = std::minmax_element(finite.begin(), finite.end());
    // The relative floor keeps rounding noise on a constant trend flat.
    const double eps = std::max(1e-3 * (*hi - *lo), 1e-9 * std::max(std::fabs(*lo), std::fabs(*hi)));
    const double delta = finite.back() - finite.front();
    if (std::fabs(delta) <= eps || delta == 0.0) return TrendDirection::flat;
    return delta > 0.0 ? TrendDirection::increasing : TrendDirection::decreasing;
}

TrendDirection direction_of_trend(const Timeline& tl) {
    std::vector<double> trend;
    for (const auto& p : tl.points) {
        if (p.trend) trend.push_back(*p.trend);
    }
    return direction_of_trend(trend);
}

std::string aggregates_csv(const std::vector<ReleaseAggregate>& releases) {
    std::ostringstream out;
    out << "release,release_date,release_duration,exceptions,new_users,usage_intensity,usage_frequency,zero_users\n";
    for (const auto& r : releases) {
        out << r.release << ',' << r.release_date << ',' << r.release_duration << ',' << r.exceptions << ','
            << r.new_users << ',' << format_double(r.usage_intensity) << ',' << format_double(r.usage_frequency) << ','
            << (r.zero_users ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string timeline_csv(const Timeline& tl) {
    std::ostringstream out;
    out << "date,downloads,new_issues,quality,trend,infinite,excluded\n";
    for (const auto& p : tl.points) {
        out << format_date(p.date) << ',';
        if (p.downloads) out << *p.downloads;
        out << ',' << p.new_issues << ',';
        if (p.downloads && !p.quality.infinite) out << format_double(p.quality.value);
        out << ',';
        if (p.trend) out << format_double(*p.trend);
        out << ',' << (p.quality.infinite ? 1 : 0) << ',' << (p.excluded ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string distribution_csv(const QualityDistribution& dist) {
    auto num = [](double v) { return std::isfinite(v) ? format_double(v) : std::string("inf"); };
    std::ostringstream out;
    out << "package,min,median,q90,infinite_days\n";
    for (const auto& s : dist.packages) {
        out << s.package << ',' << num(s.min) << ',' << num(s.median) << ',' << num(s.q90) << ',' << s.infinite_days
            << '\n';
    }
    return out.str();
}

}  // namespace bnq
