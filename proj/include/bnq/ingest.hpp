#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bnq/dates.hpp"
#include "bnq/quality.hpp"

namespace bnq {

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct HttpResponse {
    int status = 0;  ///< 0 for a transport-level failure
    std::string body;
    std::map<std::string, std::string> headers;  ///< lower-case names

    std::optional<std::string> header(const std::string& name) const;
};

using HttpHeaders = std::map<std::string, std::string>;

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse get(const std::string& url, const HttpHeaders& headers) = 0;
};

/// Live HTTP(S) client.
class LiveTransport final : public Transport {
public:
    explicit LiveTransport(std::chrono::seconds timeout = std::chrono::seconds{30}) : timeout_(timeout) {}
    HttpResponse get(const std::string& url, const HttpHeaders& headers) override;

private:
    std::chrono::seconds timeout_;
};

/// Serves canned responses keyed by exact URL; unknown URLs return 404.
/// Every call is counted.
class FixtureTransport final : public Transport {
public:
    FixtureTransport() = default;
    void add(const std::string& url, HttpResponse response);
    /// Queues several responses for one URL, served in order; the last repeats.
    void add_sequence(const std::string& url, std::vector<HttpResponse> responses);
    /// Loads `index.json` mapping url -> {status, file, headers} from `dir`.
    static std::unique_ptr<FixtureTransport> from_directory(const std::filesystem::path& dir);

    HttpResponse get(const std::string& url, const HttpHeaders& headers) override;
    std::size_t calls() const { return calls_.load(); }
    std::vector<std::string> requested() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::vector<HttpResponse>> responses_;
    std::map<std::string, std::size_t> served_;
    std::vector<std::string> log_;
    std::atomic<std::size_t> calls_{0};
};

/// Response bodies stored under their SHA-256, with index.json mapping the
/// request key to status, selected headers and the body digest. Entries are
/// never overwritten or evicted; writes go through a temporary file and rename.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<HttpResponse> find(const std::string& url) const;
    void store(const std::string& url, const HttpResponse& response);
    std::size_t size() const;
    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    void write_index_locked() const;

    std::filesystem::path dir_;
    mutable std::mutex mutex_;
    nlohmann::json index_;
};

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{1000};
    std::chrono::milliseconds max_delay{60000};
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Cache-first GET with retry on 429, 5xx and transport failures. Without a
/// transport (offline mode) a cache miss throws CacheMiss.
class Fetcher {
public:
    Fetcher(ResponseCache* cache, Transport* transport, RetryPolicy retry = {}, Sleeper sleeper = {});

    /// Returns a 2xx response or throws HttpError / RateLimited / CacheMiss.
    HttpResponse get(const std::string& url, const HttpHeaders& headers = {});
    std::size_t network_calls() const { return network_calls_.load(); }

private:
    ResponseCache* cache_;
    Transport* transport_;
    RetryPolicy retry_;
    Sleeper sleeper_;
    std::atomic<std::size_t> network_calls_{0};
};

inline constexpr int kMaxDownloadWindowDays = 540;

struct DownloadSeries {
    std::string package;
    Day start{};
    std::vector<std::optional<long long>> downloads;  ///< one slot per day; nullopt = gap
    std::vector<Day> gaps;
};

/// Daily downloads for [start, end] via `{base}/downloads/range/{a}:{b}/{package}`,
/// split into windows of at most `window_days`.
DownloadSeries fetch_downloads(Fetcher& fetcher, const std::string& base, const std::string& package, Day start, Day end,
                               int window_days = kMaxDownloadWindowDays);

struct IssueFetchOptions {
    bool include_pull_requests = false;
    std::optional<std::string> token;
};

/// Creation dates (sorted) of all issues of `owner/repo`, following Link rel="next".
/// TruncatedPagination when fewer pages than the advertised rel="last" were read.
std::vector<Day> fetch_issues(Fetcher& fetcher, const std::string& base, const std::string& repo,
                              const IssueFetchOptions& options = {});

/// Parses an RFC 8288 Link header into rel -> url.
std::map<std::string, std::string> parse_link_header(const std::string& header);

DailySeries build_daily_series(const DownloadSeries& downloads, const std::vector<Day>& issue_dates, Day start, Day end);

/// Mean downloads per 30 days over non-gap days.
double monthly_downloads(const DailySeries& series);

/// Packages whose monthly downloads strictly exceed `threshold`.
std::vector<std::string> filter_popular(const std::vector<std::pair<std::string, double>>& monthly,
                                        double threshold = 10000.0);

/// Lines of the form `package=owner/repo`; blank lines and # comments skipped.
std::vector<std::pair<std::string, std::string>> parse_repo_map(std::istream& in);

std::vector<UsageRecord> load_usage_csv(std::istream& in);
std::vector<UsageRecord> load_usage_csv(const std::filesystem::path& path);
void write_usage_csv(const std::vector<UsageRecord>& records, std::ostream& out);

std::string daily_series_csv(const DailySeries& series);
/// Reads the daily_series_csv layout back (date,downloads,cumulative_issues).
DailySeries read_daily_series_csv(std::istream& in, const std::string& package, long long issues_before_start = 0);

}  // namespace bnq
