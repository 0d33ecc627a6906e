#include "bnq/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "bnq/errors.hpp"

// After Eigen: the resolver headers pulled in here define `_res`.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace bnq {

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

std::optional<std::string> HttpResponse::header(const std::string& name) const {
    const auto it = headers.find(name);
    if (it == headers.end()) return std::nullopt;
    return it->second;
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

void write_atomically(const std::filesystem::path& path, std::string_view bytes) {
    static std::atomic<unsigned> counter{0};
    auto tmp = path;
    tmp += ".tmp" + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

HttpResponse LiveTransport::get(const std::string& url, const HttpHeaders& headers) {
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, url_re)) throw Error("unsupported URL '" + url + "'");
    httplib::Client client(m[1].str());
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_follow_location(true);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    h.emplace("User-Agent", "bnq");
    const std::string path = m[2].matched ? m[2].str() : "/";
    auto res = client.Get(path, h);
    HttpResponse out;
    if (!res) return out;
    out.status = res->status;
    out.body = res->body;
    for (const auto& [k, v] : res->headers) out.headers[lower(k)] = v;
    return out;
}

void FixtureTransport::add(const std::string& url, HttpResponse response) {
    add_sequence(url, {std::move(response)});
}

void FixtureTransport::add_sequence(const std::string& url, std::vector<HttpResponse> responses) {
    std::lock_guard lock(mutex_);
    for (auto& r : responses) {
        std::map<std::string, std::string> h;
        for (auto& [k, v] : r.headers) h[lower(k)] = v;
        r.headers = std::move(h);
    }
    responses_[url] = std::move(responses);
}

std::unique_ptr<FixtureTransport> FixtureTransport::from_directory(const std::filesystem::path& dir) {
    auto t = std::make_unique<FixtureTransport>();
    nlohmann::json index;
    try {
        index = nlohmann::json::parse(read_file(dir / "index.json"));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaMismatch("fixture index: " + std::string(e.what()));
    }
    for (const auto& [url, entry] : index.items()) {
        HttpResponse r;
        r.status = entry.value("status", 200);
        if (entry.contains("file")) r.body = read_file(dir / entry["file"].get<std::string>());
        if (entry.contains("headers")) {
            for (const auto& [k, v] : entry["headers"].items()) r.headers[k] = v.get<std::string>();
        }
        t->add(url, std::move(r));
    }
    return t;
}

HttpResponse FixtureTransport::get(const std::string& url, const HttpHeaders&) {
    ++calls_;
    std::lock_guard lock(mutex_);
    log_.push_back(url);
    const auto it = responses_.find(url);
    if (it == responses_.end()) return HttpResponse{404, R"({"error":"not found"})", {}};
    auto& served = served_[url];
    const auto& seq = it->second;
    const auto& r = seq[std::min(served, seq.size() - 1)];
    ++served;
    return r;
}

std::vector<std::string> FixtureTransport::requested() const {
    std::lock_guard lock(mutex_);
    return log_;
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)), index_(nlohmann::json::object()) {
    std::filesystem::create_directories(dir_ / "objects");
    const auto path = dir_ / "index.json";
    if (std::filesystem::exists(path)) {
        try {
            index_ = nlohmann::json::parse(read_file(path));
        } catch (const nlohmann::json::exception& e) {
            throw SchemaMismatch("cache index '" + path.string() + "': " + e.what());
        }
    }
}

std::optional<HttpResponse> ResponseCache::find(const std::string& url) const {
    std::lock_guard lock(mutex_);
    const auto key = sha256_hex(url);
    if (!index_.contains(key)) return std::nullopt;
    const auto& entry = index_[key];
    HttpResponse r;
    r.status = entry.at("status").get<int>();
    r.body = read_file(dir_ / "objects" / entry.at("body").get<std::string>());
    for (const auto& [k, v] : entry.at("headers").items()) r.headers[k] = v.get<std::string>();
    return r;
}

void ResponseCache::store(const std::string& url, const HttpResponse& response) {
    const auto digest = sha256_hex(response.body);
    const auto object = dir_ / "objects" / digest;
    std::lock_guard lock(mutex_);
    const auto key = sha256_hex(url);
    if (index_.contains(key)) return;
    if (!std::filesystem::exists(object)) write_atomically(object, response.body);
    nlohmann::json headers = nlohmann::json::object();
    for (const auto& [k, v] : response.headers) headers[k] = v;
    const auto now = std::chrono::duration_cast<std::chrono::seconds>(
        std::chrono::system_clock::now().time_since_epoch()).count();
    index_[key] = {{"url", url}, {"status", response.status}, {"body", digest}, {"headers", headers},
                   {"fetched_at", now}};
    write_index_locked();
}

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mutex_);
    return index_.size();
}

void ResponseCache::write_index_locked() const {
    write_atomically(dir_ / "index.json", index_.dump(2));
}

Fetcher::Fetcher(ResponseCache* cache, Transport* transport, RetryPolicy retry, Sleeper sleeper)
    : cache_(cache), transport_(transport), retry_(retry), sleeper_(std::move(sleeper)) {
    if (retry_.max_attempts < 1) throw ConfigError("retry.max_attempts", "must be at least 1");
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

HttpResponse Fetcher::get(const std::string& url, const HttpHeaders& headers) {
    if (cache_) {
        if (auto hit = cache_->find(url)) {
            if (hit->status >= 200 && hit->status < 300) return *hit;
            throw HttpError(hit->status, "HTTP " + std::to_string(hit->status) + " for " + url + " (cached)");
        }
    }
    if (!transport_) throw CacheMiss("no cached response for " + url + "; rerun with live fetching enabled");
    for (int attempt = 1;; ++attempt) {
        const HttpResponse r = transport_->get(url, headers);
        ++network_calls_;
        if (r.status >= 200 && r.status < 300) {
            if (cache_) cache_->store(url, r);
            return r;
        }
        const bool limited = r.status == 429 || (r.status == 403 && r.header("x-ratelimit-remaining") == "0");
        const bool retryable = limited || r.status == 0 || r.status >= 500;
        if (!retryable) {
            if (cache_) cache_->store(url, r);
            throw HttpError(r.status, "HTTP " + std::to_string(r.status) + " for " + url);
        }
        if (attempt >= retry_.max_attempts) {
            if (limited) throw RateLimited("rate limited on " + url + " after " + std::to_string(attempt) + " attempts");
            throw HttpError(r.status, "HTTP " + std::to_string(r.status) + " for " + url + " after " +
                                          std::to_string(attempt) + " attempts");
        }
        std::chrono::milliseconds delay = std::min<std::chrono::milliseconds>(
            retry_.base_delay * (1LL << std::min(attempt - 1, 20)), retry_.max_delay);
        if (const auto hint = r.header("retry-after")) {
            long long seconds = 0;
            const auto [ptr, ec] = std::from_chars(hint->data(), hint->data() + hint->size(), seconds);
            if (ec == std::errc{} && seconds >= 0) delay = std::chrono::seconds{seconds};
        }
        sleeper_(delay);
    }
}

DownloadSeries fetch_downloads(Fetcher& fetcher, const std::string& base, const std::string& package, Day start, Day end,
                               int window_days) {
    if (end < start) throw ConfigError("range", "start must not be after end");
    if (window_days < 1) throw ConfigError("window_days", "must be positive");
    const auto days = static_cast<std::size_t>((end - start).count() + 1);
    DownloadSeries out;
    out.package = package;
    out.start = start;
    out.downloads.assign(days, std::nullopt);
    for (Day a = start; a <= end; a += std::chrono::days{window_days}) {
        const Day b = std::min(end, a + std::chrono::days{window_days - 1});
        const auto url = base + "/downloads/range/" + format_date(a) + ":" + format_date(b) + "/" + package;
        const auto response = fetcher.get(url);
        try {
            const auto j = nlohmann::json::parse(response.body);
            for (const auto& entry : j.at("downloads")) {
                const Day d = parse_date(entry.at("day").get<std::string>());
                if (d < start || d > end) continue;
                out.downloads[static_cast<std::size_t>((d - start).count())] = entry.at("downloads").get<long long>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw SchemaMismatch("downloads payload for " + package + ": " + e.what());
        }
    }
    for (std::size_t i = 0; i < days; ++i) {
        if (!out.downloads[i]) out.gaps.push_back(start + std::chrono::days{static_cast<long long>(i)});
    }
    return out;
}

std::map<std::string, std::string> parse_link_header(const std::string& header) {
    static const std::regex part(R"re(<([^>]*)>\s*;\s*rel="?([^",;]+)"?)re");
    std::map<std::string, std::string> out;
    for (auto it = std::sregex_iterator(header.begin(), header.end(), part); it != std::sregex_iterator(); ++it) {
        out[(*it)[2].str()] = (*it)[1].str();
    }
    return out;
}

namespace {

std::optional<int> page_number(const std::string& url) {
    static const std::regex page_re(R"([?&]page=(\d+))");
    std::smatch m;
    if (!std::regex_search(url, m, page_re)) return std::nullopt;
    return std::stoi(m[1].str());
}

}  // namespace

std::vector<Day> fetch_issues(Fetcher& fetcher, const std::string& base, const std::string& repo,
                              const IssueFetchOptions& options) {
    HttpHeaders headers{{"Accept", "application/vnd.github+json"}};
    if (options.token) headers["Authorization"] = "Bearer " + *options.token;
    std::string url = base + "/repos/" + repo + "/issues?state=all&per_page=100&page=1";
    std::vector<Day> dates;
    std::set<std::string> seen;
    int pages = 0;
    int last = 0;
    while (!url.empty()) {
        if (!seen.insert(url).second) throw TruncatedPagination("pagination loop at " + url);
        const auto response = fetcher.get(url, headers);
        ++pages;
        try {
            const auto j = nlohmann::json::parse(response.body);
            if (!j.is_array()) throw SchemaMismatch("issues payload for " + repo + " is not an array");
            for (const auto& issue : j) {
                if (!options.include_pull_requests && issue.contains("pull_request")) continue;
                dates.push_back(parse_date(issue.at("created_at").get<std::string>()));
            }
        } catch (const nlohmann::json::exception& e) {
            throw SchemaMismatch("issues payload for " + repo + ": " + e.what());
        }
        url.clear();
        if (const auto link = response.header("link")) {
            const auto rels = parse_link_header(*link);
            if (const auto it = rels.find("last"); it != rels.end()) last = std::max(last, page_number(it->second).value_or(0));
            if (const auto it = rels.find("next"); it != rels.end()) url = it->second;
        }
    }
    if (pages < last) {
        throw TruncatedPagination("read " + std::to_string(pages) + " of " + std::to_string(last) + " pages for " + repo);
    }
    std::sort(dates.begin(), dates.end());
    return dates;
}

DailySeries build_daily_series(const DownloadSeries& downloads, const std::vector<Day>& issue_dates, Day start, Day end) {
    if (end < start) throw ConfigError("range", "start must not be after end");
    DailySeries s;
    s.package = downloads.package;
    s.start = start;
    const auto days = static_cast<std::size_t>((end - start).count() + 1);
    s.downloads.assign(days, std::nullopt);
    for (std::size_t i = 0; i < days; ++i) {
        const auto offset = (start - downloads.start).count() + static_cast<long long>(i);
        if (offset >= 0 && offset < static_cast<long long>(downloads.downloads.size())) {
            s.downloads[i] = downloads.downloads[static_cast<std::size_t>(offset)];
        }
    }
    std::vector<Day> sorted = issue_dates;
    std::sort(sorted.begin(), sorted.end());
    s.issues_before_start = std::lower_bound(sorted.begin(), sorted.end(), start) - sorted.begin();
    s.cumulative_issues.resize(days);
    for (std::size_t i = 0; i < days; ++i) {
        const Day d = start + std::chrono::days{static_cast<long long>(i)};
        s.cumulative_issues[i] = std::upper_bound(sorted.begin(), sorted.end(), d) - sorted.begin();
    }
    return s;
}

double monthly_downloads(const DailySeries& series) {
    long long total = 0;
    std::size_t days = 0;
    for (const auto& d : series.downloads) {
        if (!d) continue;
        total += *d;
        ++days;
    }
    return days ? 30.0 * static_cast<double>(total) / static_cast<double>(days) : 0.0;
}

std::vector<std::string> filter_popular(const std::vector<std::pair<std::string, double>>& monthly, double threshold) {
    std::vector<std::string> out;
    for (const auto& [name, value] : monthly) {
        if (value > threshold) out.push_back(name);
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> parse_repo_map(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0 || line.find('/', eq) == std::string::npos) {
            throw ParseError(number, "expected package=owner/repo");
        }
        out.emplace_back(line.substr(first, eq - first), line.substr(eq + 1));
    }
    return out;
}

namespace {

constexpr const char* kUsageHeader = "date,release,new_users,users,new_visits,visits,time_on_site,exceptions";

long long parse_count(const std::string& text, std::size_t line, const char* field) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError(line, std::string("unparseable ") + field + " '" + text + "'");
    }
    if (v < 0) throw ParseError(line, std::string("negative ") + field);
    return v;
}

}  // namespace

std::vector<UsageRecord> load_usage_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaMismatch("usage CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line != kUsageHeader) throw SchemaMismatch(std::string("usage CSV header must be '") + kUsageHeader + "'");
    std::vector<UsageRecord> out;
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 8) throw ParseError(number, "expected 8 fields, got " + std::to_string(f.size()));
        UsageRecord r;
        try {
            r.date = parse_date(f[0]);
        } catch (const ParseError& e) {
            throw ParseError(number, e.what());
        }
        r.release = f[1];
        if (r.release.empty()) throw ParseError(number, "empty release");
        r.new_users = parse_count(f[2], number, "new_users");
        r.users = parse_count(f[3], number, "users");
        r.new_visits = parse_count(f[4], number, "new_visits");
        r.visits = parse_count(f[5], number, "visits");
        const auto [ptr, ec] = std::from_chars(f[6].data(), f[6].data() + f[6].size(), r.time_on_site);
        if (ec != std::errc{} || ptr != f[6].data() + f[6].size() || !std::isfinite(r.time_on_site)) {
            throw ParseError(number, "unparseable time_on_site '" + f[6] + "'");
        }
        if (r.time_on_site < 0.0) throw ParseError(number, "negative time_on_site");
        r.exceptions = parse_count(f[7], number, "exceptions");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<UsageRecord> load_usage_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    return load_usage_csv(in);
}

void write_usage_csv(const std::vector<UsageRecord>& records, std::ostream& out) {
    out << kUsageHeader << '\n';
    for (const auto& r : records) {
        out << format_date(r.date) << ',' << r.release << ',' << r.new_users << ',' << r.users << ',' << r.new_visits
            << ',' << r.visits << ',' << format_double(r.time_on_site) << ',' << r.exceptions << '\n';
    }
}

std::string daily_series_csv(const DailySeries& series) {
    std::ostringstream out;
    out << "date,downloads,cumulative_issues\n";
    for (std::size_t i = 0; i < series.days(); ++i) {
        out << format_date(series.start + std::chrono::days{static_cast<long long>(i)}) << ',';
        if (series.downloads[i]) out << *series.downloads[i];
        out << ',' << series.cumulative_issues[i] << '\n';
    }
    return out.str();
}

DailySeries read_daily_series_csv(std::istream& in, const std::string& package, long long issues_before_start) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaMismatch("daily series CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "date,downloads,cumulative_issues") throw SchemaMismatch("daily series header mismatch");
    DailySeries s;
    s.package = package;
    s.issues_before_start = issues_before_start;
    std::size_t number = 1;
    std::optional<Day> previous;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 3) throw ParseError(number, "expected 3 fields");
        Day d;
        try {
            d = parse_date(f[0]);
        } catch (const ParseError& e) {
            throw ParseError(number, e.what());
        }
        if (!previous) {
            s.start = d;
        } else if (d != *previous + std::chrono::days{1}) {
            throw ParseError(number, "dates must be consecutive");
        }
        previous = d;
        s.downloads.push_back(f[1].empty() ? std::nullopt : std::optional<long long>(parse_count(f[1], number, "downloads")));
        s.cumulative_issues.push_back(parse_count(f[2], number, "cumulative_issues"));
    }
    return s;
}

}  // namespace bnq
