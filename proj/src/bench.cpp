#include "objauth/bench.hpp"

#include "objauth/client.hpp"
#include "objauth/core.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace objauth::bench {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kFailedTransportShare = 0.10;
constexpr const char* kCsvHeader = "seq,send_unix_ms,done_unix_ms,status,latency_ms,server_auth_ms";

// Rounded to whole microseconds so values survive the CSV round trip
// unchanged.
double to_micros(double ms) {
    return std::round(ms * 1000.0) / 1000.0;
}

std::string fmt(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

// Maps steady-clock instants onto Unix milliseconds from one anchor so
// timestamps stay monotonic within a run.
class UnixAnchor {
public:
    UnixAnchor()
        : steady_(Clock::now()),
          unix_ms_(std::chrono::duration<double, std::milli>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count()) {}

    [[nodiscard]] double to_unix_ms(Clock::time_point t) const {
        return unix_ms_ + std::chrono::duration<double, std::milli>(t - steady_).count();
    }

private:
    Clock::time_point steady_;
    double unix_ms_;
};

class RecordSink {
public:
    void add(RequestRecord r) {
        std::lock_guard lock(mutex_);
        records_.push_back(r);
    }

    std::vector<RequestRecord> take() {
        std::lock_guard lock(mutex_);
        auto out = std::move(records_);
        std::sort(out.begin(), out.end(),
                  [](const RequestRecord& a, const RequestRecord& b) { return a.seq < b.seq; });
        return out;
    }

private:
    std::mutex mutex_;
    std::vector<RequestRecord> records_;
};

RequestRecord to_record(std::uint64_t seq, const CallResult& r, const UnixAnchor& anchor) {
    RequestRecord rec;
    rec.seq = seq;
    rec.send_unix_ms = to_micros(anchor.to_unix_ms(r.sent));
    rec.done_unix_ms = to_micros(anchor.to_unix_ms(r.done));
    rec.status = r.http_status;
    rec.latency_ms = to_micros(r.wall_ms);
    if (r.server_auth_ms) {
        rec.server_auth_ms = to_micros(*r.server_auth_ms);
    }
    return rec;
}

double parse_double(std::string_view text, std::string_view what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw BenchError("bad " + std::string(what) + " value '" + std::string(text) + "'");
    }
    return v;
}

template <typename Int>
Int parse_int(std::string_view text, std::string_view what) {
    Int v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw BenchError("bad " + std::string(what) + " value '" + std::string(text) + "'");
    }
    return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto next = line.find(sep, pos);
        out.push_back(line.substr(pos, next == std::string_view::npos ? line.npos : next - pos));
        if (next == std::string_view::npos) {
            break;
        }
        pos = next + 1;
    }
    return out;
}

} // namespace

std::string_view to_string(Scheme scheme) noexcept {
    return scheme == Scheme::hash ? "hash" : "object";
}

Scheme parse_scheme(std::string_view text) {
    if (text == "hash") {
        return Scheme::hash;
    }
    if (text == "object") {
        return Scheme::object;
    }
    throw InvalidInput("scheme must be 'hash' or 'object'");
}

void BenchConfig::validate() const {
    if (rate.has_value() == clients.has_value()) {
        throw InvalidInput("exactly one of rate or clients must be set");
    }
    if (rate && !(*rate > 0.0)) {
        throw InvalidInput("rate must be positive");
    }
    if (clients && *clients < 1) {
        throw InvalidInput("clients must be at least 1");
    }
    if (!(duration_s > 0.0)) {
        throw InvalidInput("duration must be positive");
    }
    if (object_size < 1) {
        throw InvalidInput("object size must be at least 1 byte");
    }
    if (throttle_bps && !(*throttle_bps > 0.0)) {
        throw InvalidInput("throttle must be positive");
    }
    if (max_requests && *max_requests == 0) {
        throw InvalidInput("max requests must be at least 1");
    }
}

std::string BenchConfig::effective_user_id() const {
    if (!user_id.empty()) {
        return user_id;
    }
    return "bench-" + std::to_string(object_size) + "-" + std::to_string(seed);
}

double compute_throughput(std::span<const RequestRecord> records) {
    if (records.size() < 2) {
        throw BenchError("throughput needs at least two records");
    }
    double first_send = records.front().send_unix_ms;
    double last_done = records.front().done_unix_ms;
    for (const auto& r : records) {
        first_send = std::min(first_send, r.send_unix_ms);
        last_done = std::max(last_done, r.done_unix_ms);
    }
    const double span_s = (last_done - first_send) / 1000.0;
    if (!(span_s > 0.0)) {
        throw BenchError("records span no time");
    }
    return static_cast<double>(records.size()) / span_s;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw BenchError("percentile of an empty set");
    }
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + (values[hi] - values[lo]) * frac;
}

LatencySummary summarize_latency(std::span<const double> latencies_ms) {
    LatencySummary s;
    if (latencies_ms.empty()) {
        return s;
    }
    const std::vector<double> v(latencies_ms.begin(), latencies_ms.end());
    s.mean_ms = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    s.median_ms = percentile(v, 0.5);
    s.p95_ms = percentile(v, 0.95);
    return s;
}

BenchAggregate aggregate(std::span<const RequestRecord> records) {
    BenchAggregate a;
    a.requests = records.size();
    std::vector<RequestRecord> completed;
    std::vector<double> latencies;
    for (const auto& r : records) {
        if (r.status == 0) {
            ++a.transport_errors;
        } else {
            completed.push_back(r);
            latencies.push_back(r.latency_ms);
        }
        if (r.status != 200) {
            ++a.errors;
        }
    }
    a.completed = completed.size();
    if (completed.size() >= 2) {
        try {
            a.throughput_rps = compute_throughput(completed);
        } catch (const BenchError&) {
        }
    }
    a.latency = summarize_latency(latencies);
    a.failed = static_cast<double>(a.transport_errors) >
               kFailedTransportShare * static_cast<double>(a.requests);
    return a;
}

std::vector<double> open_loop_schedule(double rate, double duration_s) {
    if (!(rate > 0.0) || !(duration_s > 0.0)) {
        throw InvalidInput("rate and duration must be positive");
    }
    const auto count = static_cast<std::size_t>(std::ceil(rate * duration_s - 1e-9));
    std::vector<double> offsets(count);
    for (std::size_t i = 0; i < count; ++i) {
        offsets[i] = static_cast<double>(i) / rate;
    }
    return offsets;
}

std::string make_object(std::size_t size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::string out(size, '\0');
    for (std::size_t i = 0; i < size; i += 8) {
        const std::uint64_t word = rng();
        for (std::size_t k = 0; k < 8 && i + k < size; ++k) {
            out[i + k] = static_cast<char>((word >> (8 * k)) & 0xFF);
        }
    }
    return out;
}

void write_report_csv(std::ostream& out, const BenchReport& report) {
    // The footer describes the rows as written, so a reader recomputing
    // from them gets the same figures.
    std::vector<RequestRecord> rows = report.records;
    for (auto& r : rows) {
        r.send_unix_ms = to_micros(r.send_unix_ms);
        r.done_unix_ms = to_micros(r.done_unix_ms);
        r.latency_ms = to_micros(r.latency_ms);
        if (r.server_auth_ms) {
            r.server_auth_ms = to_micros(*r.server_auth_ms);
        }
    }
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.seq << ',' << fmt(r.send_unix_ms, 3) << ',' << fmt(r.done_unix_ms, 3) << ','
            << r.status << ',' << fmt(r.latency_ms, 3) << ','
            << (r.server_auth_ms ? fmt(*r.server_auth_ms, 3) : std::string()) << '\n';
    }
    const auto a = aggregate(rows);
    out << "# requests=" << a.requests << '\n';
    out << "# completed=" << a.completed << '\n';
    out << "# errors=" << a.errors << '\n';
    out << "# transport_errors=" << a.transport_errors << '\n';
    out << "# throughput_rps=" << (a.throughput_rps ? fmt(*a.throughput_rps, 6) : "nan") << '\n';
    out << "# latency_mean_ms=" << fmt(a.latency.mean_ms, 6) << '\n';
    out << "# latency_median_ms=" << fmt(a.latency.median_ms, 6) << '\n';
    out << "# latency_p95_ms=" << fmt(a.latency.p95_ms, 6) << '\n';
    out << "# failed=" << (a.failed ? "true" : "false") << '\n';
}

void write_report_csv(const std::filesystem::path& path, const BenchReport& report) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write report " + path.string());
    }
    write_report_csv(out, report);
    out.flush();
    if (!out) {
        throw IoError("write failed on " + path.string());
    }
}

ParsedReport read_report_csv(std::istream& in) {
    ParsedReport parsed;
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw BenchError("missing or unexpected report header");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw BenchError("footer line " + std::to_string(line_no) + " lacks '='");
            }
            std::string key = line.substr(1, eq - 1);
            key.erase(0, key.find_first_not_of(' '));
            parsed.footer[key] = line.substr(eq + 1);
            continue;
        }
        const auto cols = split(line, ',');
        if (cols.size() != 6) {
            throw BenchError("row " + std::to_string(line_no) + " has " +
                             std::to_string(cols.size()) + " columns");
        }
        RequestRecord r;
        r.seq = parse_int<std::uint64_t>(cols[0], "seq");
        r.send_unix_ms = parse_double(cols[1], "send_unix_ms");
        r.done_unix_ms = parse_double(cols[2], "done_unix_ms");
        r.status = parse_int<int>(cols[3], "status");
        r.latency_ms = parse_double(cols[4], "latency_ms");
        if (!cols[5].empty()) {
            r.server_auth_ms = parse_double(cols[5], "server_auth_ms");
        }
        parsed.report.records.push_back(r);
    }
    parsed.report.aggregate = aggregate(parsed.report.records);
    return parsed;
}

BenchReport run_load(const BenchConfig& config) {
    config.validate();
    const std::string user = config.effective_user_id();
    const std::string object = make_object(config.object_size, config.seed);
    // The hash scheme sends the stored text form of the object; the client
    // digests once, as a user who kept the hex would.
    const std::string password = digest_to_hex(object_digest(object));

    ClientConfig base;
    base.server_url = config.server_url;
    {
        AuthClient setup(base);
        if (!setup.healthy()) {
            throw BenchError("server unreachable at " + config.server_url);
        }
        // Probe before uploading so a rerun skips the sign-up transfer.
        if (!setup.login_hash(user, password).accepted()) {
            const auto signup = setup.signup(user, object);
            if (signup.http_status == 409) {
                throw BenchError("account '" + user + "' exists with a different object");
            }
            if (signup.http_status != 200) {
                throw BenchError("bench account sign-up failed with HTTP " +
                                 std::to_string(signup.http_status));
            }
        }
    }

    std::shared_ptr<UploadThrottle> throttle;
    if (config.throttle_bps) {
        throttle = std::make_shared<UploadThrottle>(*config.throttle_bps);
    }

    const auto issue = [&](AuthClient& client) {
        return config.scheme == Scheme::hash ? client.login_hash(user, password)
                                             : client.login_object(user, object);
    };

    RecordSink sink;
    const UnixAnchor anchor;
    std::atomic<std::uint64_t> next_seq{0};
    const auto start = Clock::now();
    const auto deadline =
        start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(config.duration_s));

    if (config.clients) {
        std::vector<std::thread> workers;
        for (int c = 0; c < *config.clients; ++c) {
            workers.emplace_back([&] {
                AuthClient client(base, throttle);
                (void)client.healthy(); // opens the keep-alive connection
                while (Clock::now() < deadline) {
                    const auto seq = next_seq.fetch_add(1);
                    if (config.max_requests && seq >= *config.max_requests) {
                        break;
                    }
                    sink.add(to_record(seq, issue(client), anchor));
                }
            });
        }
        for (auto& w : workers) {
            w.join();
        }
    } else {
        const auto offsets = open_loop_schedule(*config.rate, config.duration_s);
        std::vector<std::thread> inflight;
        inflight.reserve(offsets.size());
        for (std::size_t i = 0; i < offsets.size(); ++i) {
            std::this_thread::sleep_until(
                start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(offsets[i])));
            inflight.emplace_back([&, seq = static_cast<std::uint64_t>(i)] {
                AuthClient client(base, throttle);
                sink.add(to_record(seq, issue(client), anchor));
            });
        }
        for (auto& t : inflight) {
            t.join();
        }
    }

    BenchReport report;
    report.records = sink.take();
    report.aggregate = aggregate(report.records);
    return report;
}

std::vector<SizeSweepRow> sweep_object_size(std::span<const std::size_t> sizes, Scheme scheme,
                                            const SweepConfig& config) {
    if (sizes.empty()) {
        throw InvalidInput("sweep needs at least one size");
    }
    if (!std::is_sorted(sizes.begin(), sizes.end())) {
        throw InvalidInput("sweep sizes must be ascending");
    }
    std::vector<SizeSweepRow> rows;
    for (const auto size : sizes) {
        BenchConfig cfg;
        cfg.scheme = scheme;
        cfg.clients = 1;
        cfg.duration_s = 24.0 * 3600.0;
        cfg.max_requests = config.requests_per_size;
        cfg.object_size = size;
        cfg.seed = size;
        cfg.server_url = config.server_url;
        cfg.throttle_bps = config.throttle_bps;
        cfg.user_id = config.user_prefix + "-" + std::string(to_string(scheme)) + "-" +
                      std::to_string(size);
        const auto report = run_load(cfg);
        if (report.aggregate.errors > 0) {
            throw BenchError("sweep run for size " + std::to_string(size) + " had " +
                             std::to_string(report.aggregate.errors) + " failed requests");
        }
        rows.push_back({size, report.aggregate.latency.mean_ms, report.aggregate.completed});
    }
    return rows;
}

void write_size_sweep_csv(std::ostream& out, std::span<const SizeSweepRow> rows) {
    out << "size_bytes,mean_latency_ms,requests\n";
    for (const auto& r : rows) {
        out << r.size << ',' << fmt(r.mean_latency_ms, 3) << ',' << r.requests << '\n';
    }
}

std::vector<Fixture> content_class_fixtures(std::size_t size, std::uint64_t seed) {
    static constexpr std::string_view kWords[] = {
        "object", "password", "media",  "server", "salt",   "digest", "the",   "a",
        "login",  "photo",    "secret", "song",   "upload", "value",  "client", "of"};
    std::mt19937_64 rng(seed);

    std::string text;
    text.reserve(size + 16);
    while (text.size() < size) {
        text += kWords[rng() % std::size(kWords)];
        text += (rng() % 12 == 0) ? ".\n" : " ";
    }
    text.resize(size);

    std::string structured;
    structured.reserve(size + 128);
    for (std::uint64_t i = 0; structured.size() < size; ++i) {
        structured += R"({"id":)" + std::to_string(i) + R"(,"name":"item)" + std::to_string(rng() % 1000) +
                      R"(","price":)" + std::to_string(rng() % 100000) + "}\n";
    }
    structured.resize(size);

    return {
        {"random", make_object(size, seed)},
        {"text", std::move(text)},
        {"structured", std::move(structured)},
        {"zeros", std::string(size, '\0')},
    };
}

std::vector<FileTypeRow> sweep_file_type(std::span<const Fixture> fixtures, std::size_t iterations) {
    if (iterations == 0) {
        throw InvalidInput("iterations must be at least 1");
    }
    std::vector<std::vector<double>> samples(fixtures.size());
    for (std::size_t it = 0; it < iterations; ++it) {
        for (std::size_t f = 0; f < fixtures.size(); ++f) {
            const auto t0 = Clock::now();
            const Digest d = object_digest(fixtures[f].content);
            const auto t1 = Clock::now();
            (void)d;
            samples[f].push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
    }
    std::vector<FileTypeRow> rows;
    for (std::size_t f = 0; f < fixtures.size(); ++f) {
        const auto& s = samples[f];
        const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
        double var = 0.0;
        for (const double x : s) {
            var += (x - mean) * (x - mean);
        }
        var = s.size() > 1 ? var / static_cast<double>(s.size() - 1) : 0.0;
        rows.push_back({fixtures[f].label, fixtures[f].content.size(), mean, std::sqrt(var), s.size()});
    }
    return rows;
}

void write_file_type_csv(std::ostream& out, std::span<const FileTypeRow> rows) {
    out << "type,size_bytes,mean_ms,stddev_ms,iterations\n";
    for (const auto& r : rows) {
        out << r.label << ',' << r.size << ',' << fmt(r.mean_ms, 6) << ',' << fmt(r.stddev_ms, 6)
            << ',' << r.iterations << '\n';
    }
}

} // namespace objauth::bench
