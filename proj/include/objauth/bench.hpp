#pragma once

// Load generation and reporting for login benchmarks.
//
// Throughput follows the first-to-last definition: completed requests
// divided by (completion of the last request - send of the first). The two
// endpoints are deliberately mixed; see compute_throughput().

#include "objauth/error.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace objauth::bench {

class BenchError : public Error {
public:
    using Error::Error;
};

enum class Scheme { hash, object };

[[nodiscard]] std::string_view to_string(Scheme scheme) noexcept;
/// Accepts "hash" or "object". Throws InvalidInput.
[[nodiscard]] Scheme parse_scheme(std::string_view text);

struct BenchConfig {
    Scheme scheme = Scheme::hash;
    /// Open loop: requests per second, issued regardless of completions.
    std::optional<double> rate;
    /// Closed loop: number of clients each sending back-to-back.
    std::optional<int> clients;
    double duration_s = 10.0;
    /// Closed loop only: stop after this many requests in total.
    std::optional<std::size_t> max_requests;
    std::size_t object_size = 1000;
    std::string server_url = "http://127.0.0.1:8080";
    /// Shared client uplink, bytes per second.
    std::optional<double> throttle_bps;
    /// Defaults to "bench-<size>-<seed>".
    std::string user_id;
    std::uint64_t seed = 1;

    /// Throws InvalidInput unless exactly one of rate/clients is set,
    /// duration > 0 and object size >= 1.
    void validate() const;
    [[nodiscard]] std::string effective_user_id() const;
};

struct RequestRecord {
    std::uint64_t seq = 0;
    double send_unix_ms = 0.0;
    double done_unix_ms = 0.0;
    int status = 0; // HTTP status, 0 for a transport error
    double latency_ms = 0.0;
    std::optional<double> server_auth_ms;

    friend bool operator==(const RequestRecord&, const RequestRecord&) = default;
};

struct LatencySummary {
    double mean_ms = 0.0;
    double median_ms = 0.0;
    double p95_ms = 0.0;
};

struct BenchAggregate {
    std::size_t requests = 0;
    std::size_t completed = 0;        // a response arrived
    std::size_t errors = 0;           // transport errors plus non-200 statuses
    std::size_t transport_errors = 0;
    std::optional<double> throughput_rps;
    LatencySummary latency;
    bool failed = false; // more than 10% transport errors
};

struct BenchReport {
    std::vector<RequestRecord> records;
    BenchAggregate aggregate;
};

/// N / (max done - min send) over `records`. Pure. Throws BenchError for
/// fewer than two records or a non-positive span.
[[nodiscard]] double compute_throughput(std::span<const RequestRecord> records);

/// Linear-interpolated percentile, `q` in [0, 1]. Throws BenchError when
/// `values` is empty.
[[nodiscard]] double percentile(std::vector<double> values, double q);

[[nodiscard]] LatencySummary summarize_latency(std::span<const double> latencies_ms);

/// Recomputes every aggregate from the per-request rows.
[[nodiscard]] BenchAggregate aggregate(std::span<const RequestRecord> records);

/// Offsets (seconds from start) at which an open-loop run sends.
[[nodiscard]] std::vector<double> open_loop_schedule(double rate, double duration_s);

/// Deterministic pseudo-random object contents.
[[nodiscard]] std::string make_object(std::size_t size, std::uint64_t seed);

/// A report read back from CSV: rows, the aggregate recomputed from those
/// rows, and the footer values exactly as written.
struct ParsedReport {
    BenchReport report;
    std::map<std::string, std::string> footer;
};

/// Header row, one row per request, then "# key=value" aggregate lines.
void write_report_csv(std::ostream& out, const BenchReport& report);
void write_report_csv(const std::filesystem::path& path, const BenchReport& report);
/// Throws BenchError on a malformed header or row.
[[nodiscard]] ParsedReport read_report_csv(std::istream& in);

/// Runs one load phase against a live server. Signs the bench account up
/// unless it already accepts the bench object. Throws BenchError if the
/// server is unreachable at start or the account holds another object.
[[nodiscard]] BenchReport run_load(const BenchConfig& config);

struct SizeSweepRow {
    std::size_t size = 0;
    double mean_latency_ms = 0.0;
    std::size_t requests = 0;
};

struct SweepConfig {
    std::string server_url = "http://127.0.0.1:8080";
    std::size_t requests_per_size = 20;
    std::optional<double> throttle_bps;
    /// Accounts are named "<prefix>-<scheme>-<size>".
    std::string user_prefix = "sweep";
};

/// One closed-loop single-client run per size with an object seeded by its
/// size. Throws InvalidInput unless `sizes` is non-empty and ascending.
[[nodiscard]] std::vector<SizeSweepRow> sweep_object_size(std::span<const std::size_t> sizes,
                                                          Scheme scheme, const SweepConfig& config);
void write_size_sweep_csv(std::ostream& out, std::span<const SizeSweepRow> rows);

struct Fixture {
    std::string label;
    std::string content;
};

struct FileTypeRow {
    std::string label;
    std::size_t size = 0;
    double mean_ms = 0.0;
    double stddev_ms = 0.0;
    std::size_t iterations = 0;
};

/// Equal-size fixtures of different content classes: random bytes, ASCII
/// prose, structured records, and a run of zeros.
[[nodiscard]] std::vector<Fixture> content_class_fixtures(std::size_t size, std::uint64_t seed);

/// Times object_digest over each fixture. Iterations are interleaved
/// round-robin so clock drift hits every fixture alike.
[[nodiscard]] std::vector<FileTypeRow> sweep_file_type(std::span<const Fixture> fixtures,
                                                       std::size_t iterations = 100);
void write_file_type_csv(std::ostream& out, std::span<const FileTypeRow> rows);

} // namespace objauth::bench
