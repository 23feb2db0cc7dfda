// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Thresholds are fixed here and never scaled at runtime.

#include "objauth/bench.hpp"
#include "objauth/client.hpp"
#include "objauth/core.hpp"
#include "objauth/server.hpp"

#include "support/reference_sha256.hpp"
#include "support/test_env.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace objauth;
using objauth::testing::LiveServer;
using objauth::testing::TempDir;
using Clock = std::chrono::steady_clock;

namespace {

// Digest correctness.
constexpr int kRandomDigestInputs = 50;
constexpr double kDigestBudgetS = 1.0;

// Scheme equivalence.
constexpr int kEquivalencePairs = 500;
constexpr double kEquivalenceBudgetS = 30.0;

// Durability.
constexpr int kDurableAccounts = 1000;
constexpr double kDurabilityBudgetS = 60.0;

// Throughput formula.
constexpr double kThroughputDecimals = 1e-3;

// Cost ordering: 0.22 Mbps is 27,500 bytes/s; 1,000 KB objects.
constexpr double kSlowLinkBps = 0.22e6 / 8.0;
constexpr std::size_t kCostObjectBytes = 1'000'000;
constexpr int kCostClients = 2;
constexpr double kObjectRunS = 60.0;
constexpr double kHashRunS = 20.0;
constexpr double kMinCostRatio = 5.0;
constexpr double kCostBudgetS = 2 * 60.0;

// Latency trends.
constexpr std::size_t kTrendSizes[] = {10'000, 100'000, 1'000'000, 10'000'000};
// Each hash login is tens of microseconds on loopback, so host drift
// between consecutive per-size runs rivals any size effect. The hash sweep
// is repeated in rounds and pooled so drift lands on every size alike.
constexpr std::size_t kHashTrendRounds = 10;
constexpr std::size_t kHashTrendRequests = 200;
constexpr std::size_t kObjectTrendRequests = 5;
constexpr double kTrendLinkBps = 8'000'000.0;
constexpr double kMaxHashFlatRatio = 1.5;
constexpr double kTrendBudgetS = 300.0;

// File-type independence.
constexpr std::size_t kFileTypeBytes = 1'000'000;
constexpr std::size_t kFileTypeIterations = 100;
constexpr double kFileTypeSpread = 0.20;

// Hash time.
constexpr std::size_t kHashTimeBytes = 1'000'000;
constexpr int kHashTimeRuns = 10;
constexpr double kHashTimeLimitMs = 100.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

Outcome digest_correctness() {
    const auto t0 = Clock::now();
    int mismatches = 0;
    if (digest_to_hex(object_digest(std::string_view{})) !=
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855") {
        ++mismatches;
    }
    if (digest_to_hex(object_digest(std::string_view("abc"))) !=
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad") {
        ++mismatches;
    }
    std::mt19937_64 rng(2024);
    for (int i = 0; i < kRandomDigestInputs; ++i) {
        const auto input = objauth::testing::random_bytes(rng, rng() % 100'000);
        if (digest_to_hex(object_digest(input)) != objauth::testing::reference_sha256_hex(input)) {
            ++mismatches;
        }
    }
    const double elapsed = seconds_since(t0);
    return {mismatches == 0 && elapsed < kDigestBudgetS,
            std::to_string(mismatches) + " mismatches over 2 vectors + " + std::to_string(kRandomDigestInputs) +
                " random inputs, " + fmt("%.3f s", elapsed)};
}

Outcome scheme_equivalence() {
    LiveServer live;
    ClientConfig cfg;
    cfg.server_url = live.url();
    AuthClient client(cfg);
    std::mt19937_64 rng(500);
    const auto t0 = Clock::now();
    int disagreements = 0;
    for (int i = 0; i < kEquivalencePairs; ++i) {
        const std::string user = "eq-" + std::to_string(i);
        const auto object = objauth::testing::random_bytes(rng, 1 + rng() % 8192);
        const auto hex = digest_to_hex(object_digest(object));
        if (!client.signup(user, object).accepted()) {
            ++disagreements;
            continue;
        }
        const bool by_object = client.login_object(user, object).accepted();
        const bool by_hash = client.login_hash(user, hex).accepted();
        auto bad_object = object;
        bad_object[rng() % bad_object.size()] ^= static_cast<char>(1 + rng() % 255);
        auto bad_hex = hex;
        const auto pos = rng() % bad_hex.size();
        bad_hex[pos] = bad_hex[pos] == '0' ? '1' : '0';
        const auto rej_object = client.login_object(user, bad_object);
        const auto rej_hash = client.login_hash(user, bad_hex);
        if (!by_object || !by_hash || rej_object.http_status != 401 || rej_hash.http_status != 401) {
            ++disagreements;
        }
    }
    const double elapsed = seconds_since(t0);
    return {disagreements == 0 && elapsed < kEquivalenceBudgetS,
            std::to_string(disagreements) + " disagreements over " + std::to_string(kEquivalencePairs) +
                " pairs, " + fmt("%.1f s", elapsed)};
}

Outcome durability() {
    auto dir = std::make_shared<TempDir>();
    std::vector<std::string> digests;
    std::mt19937_64 rng(1000);
    const auto t0 = Clock::now();
    {
        LiveServer live(dir, ServerConfig{});
        ClientConfig cfg;
        cfg.server_url = live.url();
        AuthClient client(cfg);
        for (int i = 0; i < kDurableAccounts; ++i) {
            const auto object = objauth::testing::random_bytes(rng, 1 + rng() % 2048);
            digests.push_back(digest_to_hex(object_digest(object)));
            if (!client.signup("durable-" + std::to_string(i), object).accepted()) {
                return {false, "signup " + std::to_string(i) + " failed"};
            }
        }
        live.stop();
    }
    LiveServer restarted(dir, ServerConfig{});
    ClientConfig cfg;
    cfg.server_url = restarted.url();
    AuthClient client(cfg);
    int ok = 0;
    for (int i = 0; i < kDurableAccounts; ++i) {
        ok += client.login_hash("durable-" + std::to_string(i), digests[static_cast<std::size_t>(i)]).accepted();
    }
    const double elapsed = seconds_since(t0);
    return {ok == kDurableAccounts && elapsed < kDurabilityBudgetS,
            std::to_string(ok) + "/" + std::to_string(kDurableAccounts) + " logins after restart, " +
                fmt("%.1f s", elapsed)};
}

// `n` records spread evenly so the first send and last completion are
// exactly `span_s` apart.
std::vector<bench::RequestRecord> evenly_spaced(std::size_t n, double span_s) {
    std::vector<bench::RequestRecord> out(n);
    const double latency_ms = 25.0;
    const double last_send = span_s * 1000.0 - latency_ms;
    for (std::size_t i = 0; i < n; ++i) {
        out[i].seq = i;
        out[i].send_unix_ms = 1.7e12 + last_send * static_cast<double>(i) / static_cast<double>(n - 1);
        out[i].done_unix_ms = out[i].send_unix_ms + latency_ms;
        out[i].status = 200;
        out[i].latency_ms = latency_ms;
    }
    return out;
}

Outcome throughput_formula() {
    struct Case {
        std::size_t n;
        double span_s;
        double expected;
    };
    const Case cases[] = {{1200, 600.0, 2.0}, {22, 10.0, 2.2}};
    bool pass = true;
    std::string detail;
    for (const auto& c : cases) {
        const double got = bench::compute_throughput(evenly_spaced(c.n, c.span_s));
        pass = pass && std::abs(got - c.expected) < kThroughputDecimals / 2;
        detail += std::to_string(c.n) + " over " + fmt("%.0f s", c.span_s) + " -> " + fmt("%.3f", got) + "; ";
    }
    detail.resize(detail.size() - 2);
    return {pass, detail};
}

Outcome cost_ordering() {
    LiveServer live;
    const auto run = [&](bench::Scheme scheme, double duration_s) {
        bench::BenchConfig c;
        c.scheme = scheme;
        c.clients = kCostClients;
        c.duration_s = duration_s;
        c.object_size = kCostObjectBytes;
        c.server_url = live.url();
        c.throttle_bps = kSlowLinkBps;
        return bench::run_load(c);
    };
    const auto t0 = Clock::now();
    const auto object = run(bench::Scheme::object, kObjectRunS);
    const auto hash = run(bench::Scheme::hash, kHashRunS);
    const double elapsed = seconds_since(t0);
    if (!object.aggregate.throughput_rps || !hash.aggregate.throughput_rps || object.aggregate.errors != 0 ||
        hash.aggregate.errors != 0) {
        return {false, "a run had errors or too few completions"};
    }
    const double ratio = *hash.aggregate.throughput_rps / *object.aggregate.throughput_rps;
    return {ratio >= kMinCostRatio && elapsed <= kCostBudgetS,
            "hash " + fmt("%.2f", *hash.aggregate.throughput_rps) + " req/s (" +
                std::to_string(hash.records.size()) + " reqs), object " +
                fmt("%.4f", *object.aggregate.throughput_rps) + " req/s (" +
                std::to_string(object.records.size()) + " reqs), ratio " + fmt("%.1f", ratio) + ", " +
                fmt("%.0f s", elapsed)};
}

Outcome latency_trends() {
    LiveServer live;
    const auto t0 = Clock::now();
    bench::SweepConfig hash_cfg;
    hash_cfg.server_url = live.url();
    hash_cfg.requests_per_size = kHashTrendRequests;
    auto hash_rows = bench::sweep_object_size(kTrendSizes, bench::Scheme::hash, hash_cfg);
    for (std::size_t round = 1; round < kHashTrendRounds; ++round) {
        const auto more = bench::sweep_object_size(kTrendSizes, bench::Scheme::hash, hash_cfg);
        for (std::size_t i = 0; i < hash_rows.size(); ++i) {
            hash_rows[i].mean_latency_ms += more[i].mean_latency_ms;
            hash_rows[i].requests += more[i].requests;
        }
    }
    for (auto& r : hash_rows) {
        r.mean_latency_ms /= static_cast<double>(kHashTrendRounds);
    }

    bench::SweepConfig object_cfg = hash_cfg;
    object_cfg.requests_per_size = kObjectTrendRequests;
    object_cfg.throttle_bps = kTrendLinkBps;
    const auto object_rows = bench::sweep_object_size(kTrendSizes, bench::Scheme::object, object_cfg);
    const double elapsed = seconds_since(t0);

    double lo = hash_rows.front().mean_latency_ms;
    double hi = lo;
    std::string hash_means;
    for (const auto& r : hash_rows) {
        lo = std::min(lo, r.mean_latency_ms);
        hi = std::max(hi, r.mean_latency_ms);
        hash_means += fmt("%.3f/", r.mean_latency_ms);
    }
    bool increasing = true;
    std::string object_means;
    for (std::size_t i = 0; i < object_rows.size(); ++i) {
        if (i > 0 && !(object_rows[i].mean_latency_ms > object_rows[i - 1].mean_latency_ms)) {
            increasing = false;
        }
        object_means += fmt("%.1f/", object_rows[i].mean_latency_ms);
    }
    hash_means.pop_back();
    object_means.pop_back();
    const double ratio = hi / lo;
    return {ratio < kMaxHashFlatRatio && increasing && elapsed < kTrendBudgetS,
            "hash means " + hash_means + " ms (max/min " + fmt("%.2f", ratio) + "), object means " +
                object_means + " ms, " + fmt("%.0f s", elapsed)};
}

Outcome file_type_independence() {
    const auto fixtures = bench::content_class_fixtures(kFileTypeBytes, 7);
    const auto rows = bench::sweep_file_type(fixtures, kFileTypeIterations);
    double lo = rows.front().mean_ms;
    double hi = lo;
    std::string detail;
    for (const auto& r : rows) {
        lo = std::min(lo, r.mean_ms);
        hi = std::max(hi, r.mean_ms);
        detail += r.label + fmt(" %.3f ms, ", r.mean_ms);
    }
    const double spread = (hi - lo) / lo;
    return {spread <= kFileTypeSpread, detail + "spread " + fmt("%.1f%%", spread * 100.0)};
}

Outcome hash_time() {
    const auto object = bench::make_object(kHashTimeBytes, 11);
    double worst = 0.0;
    for (int i = 0; i < kHashTimeRuns; ++i) {
        const auto t0 = Clock::now();
        const auto d = object_digest(object);
        const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        (void)d;
        worst = std::max(worst, ms);
    }
    return {worst < kHashTimeLimitMs, "slowest of " + std::to_string(kHashTimeRuns) + " runs " + fmt("%.3f ms", worst)};
}

Outcome enumeration_resistance() {
    LiveServer live;
    ClientConfig cfg;
    cfg.server_url = live.url();
    AuthClient client(cfg);
    if (!client.signup("alice", "alice's photo").accepted()) {
        return {false, "signup failed"};
    }
    httplib::Client http(live.url());
    const auto hash_login = [&](const std::string& user) {
        return http.Post("/api/login/hash", R"({"user_id":")" + user + R"(","password":"wrong"})",
                         "application/json");
    };
    const auto object_login = [&](const std::string& user) {
        httplib::MultipartFormDataItems items = {{"user_id", user, "", ""},
                                                 {"object", "not the photo", "o.bin", "application/octet-stream"}};
        return http.Post("/api/login/object", items);
    };
    const auto wrong_hash = hash_login("alice");
    const auto unknown_hash = hash_login("mallory");
    const auto wrong_object = object_login("alice");
    const auto unknown_object = object_login("mallory");
    for (const auto* r : {&wrong_hash, &unknown_hash, &wrong_object, &unknown_object}) {
        if (!*r || (*r)->status != 401) {
            return {false, "expected 401 from every login"};
        }
    }
    const bool same = wrong_hash->body == unknown_hash->body && wrong_object->body == unknown_object->body &&
                      wrong_hash->body == wrong_object->body &&
                      wrong_hash->get_header_value("Content-Type") == unknown_hash->get_header_value("Content-Type");
    return {same, "401 body " + wrong_hash->body};
}

} // namespace

int main(int argc, char** argv) {
    // Optional substring filter, e.g. `acceptance latency`.
    const std::string only = argc > 1 ? argv[1] : "";
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"digest correctness", digest_correctness},
        {"scheme equivalence", scheme_equivalence},
        {"round-trip durability", durability},
        {"throughput formula", throughput_formula},
        {"scheme cost ordering", cost_ordering},
        {"latency trends", latency_trends},
        {"file-type independence", file_type_independence},
        {"hash-time order of magnitude", hash_time},
        {"enumeration resistance", enumeration_resistance},
    };
    int failures = 0;
    std::size_t ran = 0;
    for (const auto& [name, check] : criteria) {
        if (name.find(only) == std::string::npos) {
            continue;
        }
        ++ran;
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << " (" << o.detail << ")" << std::endl;
    }
    std::cout << (ran - static_cast<std::size_t>(failures)) << "/" << ran
              << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
