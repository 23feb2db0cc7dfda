#include "cli.hpp"

#include "objauth/bench.hpp"
#include "objauth/client.hpp"
#include "objauth/core.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace objauth::cli {

namespace {

constexpr int kExitRejected = 1;
constexpr int kExitTransport = 4;
constexpr int kExitLocalIo = 7;
constexpr int kExitUsage = 64;

std::string fmt_ms(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) {
        throw IoError("read failed on " + path);
    }
    return ss.str();
}

bool is_hex64(const std::string& s) {
    return s.size() == 2 * kDigestSize && std::all_of(s.begin(), s.end(), [](unsigned char c) {
               return std::isxdigit(c) != 0;
           });
}

void report_failure(std::ostream& err, std::string_view what, const CallResult& r) {
    if (!r.responded()) {
        err << what << " failed: cannot reach server (" << r.transport_error << ")\n";
        return;
    }
    err << what << " failed: HTTP " << r.http_status;
    if (!r.code.empty()) {
        err << " (" << r.code << ")";
    }
    err << '\n';
}

struct Common {
    std::string server = "http://127.0.0.1:8080";
    double throttle_bps = 0.0;
    int timeout_ms = 120'000;

    ClientConfig client() const {
        ClientConfig c;
        c.server_url = server;
        c.timeout = std::chrono::milliseconds(timeout_ms);
        if (throttle_bps > 0.0) {
            c.throttle_bps = throttle_bps;
        }
        return c;
    }
};

void add_common(CLI::App* cmd, Common& common, bool with_throttle) {
    cmd->add_option("--server", common.server, "Server base URL")->capture_default_str();
    cmd->add_option("--timeout-ms", common.timeout_ms, "Request timeout")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    if (with_throttle) {
        cmd->add_option("--throttle-bps", common.throttle_bps,
                        "Simulated upload bandwidth in bytes per second")
            ->check(CLI::PositiveNumber);
    }
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> sizes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        sizes.push_back(static_cast<std::size_t>(std::stoull(item)));
    }
    return sizes;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Object-password authentication client"};
    app.name("objauth");
    app.require_subcommand(1);

    // hash
    std::string hash_path;
    auto* hash_cmd = app.add_subcommand("hash", "Print the SHA-256 hex digest of a file");
    hash_cmd->add_option("path", hash_path, "Object file")->required();

    // signup
    Common signup_opts;
    std::string signup_user;
    std::string signup_object;
    auto* signup_cmd = app.add_subcommand("signup", "Create an account from an object file");
    signup_cmd->add_option("--user", signup_user, "User id")->required();
    signup_cmd->add_option("--object", signup_object, "Object file")->required();
    add_common(signup_cmd, signup_opts, true);

    // login
    Common login_opts;
    std::string login_user;
    std::string login_scheme;
    std::string login_arg;
    auto* login_cmd = app.add_subcommand("login", "Log in with an object or its digest");
    login_cmd->add_option("--user", login_user, "User id")->required();
    login_cmd->add_option("--scheme", login_scheme, "object or hash")
        ->required()
        ->check(CLI::IsMember({"object", "hash"}));
    login_cmd->add_option("credential", login_arg, "Object path, or a 64-hex digest for --scheme hash")
        ->required();
    add_common(login_cmd, login_opts, true);

    // bench
    Common bench_opts;
    std::string bench_scheme;
    double bench_rate = 0.0;
    int bench_clients = 0;
    double bench_duration = 0.0;
    std::size_t bench_size = 0;
    std::string bench_out;
    std::string bench_user;
    std::uint64_t bench_seed = 1;
    auto* bench_cmd = app.add_subcommand("bench", "Run a login load test and write a CSV report");
    bench_cmd->add_option("--scheme", bench_scheme, "hash or object")
        ->required()
        ->check(CLI::IsMember({"object", "hash"}));
    auto* rate_opt = bench_cmd->add_option("--rate", bench_rate, "Open-loop requests per second")
                         ->check(CLI::PositiveNumber);
    auto* clients_opt = bench_cmd->add_option("--clients", bench_clients, "Closed-loop client count")
                            ->check(CLI::PositiveNumber);
    rate_opt->excludes(clients_opt);
    bench_cmd->add_option("--duration", bench_duration, "Seconds")->required()->check(CLI::PositiveNumber);
    bench_cmd->add_option("--size", bench_size, "Object size in bytes")->required()->check(CLI::PositiveNumber);
    bench_cmd->add_option("--out", bench_out, "Report CSV path")->required();
    bench_cmd->add_option("--user", bench_user, "Bench account (default bench-<size>-<seed>)");
    bench_cmd->add_option("--seed", bench_seed, "Object seed")->capture_default_str();
    add_common(bench_cmd, bench_opts, true);

    // sweep-size
    Common sweep_opts;
    std::string sweep_scheme;
    std::string sweep_sizes;
    std::size_t sweep_requests = 20;
    std::string sweep_out;
    auto* sweep_cmd = app.add_subcommand("sweep-size", "Mean login latency per object size");
    sweep_cmd->add_option("--scheme", sweep_scheme, "hash or object")
        ->required()
        ->check(CLI::IsMember({"object", "hash"}));
    sweep_cmd->add_option("--sizes", sweep_sizes, "Ascending comma-separated byte sizes")->required();
    sweep_cmd->add_option("--requests", sweep_requests, "Requests per size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sweep_cmd->add_option("--out", sweep_out, "CSV path (default: standard output)");
    add_common(sweep_cmd, sweep_opts, true);

    // sweep-type
    std::size_t type_size = 1'000'000;
    std::size_t type_iterations = 100;
    std::string type_out;
    auto* type_cmd = app.add_subcommand("sweep-type", "Local digest time per content class");
    type_cmd->add_option("--size", type_size, "Fixture size in bytes")->capture_default_str();
    type_cmd->add_option("--iterations", type_iterations, "Iterations per fixture")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    type_cmd->add_option("--out", type_out, "CSV path (default: standard output)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (*hash_cmd) {
            out << digest_to_hex(digest_file(hash_path)) << '\n';
            return 0;
        }

        if (*signup_cmd) {
            const std::string object = read_file(signup_object);
            AuthClient client(signup_opts.client());
            const auto r = client.signup(signup_user, object);
            if (!r.accepted()) {
                report_failure(err, "signup", r);
                return exit_code_for(r);
            }
            out << "ok auth_time_ms=" << fmt_ms(r.server_auth_ms.value_or(0.0)) << '\n';
            return 0;
        }

        if (*login_cmd) {
            AuthClient client(login_opts.client());
            CallResult r;
            if (login_scheme == "object") {
                r = client.login_object(login_user, read_file(login_arg));
            } else {
                const bool literal = is_hex64(login_arg) && !std::filesystem::exists(login_arg);
                const std::string password =
                    literal ? login_arg : digest_to_hex(digest_file(login_arg));
                r = client.login_hash(login_user, password);
            }
            if (r.http_status == 200 || r.http_status == 401) {
                out << (r.accepted() ? "accepted" : "rejected") << " wall_ms=" << fmt_ms(r.wall_ms)
                    << " server_auth_ms=" << fmt_ms(r.server_auth_ms.value_or(0.0)) << '\n';
                return r.accepted() ? 0 : kExitRejected;
            }
            report_failure(err, "login", r);
            return exit_code_for(r);
        }

        if (*bench_cmd) {
            bench::BenchConfig cfg;
            cfg.scheme = bench::parse_scheme(bench_scheme);
            if (*rate_opt) {
                cfg.rate = bench_rate;
            }
            if (*clients_opt) {
                cfg.clients = bench_clients;
            }
            cfg.duration_s = bench_duration;
            cfg.object_size = bench_size;
            cfg.server_url = bench_opts.server;
            if (bench_opts.throttle_bps > 0.0) {
                cfg.throttle_bps = bench_opts.throttle_bps;
            }
            cfg.user_id = bench_user;
            cfg.seed = bench_seed;
            const auto report = bench::run_load(cfg);
            bench::write_report_csv(std::filesystem::path(bench_out), report);
            const auto& a = report.aggregate;
            out << "requests=" << a.requests << " completed=" << a.completed
                << " errors=" << a.errors << " throughput_rps="
                << (a.throughput_rps ? std::to_string(*a.throughput_rps) : std::string("nan"))
                << " mean_ms=" << fmt_ms(a.latency.mean_ms) << " median_ms=" << fmt_ms(a.latency.median_ms)
                << " p95_ms=" << fmt_ms(a.latency.p95_ms) << (a.failed ? " FAILED" : "") << '\n';
            return a.failed ? kExitTransport : 0;
        }

        if (*sweep_cmd) {
            bench::SweepConfig cfg;
            cfg.server_url = sweep_opts.server;
            cfg.requests_per_size = sweep_requests;
            if (sweep_opts.throttle_bps > 0.0) {
                cfg.throttle_bps = sweep_opts.throttle_bps;
            }
            const auto sizes = parse_sizes(sweep_sizes);
            const auto rows = bench::sweep_object_size(sizes, bench::parse_scheme(sweep_scheme), cfg);
            if (sweep_out.empty()) {
                bench::write_size_sweep_csv(out, rows);
            } else {
                std::ofstream f(sweep_out);
                bench::write_size_sweep_csv(f, rows);
            }
            return 0;
        }

        if (*type_cmd) {
            const auto fixtures = bench::content_class_fixtures(type_size, 1);
            const auto rows = bench::sweep_file_type(fixtures, type_iterations);
            if (type_out.empty()) {
                bench::write_file_type_csv(out, rows);
            } else {
                std::ofstream f(type_out);
                bench::write_file_type_csv(f, rows);
            }
            return 0;
        }
    } catch (const bench::BenchError& e) {
        err << "bench: " << e.what() << '\n';
        return kExitTransport;
    } catch (const IoError& e) {
        err << e.what() << '\n';
        return kExitLocalIo;
    } catch (const Error& e) {
        err << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

} // namespace objauth::cli
