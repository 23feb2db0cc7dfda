#include "objauth/client.hpp"

#include "objauth/core.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <thread>

namespace objauth {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kUnthrottledChunkBytes = 256 * 1024;

} // namespace

UploadThrottle::UploadThrottle(double bytes_per_second)
    : rate_(bytes_per_second), next_free_(Clock::now()) {
    if (!(bytes_per_second > 0.0)) {
        throw InvalidInput("throttle rate must be positive");
    }
}

void UploadThrottle::acquire(std::size_t bytes) {
    const auto cost = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(static_cast<double>(bytes) / rate_));
    Clock::time_point finish;
    {
        std::lock_guard lock(mutex_);
        const auto start = std::max(Clock::now(), next_free_);
        finish = start + cost;
        next_free_ = finish;
    }
    std::this_thread::sleep_until(finish);
}

std::size_t UploadThrottle::chunk_bytes() const noexcept {
    const double slot = rate_ * 0.05;
    return static_cast<std::size_t>(std::clamp(slot, 256.0, 65536.0));
}

void ClientConfig::validate() const {
    if (timeout.count() <= 0) {
        throw InvalidInput("client timeout must be positive");
    }
    if (throttle_bps && !(*throttle_bps > 0.0)) {
        throw InvalidInput("throttle must be positive");
    }
}

int exit_code_for(const CallResult& result) noexcept {
    switch (result.http_status) {
    case 200:
        return 0;
    case 401:
        return 1;
    case 409:
        return 2;
    case 413:
        return 3;
    case 0:
        return 4;
    case 422:
        return 5;
    default:
        return 6;
    }
}

struct AuthClient::Http {
    explicit Http(const std::string& url) : client(url) {}
    httplib::Client client;
};

AuthClient::AuthClient(ClientConfig config, std::shared_ptr<UploadThrottle> throttle)
    : config_(std::move(config)), throttle_(std::move(throttle)) {
    config_.validate();
    if (!throttle_ && config_.throttle_bps) {
        throttle_ = std::make_shared<UploadThrottle>(*config_.throttle_bps);
    }
    http_ = std::make_unique<Http>(config_.server_url);
    if (!http_->client.is_valid()) {
        throw InvalidInput("invalid server URL: " + config_.server_url);
    }
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    http_->client.set_connection_timeout(secs.count(), usecs.count());
    http_->client.set_read_timeout(secs.count(), usecs.count());
    http_->client.set_write_timeout(secs.count(), usecs.count());
    http_->client.set_keep_alive(true);
    http_->client.set_tcp_nodelay(true);
    boundary_ = "objauth-" + generate_salt().hex();
}

AuthClient::~AuthClient() = default;

CallResult AuthClient::signup(std::string_view user_id, std::string_view object) {
    return post_multipart("/api/signup", user_id, object);
}

CallResult AuthClient::signup_text(std::string_view user_id, std::string_view password) {
    return post_json("/api/signup/text", user_id, password);
}

CallResult AuthClient::login_hash(std::string_view user_id, std::string_view password) {
    return post_json("/api/login/hash", user_id, password);
}

CallResult AuthClient::login_object(std::string_view user_id, std::string_view object) {
    return post_multipart("/api/login/object", user_id, object);
}

bool AuthClient::healthy() {
    const auto res = http_->client.Get("/api/health");
    return res && res->status == 200;
}

CallResult AuthClient::post_multipart(const std::string& path, std::string_view user_id,
                                      std::string_view object) {
    std::string head;
    head += "--" + boundary_ + "\r\n";
    head += "Content-Disposition: form-data; name=\"user_id\"\r\n\r\n";
    head += user_id;
    head += "\r\n--" + boundary_ + "\r\n";
    head += "Content-Disposition: form-data; name=\"object\"; filename=\"object\"\r\n";
    head += "Content-Type: application/octet-stream\r\n\r\n";
    const std::string tail = "\r\n--" + boundary_ + "--\r\n";
    return post(path, "multipart/form-data; boundary=" + boundary_, head, object, tail);
}

CallResult AuthClient::post_json(const std::string& path, std::string_view user_id,
                                 std::string_view password) {
    // Invalid UTF-8 is passed through untouched; the server rejects it.
    const std::string body = json{{"user_id", user_id}, {"password", password}}.dump(
        -1, ' ', false, json::error_handler_t::ignore);
    return post(path, "application/json", body, {}, {});
}

CallResult AuthClient::post(const std::string& path, const std::string& content_type,
                            std::string_view head, std::string_view payload,
                            std::string_view tail) {
    const std::size_t total = head.size() + payload.size() + tail.size();
    const std::size_t chunk = throttle_ ? throttle_->chunk_bytes() : kUnthrottledChunkBytes;
    UploadThrottle* throttle = throttle_.get();

    // Writes the body as the concatenation head|payload|tail without
    // materialising it.
    auto provider = [&, throttle, chunk](std::size_t offset, std::size_t length,
                                         httplib::DataSink& sink) {
        std::size_t n = std::min(length, chunk);
        std::string_view piece;
        if (offset < head.size()) {
            piece = head.substr(offset, n);
        } else if (offset < head.size() + payload.size()) {
            piece = payload.substr(offset - head.size(), n);
        } else {
            piece = tail.substr(offset - head.size() - payload.size(), n);
        }
        if (throttle) {
            throttle->acquire(piece.size());
        }
        return sink.write(piece.data(), piece.size());
    };

    CallResult out;
    out.sent = Clock::now();
    auto res = http_->client.Post(path, httplib::Headers{}, total, provider, content_type);
    out.done = Clock::now();
    out.wall_ms = std::chrono::duration<double, std::milli>(out.done - out.sent).count();

    if (!res) {
        out.transport_error = httplib::to_string(res.error());
        return out;
    }
    out.http_status = res->status;
    if (res->has_header("X-Auth-Time-Ms")) {
        const auto v = res->get_header_value("X-Auth-Time-Ms");
        double ms = 0.0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), ms);
        if (ec == std::errc{} && ptr == v.data() + v.size()) {
            out.server_auth_ms = ms;
        }
    }
    const auto body = json::parse(res->body, nullptr, false);
    if (body.is_object()) {
        if (body.contains("status") && body["status"].is_string()) {
            out.status = body["status"].get<std::string>();
        }
        if (body.contains("code") && body["code"].is_string()) {
            out.code = body["code"].get<std::string>();
        }
    }
    return out;
}

} // namespace objauth
