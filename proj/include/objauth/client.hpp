#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace objauth {

/// Caps aggregate upload bandwidth across every client sharing it. Each
/// acquire() reserves the next slot on a virtual link and sleeps until the
/// reserved bytes would have finished transmitting.
class UploadThrottle {
public:
    /// Throws InvalidInput unless `bytes_per_second` > 0.
    explicit UploadThrottle(double bytes_per_second);

    void acquire(std::size_t bytes);

    [[nodiscard]] double bytes_per_second() const noexcept { return rate_; }
    /// Largest write the caller should make per acquire(); about 50 ms of
    /// link time, clamped to [256 B, 64 KiB].
    [[nodiscard]] std::size_t chunk_bytes() const noexcept;

private:
    double rate_;
    std::mutex mutex_;
    std::chrono::steady_clock::time_point next_free_;
};

struct ClientConfig {
    std::string server_url = "http://127.0.0.1:8080";
    std::chrono::milliseconds timeout{120'000};
    /// Simulated uplink in bytes per second; applies to request bodies only.
    std::optional<double> throttle_bps;

    void validate() const;
};

/// Result of one HTTP call. `http_status` is 0 when no response arrived.
struct CallResult {
    int http_status = 0;
    std::string status; // "ok", "rejected" or "error" from the body
    std::string code;   // error code from the body, if any
    std::optional<double> server_auth_ms;
    double wall_ms = 0.0;
    std::chrono::steady_clock::time_point sent;
    std::chrono::steady_clock::time_point done;
    std::string transport_error;

    [[nodiscard]] bool accepted() const noexcept { return http_status == 200; }
    [[nodiscard]] bool responded() const noexcept { return http_status != 0; }
};

/// Process exit status for a CLI call: 0 ok, 1 rejected, 2 duplicate user,
/// 3 too large, 4 transport failure, 5 empty object, 6 other HTTP error.
[[nodiscard]] int exit_code_for(const CallResult& result) noexcept;

class AuthClient {
public:
    /// A shared `throttle` takes precedence over `config.throttle_bps`.
    explicit AuthClient(ClientConfig config, std::shared_ptr<UploadThrottle> throttle = nullptr);
    ~AuthClient();

    AuthClient(const AuthClient&) = delete;
    AuthClient& operator=(const AuthClient&) = delete;

    CallResult signup(std::string_view user_id, std::string_view object);
    CallResult signup_text(std::string_view user_id, std::string_view password);
    CallResult login_hash(std::string_view user_id, std::string_view password);
    CallResult login_object(std::string_view user_id, std::string_view object);

    [[nodiscard]] bool healthy();

private:
    struct Http;

    CallResult post_multipart(const std::string& path, std::string_view user_id,
                              std::string_view object);
    CallResult post_json(const std::string& path, std::string_view user_id,
                         std::string_view password);
    CallResult post(const std::string& path, const std::string& content_type,
                    std::string_view head, std::string_view payload, std::string_view tail);

    ClientConfig config_;
    std::shared_ptr<UploadThrottle> throttle_;
    std::unique_ptr<Http> http_;
    std::string boundary_;
};

} // namespace objauth
