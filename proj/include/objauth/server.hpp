#pragma once

#include "objauth/account_store.hpp"
#include "objauth/core.hpp"

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

namespace objauth {

inline constexpr std::size_t kDefaultMaxUploadBytes = 64ULL * 1024 * 1024;

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080; // 0 picks an ephemeral port
    std::filesystem::path store_path = "accounts.jsonl";
    std::size_t max_upload_bytes = kDefaultMaxUploadBytes;
    std::chrono::milliseconds artificial_delay{0};
    /// Enables POST /api/signup/text (JSON user_id + password).
    bool allow_text_signup = false;
    /// Static files served at "/", e.g. the browser client.
    std::optional<std::filesystem::path> web_root;

    /// Throws InvalidInput on a zero upload cap, negative delay or bad port.
    void validate() const;
};

/// Parses "host:port". Throws InvalidInput.
[[nodiscard]] std::pair<std::string, int> parse_listen_address(std::string_view text);

enum class AuthStatus { accepted, rejected, error };

/// Outcome of one auth endpoint call. `code` is set only for errors and
/// is one of duplicate_user, empty_object, too_large, bad_request.
struct AuthResponse {
    AuthStatus status = AuthStatus::error;
    int http_status = 500;
    std::string code;
    double auth_time_ms = 0.0;

    /// JSON body as sent on the wire. Rejections carry no timing so that
    /// unknown-user and wrong-password bodies are byte-identical; the timing
    /// travels in the X-Auth-Time-Ms header instead.
    [[nodiscard]] std::string body() const;
};

/// Monotonic elapsed-time measurement for one request.
class AuthTimer {
public:
    AuthTimer() : start_(std::chrono::steady_clock::now()) {}

    [[nodiscard]] double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

/// Sign-up and login logic, independent of HTTP. All methods are safe to
/// call concurrently.
class AuthService {
public:
    AuthService(AccountStore& store, std::size_t max_upload_bytes,
                std::chrono::milliseconds artificial_delay);

    AuthResponse signup(std::string_view user_id, std::string_view object) const;
    /// Text sign-up: the password string itself is the KDF input.
    AuthResponse signup_text(std::string_view user_id, std::string_view password) const;
    AuthResponse login_hash(std::string_view user_id, std::string_view password) const;
    AuthResponse login_object(std::string_view user_id, std::string_view object) const;

    [[nodiscard]] std::size_t max_upload_bytes() const noexcept { return max_upload_bytes_; }

private:
    AuthResponse create(std::string_view user_id, const PasswordString& password,
                        const AuthTimer& timer) const;
    AuthResponse verify(std::string_view user_id, const PasswordString& password,
                        const AuthTimer& timer) const;
    void delay() const;

    AccountStore& store_;
    std::size_t max_upload_bytes_;
    std::chrono::milliseconds artificial_delay_;
    AccountRecord decoy_;
};

/// HTTP front end. Owns the store and a listener thread.
class AuthServer {
public:
    explicit AuthServer(ServerConfig config);
    ~AuthServer();

    AuthServer(const AuthServer&) = delete;
    AuthServer& operator=(const AuthServer&) = delete;

    /// Binds and starts serving on a background thread. Returns the bound
    /// port. Throws IoError if the address cannot be bound.
    int start();
    /// Blocks serving on the calling thread until stop() is called.
    void run();
    /// Stops accepting connections and waits for in-flight requests.
    void stop();

    [[nodiscard]] int port() const noexcept { return port_; }
    [[nodiscard]] std::string base_url() const;
    [[nodiscard]] const AccountStore& store() const noexcept { return *store_; }

private:
    struct Http;

    int bind();

    ServerConfig config_;
    std::unique_ptr<AccountStore> store_;
    std::unique_ptr<AuthService> service_;
    std::unique_ptr<Http> http_;
    std::thread thread_;
    int port_ = 0;
};

} // namespace objauth
