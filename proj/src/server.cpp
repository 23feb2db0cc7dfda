#include "objauth/server.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cstdio>

namespace objauth {

namespace {

using nlohmann::json;

// Room for the user_id part, part headers and boundaries on top of the
// object itself. Bodies beyond this are refused before they are read.
constexpr std::size_t kMultipartOverheadBytes = 64 * 1024;
constexpr std::size_t kServerThreads = 32;

AuthResponse error_response(int http_status, std::string code, const AuthTimer& timer) {
    AuthResponse r;
    r.status = AuthStatus::error;
    r.http_status = http_status;
    r.code = std::move(code);
    r.auth_time_ms = timer.elapsed_ms();
    return r;
}

std::string format_ms(double ms) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", ms);
    return buf;
}

std::string error_body(std::string_view code) {
    return nlohmann::ordered_json{{"status", "error"}, {"code", code}}.dump();
}

} // namespace

void ServerConfig::validate() const {
    if (max_upload_bytes < 1) {
        throw InvalidInput("max upload bytes must be at least 1");
    }
    if (artificial_delay.count() < 0) {
        throw InvalidInput("artificial delay must not be negative");
    }
    if (port < 0 || port > 65535) {
        throw InvalidInput("port out of range");
    }
}

std::pair<std::string, int> parse_listen_address(std::string_view text) {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon + 1 == text.size()) {
        throw InvalidInput("listen address must be host:port");
    }
    std::string host(text.substr(0, colon));
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') {
        host = host.substr(1, host.size() - 2);
    }
    if (host.empty()) {
        host = "0.0.0.0";
    }
    int port = 0;
    for (const char c : text.substr(colon + 1)) {
        if (c < '0' || c > '9' || port > 65535) {
            throw InvalidInput("invalid port in listen address");
        }
        port = port * 10 + (c - '0');
    }
    if (port > 65535) {
        throw InvalidInput("invalid port in listen address");
    }
    return {host, port};
}

std::string AuthResponse::body() const {
    switch (status) {
    case AuthStatus::accepted:
        return nlohmann::ordered_json{{"status", "ok"}, {"auth_time_ms", auth_time_ms}}.dump();
    case AuthStatus::rejected:
        return R"({"status":"rejected"})";
    case AuthStatus::error:
        break;
    }
    return error_body(code);
}

AuthService::AuthService(AccountStore& store, std::size_t max_upload_bytes,
                         std::chrono::milliseconds artificial_delay)
    : store_(store), max_upload_bytes_(max_upload_bytes), artificial_delay_(artificial_delay) {
    // Unknown users are checked against this record so both rejection paths
    // run the same derivation.
    decoy_.user_id = "decoy";
    decoy_.salt = generate_salt();
    decoy_.pwd_hash = object_digest(generate_salt().bytes());
}

void AuthService::delay() const {
    if (artificial_delay_.count() > 0) {
        std::this_thread::sleep_for(artificial_delay_);
    }
}

AuthResponse AuthService::create(std::string_view user_id, const PasswordString& password,
                                 const AuthTimer& timer) const {
    AccountRecord record;
    record.user_id = std::string(user_id);
    record.salt = generate_salt();
    record.pwd_hash = derive_stored_hash(password, record.salt);
    try {
        store_.create(record);
    } catch (const AlreadyExists&) {
        return error_response(409, "duplicate_user", timer);
    }
    delay();
    AuthResponse r;
    r.status = AuthStatus::accepted;
    r.http_status = 200;
    r.auth_time_ms = timer.elapsed_ms();
    return r;
}

AuthResponse AuthService::verify(std::string_view user_id, const PasswordString& password,
                                 const AuthTimer& timer) const {
    const auto record = store_.find(user_id);
    const bool ok = verify_credentials(password, record ? *record : decoy_) && record.has_value();
    delay();
    AuthResponse r;
    r.status = ok ? AuthStatus::accepted : AuthStatus::rejected;
    r.http_status = ok ? 200 : 401;
    r.auth_time_ms = timer.elapsed_ms();
    return r;
}

AuthResponse AuthService::signup(std::string_view user_id, std::string_view object) const {
    const AuthTimer timer;
    try {
        validate_user_id(user_id);
    } catch (const InvalidInput&) {
        return error_response(400, "bad_request", timer);
    }
    if (object.size() > max_upload_bytes_) {
        return error_response(413, "too_large", timer);
    }
    if (object.empty()) {
        return error_response(422, "empty_object", timer);
    }
    return create(user_id, PasswordString::from_digest(object_digest(object)), timer);
}

AuthResponse AuthService::signup_text(std::string_view user_id, std::string_view password) const {
    const AuthTimer timer;
    try {
        validate_user_id(user_id);
        return create(user_id, PasswordString::from_transmitted(std::string(password)), timer);
    } catch (const InvalidInput&) {
        return error_response(400, "bad_request", timer);
    }
}

AuthResponse AuthService::login_hash(std::string_view user_id, std::string_view password) const {
    const AuthTimer timer;
    try {
        validate_user_id(user_id);
        return verify(user_id, PasswordString::from_transmitted(std::string(password)), timer);
    } catch (const InvalidInput&) {
        return error_response(400, "bad_request", timer);
    }
}

AuthResponse AuthService::login_object(std::string_view user_id, std::string_view object) const {
    const AuthTimer timer;
    try {
        validate_user_id(user_id);
    } catch (const InvalidInput&) {
        return error_response(400, "bad_request", timer);
    }
    if (object.size() > max_upload_bytes_) {
        return error_response(413, "too_large", timer);
    }
    return verify(user_id, PasswordString::from_digest(object_digest(object)), timer);
}

struct AuthServer::Http {
    httplib::Server server;
};

AuthServer::AuthServer(ServerConfig config) : config_(std::move(config)) {
    config_.validate();
    store_ = std::make_unique<AccountStore>(config_.store_path);
    service_ = std::make_unique<AuthService>(*store_, config_.max_upload_bytes,
                                             config_.artificial_delay);
    http_ = std::make_unique<Http>();

    auto& svr = http_->server;
    svr.new_task_queue = [] { return new httplib::ThreadPool(kServerThreads); };
    svr.set_payload_max_length(config_.max_upload_bytes + kMultipartOverheadBytes);
    svr.set_keep_alive_max_count(100000);
    svr.set_tcp_nodelay(true);
    svr.set_read_timeout(30, 0);
    svr.set_write_timeout(30, 0);

    const auto send = [](httplib::Response& res, const AuthResponse& r) {
        res.status = r.http_status;
        res.set_header("X-Auth-Time-Ms", format_ms(r.auth_time_ms));
        res.set_content(r.body(), "application/json");
    };
    const auto bad_request = [](httplib::Response& res) {
        res.status = 400;
        res.set_content(error_body("bad_request"), "application/json");
    };
    const AuthService& service = *service_;

    // Multipart endpoints share the same field extraction.
    const auto multipart = [send, bad_request](auto&& call) {
        return [send, bad_request, call](const httplib::Request& req, httplib::Response& res) {
            if (!req.is_multipart_form_data() || !req.has_file("user_id") ||
                !req.has_file("object")) {
                bad_request(res);
                return;
            }
            const auto& user = req.get_file_value("user_id").content;
            const auto& object = req.get_file_value("object").content;
            send(res, call(user, object));
        };
    };
    // JSON endpoints take {"user_id": string, "password": string}.
    const auto json_pair = [send, bad_request](auto&& call) {
        return [send, bad_request, call](const httplib::Request& req, httplib::Response& res) {
            const auto body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.is_object() || !body.contains("user_id") ||
                !body.contains("password") || !body["user_id"].is_string() ||
                !body["password"].is_string()) {
                bad_request(res);
                return;
            }
            send(res, call(body["user_id"].get<std::string>(), body["password"].get<std::string>()));
        };
    };

    svr.Post("/api/signup", multipart([&service](const std::string& u, const std::string& o) {
                 return service.signup(u, o);
             }));
    svr.Post("/api/login/object", multipart([&service](const std::string& u, const std::string& o) {
                 return service.login_object(u, o);
             }));
    svr.Post("/api/login/hash", json_pair([&service](const std::string& u, const std::string& p) {
                 return service.login_hash(u, p);
             }));
    if (config_.allow_text_signup) {
        svr.Post("/api/signup/text", json_pair([&service](const std::string& u, const std::string& p) {
                     return service.signup_text(u, p);
                 }));
    }
    svr.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"ok"})", "application/json");
    });

    if (config_.web_root && !svr.set_mount_point("/", config_.web_root->string())) {
        throw InvalidInput("web root is not a directory: " + config_.web_root->string());
    }

    svr.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) {
            return httplib::Server::HandlerResponse::Unhandled;
        }
        const char* code = res.status == 413   ? "too_large"
                           : res.status == 404 ? "not_found"
                           : res.status >= 500 ? "internal"
                                               : "bad_request";
        res.set_content(error_body(code), "application/json");
        return httplib::Server::HandlerResponse::Handled;
    });
    svr.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
            res.status = 500;
            res.set_content(error_body("internal"), "application/json");
        });
}

AuthServer::~AuthServer() {
    stop();
}

int AuthServer::bind() {
    auto& svr = http_->server;
    if (config_.port == 0) {
        port_ = svr.bind_to_any_port(config_.host);
    } else {
        port_ = svr.bind_to_port(config_.host, config_.port) ? config_.port : -1;
    }
    if (port_ <= 0) {
        throw IoError("cannot bind " + config_.host + ":" + std::to_string(config_.port));
    }
    return port_;
}

int AuthServer::start() {
    bind();
    thread_ = std::thread([this] { http_->server.listen_after_bind(); });
    http_->server.wait_until_ready();
    return port_;
}

void AuthServer::run() {
    bind();
    http_->server.listen_after_bind();
}

void AuthServer::stop() {
    if (http_) {
        http_->server.stop();
    }
    if (thread_.joinable()) {
        thread_.join();
    }
}

std::string AuthServer::base_url() const {
    return "http://" + config_.host + ":" + std::to_string(port_);
}

} // namespace objauth
