#pragma once

#include "objauth/server.hpp"

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>

namespace objauth::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::string pattern = (std::filesystem::temp_directory_path() / "objauth-test-XXXXXX").string();
        if (::mkdtemp(pattern.data()) == nullptr) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = pattern;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string random_bytes(std::mt19937_64& rng, std::size_t n) {
    std::string out(n, '\0');
    for (auto& c : out) {
        c = static_cast<char>(rng() & 0xFF);
    }
    return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_whole(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// In-process server on an ephemeral loopback port with its own store.
class LiveServer {
public:
    explicit LiveServer(ServerConfig config = {}) : LiveServer(std::make_shared<TempDir>(), std::move(config)) {}

    LiveServer(std::shared_ptr<TempDir> dir, ServerConfig config) : dir_(std::move(dir)) {
        config.host = "127.0.0.1";
        config.port = 0;
        if (config.store_path == ServerConfig{}.store_path) {
            config.store_path = dir_->path() / "accounts.jsonl";
        }
        server_ = std::make_unique<AuthServer>(config);
        server_->start();
    }

    [[nodiscard]] std::string url() const { return server_->base_url(); }
    [[nodiscard]] AuthServer& server() { return *server_; }
    [[nodiscard]] const std::shared_ptr<TempDir>& dir() const { return dir_; }
    [[nodiscard]] std::filesystem::path store_path() const { return dir_->path() / "accounts.jsonl"; }

    void stop() { server_->stop(); }

private:
    std::shared_ptr<TempDir> dir_;
    std::unique_ptr<AuthServer> server_;
};

} // namespace objauth::testing
