#include "objauth/server.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

#include <pthread.h>

int main(int argc, char** argv) {
    CLI::App app{"Object-password authentication server"};
    app.name("objauth-server");

    std::string listen = "127.0.0.1:8080";
    std::string store = "accounts.jsonl";
    std::size_t max_upload = objauth::kDefaultMaxUploadBytes;
    long delay_ms = 0;
    bool text_signup = false;
    std::string web_root;

    app.add_option("--listen", listen, "Address to bind, host:port")->capture_default_str();
    app.add_option("--store", store, "Account store file")->capture_default_str();
    app.add_option("--max-upload-bytes", max_upload, "Largest accepted object")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--artificial-delay-ms", delay_ms, "Extra processing time per auth request")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_flag("--allow-text-signup", text_signup, "Enable POST /api/signup/text");
    app.add_option("--web-root", web_root, "Directory of static files served at /");
    CLI11_PARSE(app, argc, argv);

    // Signals are taken synchronously on this thread; the server threads
    // inherit the blocked mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    try {
        objauth::ServerConfig config;
        std::tie(config.host, config.port) = objauth::parse_listen_address(listen);
        config.store_path = store;
        config.max_upload_bytes = max_upload;
        config.artificial_delay = std::chrono::milliseconds(delay_ms);
        config.allow_text_signup = text_signup;
        if (!web_root.empty()) {
            config.web_root = web_root;
        }

        objauth::AuthServer server(config);
        server.start();
        std::cerr << "objauth-server listening on " << server.base_url() << " ("
                  << server.store().size() << " accounts)\n";

        int sig = 0;
        sigwait(&signals, &sig);
        std::cerr << "shutting down\n";
        server.stop();
    } catch (const std::exception& e) {
        std::cerr << "objauth-server: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
