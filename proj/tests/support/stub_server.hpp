#pragma once

// Minimal chat-completions server for backend and service tests.

#include <atomic>
#include <chrono>
#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace stub {

struct Reply {
    int status = 200;
    std::string content;  // message content for 200 replies, raw body otherwise
};

class ChatServer {
public:
    /// Replies are consumed in order; when exhausted, `fallback` repeats.
    explicit ChatServer(std::deque<Reply> script = {}, Reply fallback = {200, "THREAT_TYPE: Benign"},
                        std::chrono::milliseconds latency = std::chrono::milliseconds(0))
        : script_(std::move(script)), fallback_(std::move(fallback)), latency_(latency) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            ++calls_;
            {
                std::lock_guard lock(mu_);
                bodies_.push_back(req.body);
            }
            if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
            Reply r = next();
            res.status = r.status;
            if (r.status == 200) {
                nlohmann::json body = {
                    {"id", "stub"},
                    {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", r.content}}}}}}};
                res.set_content(body.dump(), "application/json");
            } else {
                res.set_content(r.content, "text/plain");
            }
        });
        server_.Get("/v1/models", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"data":[{"id":"stub"}]})", "application/json");
        });
        server_.set_tcp_nodelay(true);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~ChatServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    int calls() const { return calls_.load(); }
    std::vector<std::string> bodies() const {
        std::lock_guard lock(mu_);
        return bodies_;
    }

private:
    Reply next() {
        std::lock_guard lock(mu_);
        if (script_.empty()) return fallback_;
        Reply r = std::move(script_.front());
        script_.pop_front();
        return r;
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = -1;
    mutable std::mutex mu_;
    std::deque<Reply> script_;
    Reply fallback_;
    std::chrono::milliseconds latency_;
    std::atomic<int> calls_{0};
    std::vector<std::string> bodies_;
};

/// A local port with nothing listening on it.
inline int closed_port() {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    socklen_t len = sizeof addr;
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);  // never listened, so connects are refused
    return ntohs(addr.sin_port);
}

}  // namespace stub
