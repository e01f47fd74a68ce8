#pragma once

// Runs a Service on an ephemeral port with a matching client.

#include <chrono>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "opensoc/service.hpp"

namespace harness {

struct Running {
    std::unique_ptr<opensoc::Service> service;
    std::unique_ptr<httplib::Client> client;

    explicit Running(opensoc::BackendRegistry registry, opensoc::ServiceConfig cfg = {}) {
        cfg.host = "127.0.0.1";
        cfg.port = 0;
        service = std::make_unique<opensoc::Service>(cfg, std::move(registry));
        service->start();
        client = make_client();
    }

    std::unique_ptr<httplib::Client> make_client() const {
        auto c = std::make_unique<httplib::Client>("127.0.0.1", service->port());
        c->set_read_timeout(std::chrono::seconds(20));
        return c;
    }

    httplib::Result post_json(const std::string& path, const nlohmann::json& body) {
        return client->Post(path, body.dump(), "application/json");
    }

    httplib::Result upload(const std::string& filename, const std::string& content,
                           const std::string& backend = "") {
        httplib::MultipartFormDataItems items = {{"file", content, filename, "text/plain"}};
        if (!backend.empty()) items.push_back({"backend", backend, "", ""});
        return client->Post("/api/analyze/batch", items);
    }

    nlohmann::json job(const std::string& id, bool results = true) {
        auto r = client->Get("/api/jobs/" + id + (results ? "" : "?results=0"));
        return nlohmann::json::parse(r->body);
    }

    /// Polls until the job leaves "running"; returns the observed completed counts.
    std::vector<std::size_t> wait_done(const std::string& id,
                                       std::chrono::seconds limit = std::chrono::seconds(20)) {
        std::vector<std::size_t> seen;
        const auto deadline = std::chrono::steady_clock::now() + limit;
        while (std::chrono::steady_clock::now() < deadline) {
            auto j = job(id, false);
            seen.push_back(j["completed"].get<std::size_t>());
            if (j["state"] != "running") break;
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        return seen;
    }

    ~Running() {
        client.reset();
        service->stop();
    }
};

}  // namespace harness
