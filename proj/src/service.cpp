#include "opensoc/service.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <random>
#include <thread>

#include <httplib.h>

#include "opensoc/fields.hpp"
#include "opensoc/prompting.hpp"

namespace opensoc {

using ojson = nlohmann::ordered_json;

// ------------------------------------------------------------- registry

void BackendRegistry::add(std::string name, std::shared_ptr<Backend> backend, bool make_default) {
    if (!backend) throw InvalidValue("backend '" + name + "' is null");
    if (find(name)) throw InvalidValue("backend '" + name + "' registered twice");
    if (make_default || entries_.empty()) default_ = name;
    entries_.emplace_back(std::move(name), std::move(backend));
}

std::shared_ptr<Backend> BackendRegistry::find(std::string_view name) const {
    for (const auto& [n, b] : entries_)
        if (n == name) return b;
    return nullptr;
}

BackendRegistry make_registry(const BackendConfig& configured) {
    BackendRegistry reg;
    reg.add("signature", std::make_shared<SignatureBackend>());
    if (configured.kind != BackendKind::Signature) {
        std::shared_ptr<Backend> b = make_backend(configured);
        reg.add(std::string(to_string(configured.kind)), std::move(b), true);
    }
    return reg;
}

std::string_view to_string(JobState s) {
    switch (s) {
        case JobState::Running: return "running";
        case JobState::Done: return "done";
        case JobState::Failed: return "failed";
    }
    return "?";
}

// ------------------------------------------------------------------ jobs

BatchJob::BatchJob(std::string id, std::vector<std::string> lines, std::string backend)
    : id_(std::move(id)),
      backend_(std::move(backend)),
      created_(std::chrono::system_clock::now()),
      started_(std::chrono::steady_clock::now()) {
    rows_.reserve(lines.size());
    for (auto& l : lines) {
        JobRow row;
        row.raw_log = std::move(l);
        rows_.push_back(std::move(row));
    }
    if (rows_.empty()) state_ = JobState::Done;
}

std::size_t BatchJob::completed() const {
    std::lock_guard lock(mu_);
    return completed_;
}

JobState BatchJob::state() const {
    std::lock_guard lock(mu_);
    return state_;
}

void BatchJob::finish_row(std::size_t i, JobRow row) {
    std::lock_guard lock(mu_);
    if (i >= rows_.size() || rows_[i].finished || state_ == JobState::Failed) return;
    row.raw_log = std::move(rows_[i].raw_log);
    row.finished = true;
    rows_[i] = std::move(row);
    if (++completed_ == rows_.size()) {
        state_ = JobState::Done;
        ended_ = std::chrono::steady_clock::now();
    }
}

void BatchJob::fail(std::string reason) {
    std::lock_guard lock(mu_);
    if (state_ != JobState::Running) return;
    state_ = JobState::Failed;
    error_ = std::move(reason);
    ended_ = std::chrono::steady_clock::now();
}

ojson BatchJob::status_json(bool include_results) const {
    std::lock_guard lock(mu_);
    ojson o;
    o["job_id"] = id_;
    o["state"] = to_string(state_);
    o["total"] = rows_.size();
    o["completed"] = completed_;
    o["created_at"] = format_utc(created_);
    o["backend"] = backend_;
    if (!error_.empty()) o["error"] = error_;

    std::vector<std::chrono::nanoseconds> latencies;
    for (const auto& r : rows_)
        if (r.finished && r.error_kind.empty()) latencies.push_back(r.latency);
    const auto wall = ended_.value_or(std::chrono::steady_clock::now()) - started_;
    if (!latencies.empty() && wall.count() > 0) {
        const auto t = throughput_meter(latencies, wall);
        o["throughput"] = {{"entries_per_minute", t.entries_per_minute},
                           {"mean_latency_seconds", t.mean_latency_seconds}};
    }

    if (include_results) {
        ojson results = ojson::array();
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const auto& r = rows_[i];
            if (!r.finished) continue;
            ojson item;
            item["index"] = i;
            item["raw_log"] = r.raw_log;
            if (r.result) {
                item["fields"] = fields_to_json(*r.result);
                item["extraction_empty"] = r.result->empty();
                item["raw_output"] = r.raw_output;
            } else {
                item["fields"] = nullptr;
                item["error"] = {{"kind", r.error_kind}, {"message", r.error_message}};
            }
            results.push_back(std::move(item));
        }
        o["results"] = std::move(results);
    }
    return o;
}

std::string BatchJob::export_csv() const {
    std::lock_guard lock(mu_);
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& r : rows_) {
        if (!r.finished) continue;
        out += r.result ? csv_row(r.raw_log, *r.result)
                        : csv_error_row(r.raw_log, r.error_kind, r.error_message);
        out += '\n';
    }
    if (state_ != JobState::Done)
        out += "# partial: " + std::to_string(completed_) + "/" + std::to_string(rows_.size()) + "\n";
    return out;
}

namespace {

std::string new_job_id() {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mu);
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

}  // namespace

JobStore::JobStore(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 1)) {}

std::shared_ptr<BatchJob> JobStore::create(std::vector<std::string> lines, std::string backend) {
    auto job = std::make_shared<BatchJob>(new_job_id(), std::move(lines), std::move(backend));
    std::lock_guard lock(mu_);
    jobs_.push_front(job);
    while (jobs_.size() > capacity_) {
        // Evict the least recently used job that is no longer running; fall
        // back to the plain LRU victim when every job is still active.
        auto victim = std::prev(jobs_.end());
        for (auto it = jobs_.rbegin(); it != jobs_.rend(); ++it) {
            if ((*it)->state() != JobState::Running) {
                victim = std::prev(it.base());
                break;
            }
        }
        jobs_.erase(victim);
    }
    return job;
}

std::shared_ptr<BatchJob> JobStore::find(std::string_view id) {
    std::lock_guard lock(mu_);
    auto it = std::find_if(jobs_.begin(), jobs_.end(), [&](const auto& j) { return j->id() == id; });
    if (it == jobs_.end()) return nullptr;
    jobs_.splice(jobs_.begin(), jobs_, it);
    return jobs_.front();
}

std::size_t JobStore::size() const {
    std::lock_guard lock(mu_);
    return jobs_.size();
}

// --------------------------------------------------------------- service

struct Service::Impl {
    httplib::Server server;
    std::thread listener;
    std::thread runner;
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::pair<std::shared_ptr<BatchJob>, std::shared_ptr<Backend>>> queue;
    std::atomic<bool> stopping{false};
    bool bound = false;
};

namespace {

void send_json(httplib::Response& res, int status, const ojson& body) {
    res.status = status;
    res.set_content(body.dump(-1, ' ', false, ojson::error_handler_t::replace), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, std::string_view message) {
    send_json(res, status, {{"error", kind}, {"message", message}});
}

void process_job(BatchJob& job, Backend& backend, std::size_t parallelism,
                 const std::atomic<bool>& stopping) {
    if (!backend.reachable()) {
        job.fail("backend '" + job.backend() + "' is unreachable");
        return;
    }
    run_parallel(job.total(), parallelism, [&](std::size_t i) {
        JobRow row;
        try {
            const auto resp = backend.analyze(build_prompt(job.raw_log(i)));
            row.result = extract_fields(resp.raw_text);
            row.raw_output = resp.raw_text;
            row.latency = resp.latency;
        } catch (const Error& e) {
            row.error_kind = e.kind();
            row.error_message = e.what();
        }
        job.finish_row(i, std::move(row));
        return !stopping.load();
    });
}

}  // namespace

Service::Service(ServiceConfig config, BackendRegistry backends)
    : config_(std::move(config)),
      backends_(std::move(backends)),
      jobs_(config_.job_capacity),
      impl_(std::make_unique<Impl>()) {
    if (!backends_.find("signature")) {
        BackendRegistry reg;
        reg.add("signature", std::make_shared<SignatureBackend>(), backends_.entries().empty());
        for (const auto& [n, b] : backends_.entries()) reg.add(n, b, n == backends_.default_name());
        backends_ = std::move(reg);
    }
    if (config_.parallelism < 1) throw InvalidValue("parallelism must be at least 1");

    auto& srv = impl_->server;
    srv.set_tcp_nodelay(true);
    srv.set_payload_max_length(config_.max_upload_bytes);
    srv.new_task_queue = [] { return new httplib::ThreadPool(8); };

    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                                 std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            send_error(res, 500, "InternalError", e.what());
        } catch (...) {
            send_error(res, 500, "InternalError", "unknown failure");
        }
    });

    srv.Post("/api/analyze", [this](const httplib::Request& req, httplib::Response& res) {
        ojson body;
        try {
            body = ojson::parse(req.body);
        } catch (const ojson::exception&) {
            return send_error(res, 400, "BadRequest", "body must be a JSON object");
        }
        if (!body.is_object() || !body.contains("log") || !body["log"].is_string())
            return send_error(res, 400, "BadRequest", "missing string field \"log\"");
        const std::string log(trim(body["log"].get<std::string>()));
        if (log.empty()) return send_error(res, 400, "EmptyInput", "log is empty");

        std::string name = backends_.default_name();
        if (body.contains("backend") && !body["backend"].is_null()) {
            if (!body["backend"].is_string())
                return send_error(res, 400, "BadRequest", "\"backend\" must be a string");
            name = body["backend"].get<std::string>();
        }
        auto backend = backends_.find(name);
        if (!backend) return send_error(res, 400, "UnknownBackend", "no backend named " + name);

        BackendResponse resp;
        try {
            resp = backend->analyze(build_prompt(log));
        } catch (const BackendError& e) {
            return send_error(res, 502, e.kind(), e.what());
        }
        const auto extracted = extract_fields(resp.raw_text);
        ojson out;
        out["fields"] = fields_to_json(extracted);
        out["raw_output"] = resp.raw_text;
        out["latency_ms"] = std::chrono::duration<double, std::milli>(resp.latency).count();
        out["backend"] = name;
        out["attempts"] = resp.attempt_count;
        out["diagnostics"] = extracted.diagnostics;
        send_json(res, 200, out);
    });

    srv.Post("/api/analyze/batch", [this](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_file("file"))
            return send_error(res, 400, "BadRequest", "multipart field \"file\" is required");
        const auto file = req.get_file_value("file");
        const auto format = input_format_for(file.filename);
        if (!format)
            return send_error(res, 400, "UnsupportedFile",
                              "only .log, .txt and .csv uploads are accepted");

        std::string name = backends_.default_name();
        if (req.has_file("backend"))
            name = req.get_file_value("backend").content;
        else if (req.has_param("backend"))
            name = req.get_param_value("backend");
        auto backend = backends_.find(name);
        if (!backend) return send_error(res, 400, "UnknownBackend", "no backend named " + name);

        const ParsedStream parsed = parse_text(file.content, *format);
        if (parsed.entries.empty())
            return send_error(res, 400, "EmptyInput", "upload contains no log lines");

        std::vector<std::string> lines;
        lines.reserve(parsed.entries.size());
        for (const auto& e : parsed.entries) lines.push_back(e.raw);
        auto job = jobs_.create(std::move(lines), name);
        {
            std::lock_guard lock(impl_->mu);
            impl_->queue.emplace_back(job, backend);
        }
        impl_->cv.notify_one();
        send_json(res, 202, {{"job_id", job->id()},
                             {"total", job->total()},
                             {"skipped", parsed.skipped}});
    });

    srv.Get(R"(/api/jobs/([^/]+)/export\.csv)",
            [this](const httplib::Request& req, httplib::Response& res) {
                auto job = jobs_.find(req.matches[1].str());
                if (!job) return send_error(res, 404, "NotFound", "unknown job id");
                res.set_header("Content-Disposition",
                               "attachment; filename=\"" + job->id() + ".csv\"");
                res.set_content(job->export_csv(), "text/csv; charset=utf-8");
            });

    srv.Get(R"(/api/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        auto job = jobs_.find(req.matches[1].str());
        if (!job) return send_error(res, 404, "NotFound", "unknown job id");
        const bool results = !(req.has_param("results") && req.get_param_value("results") == "0");
        send_json(res, 200, job->status_json(results));
    });

    srv.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
        ojson reach = ojson::object();
        for (const auto& [n, b] : backends_.entries())
            reach[n] = b->reachable() ? "reachable" : "unreachable";
        send_json(res, 200, {{"status", "ok"},
                             {"version", kVersion},
                             {"default_backend", backends_.default_name()},
                             {"backends", reach}});
    });

    srv.Get("/api/backends", [this](const httplib::Request&, httplib::Response& res) {
        ojson list = ojson::array();
        for (const auto& [n, b] : backends_.entries())
            list.push_back({{"name", n},
                            {"kind", to_string(b->kind())},
                            {"default", n == backends_.default_name()}});
        send_json(res, 200, {{"backends", list}});
    });

    if (config_.static_dir && std::filesystem::is_directory(*config_.static_dir))
        srv.set_mount_point("/", *config_.static_dir);

    impl_->runner = std::thread([this] {
        for (;;) {
            std::pair<std::shared_ptr<BatchJob>, std::shared_ptr<Backend>> next;
            {
                std::unique_lock lock(impl_->mu);
                impl_->cv.wait(lock, [&] { return impl_->stopping || !impl_->queue.empty(); });
                if (impl_->stopping) return;
                next = std::move(impl_->queue.front());
                impl_->queue.pop_front();
            }
            process_job(*next.first, *next.second, config_.parallelism, impl_->stopping);
        }
    });
}

Service::~Service() { stop(); }

int Service::bind() {
    if (impl_->bound) return port_;
    if (config_.port == 0) {
        port_ = impl_->server.bind_to_any_port(config_.host);
    } else {
        port_ = impl_->server.bind_to_port(config_.host, config_.port) ? config_.port : -1;
    }
    if (port_ < 0)
        throw Error("cannot listen on " + config_.host + ":" + std::to_string(config_.port));
    impl_->bound = true;
    return port_;
}

void Service::run() {
    bind();
    impl_->server.listen_after_bind();
}

void Service::start() {
    bind();
    impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void Service::stop() {
    if (!impl_) return;
    {
        std::lock_guard lock(impl_->mu);
        impl_->stopping = true;
    }
    impl_->cv.notify_all();
    impl_->server.stop();
    if (impl_->listener.joinable()) impl_->listener.join();
    if (impl_->runner.joinable()) impl_->runner.join();
}

}  // namespace opensoc
