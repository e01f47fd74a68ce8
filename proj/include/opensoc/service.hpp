#pragma once

#include <chrono>
#include <cstddef>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "opensoc/backend.hpp"
#include "opensoc/extraction.hpp"
#include "opensoc/logparse.hpp"

namespace opensoc {

inline constexpr std::string_view kVersion = "0.1.0";

/// Named backends offered by the service; the first one added is the
/// default unless another is marked.
class BackendRegistry {
public:
    void add(std::string name, std::shared_ptr<Backend> backend, bool make_default = false);
    std::shared_ptr<Backend> find(std::string_view name) const;
    const std::string& default_name() const { return default_; }
    const std::vector<std::pair<std::string, std::shared_ptr<Backend>>>& entries() const {
        return entries_;
    }

private:
    std::vector<std::pair<std::string, std::shared_ptr<Backend>>> entries_;
    std::string default_;
};

/// "signature" always; plus the configured remote/replay backend, which then
/// becomes the default.
BackendRegistry make_registry(const BackendConfig& configured);

enum class JobState { Running, Done, Failed };
std::string_view to_string(JobState s);

struct JobRow {
    std::string raw_log;
    bool finished = false;
    std::optional<ExtractionResult> result;
    std::string raw_output;
    std::string error_kind;  // non-empty for a backend failure marker
    std::string error_message;
    std::chrono::nanoseconds latency{0};
};

/// One uploaded batch. All accessors lock; rows keep input order.
class BatchJob {
public:
    BatchJob(std::string id, std::vector<std::string> lines, std::string backend);

    const std::string& id() const { return id_; }
    const std::string& backend() const { return backend_; }
    std::size_t total() const { return rows_.size(); }
    std::size_t completed() const;
    JobState state() const;
    std::string raw_log(std::size_t i) const { return rows_[i].raw_log; }

    void finish_row(std::size_t i, JobRow row);
    void fail(std::string reason);

    nlohmann::ordered_json status_json(bool include_results = true) const;
    /// Header, one row per finished entry in input order, and a trailing
    /// "# partial: k/total" line unless Done.
    std::string export_csv() const;

private:
    mutable std::mutex mu_;
    const std::string id_;
    const std::string backend_;
    const std::chrono::system_clock::time_point created_;
    const std::chrono::steady_clock::time_point started_;
    std::optional<std::chrono::steady_clock::time_point> ended_;
    std::vector<JobRow> rows_;
    std::size_t completed_ = 0;
    JobState state_ = JobState::Running;
    std::string error_;
};

/// Bounded in-memory job table; least recently used finished jobs go first.
class JobStore {
public:
    explicit JobStore(std::size_t capacity = 100);
    std::shared_ptr<BatchJob> create(std::vector<std::string> lines, std::string backend);
    std::shared_ptr<BatchJob> find(std::string_view id);
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::size_t capacity_;
    std::list<std::shared_ptr<BatchJob>> jobs_;  // front = most recently used
};

struct ServiceConfig {
    std::string host = "0.0.0.0";
    int port = 8080;  // 0 binds an ephemeral port
    std::size_t parallelism = 4;
    std::size_t max_upload_bytes = 10 * 1024 * 1024;
    std::size_t job_capacity = 100;
    std::optional<std::string> static_dir;
};

class Service {
public:
    Service(ServiceConfig config, BackendRegistry backends);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds the listening socket; returns the bound port. Throws Error.
    int bind();
    /// Serves until stop(); binds first if needed.
    void run();
    /// bind() plus run() on a background thread.
    void start();
    void stop();

    int port() const { return port_; }
    JobStore& jobs() { return jobs_; }

private:
    struct Impl;
    ServiceConfig config_;
    BackendRegistry backends_;
    JobStore jobs_;
    int port_ = -1;
    std::unique_ptr<Impl> impl_;
};

}  // namespace opensoc
