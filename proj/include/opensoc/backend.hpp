#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "opensoc/core.hpp"
#include "opensoc/signatures.hpp"

namespace opensoc {

/// Anything that went wrong while obtaining model output.
OPENSOC_DEFINE_ERROR(BackendError);
OPENSOC_DEFINE_ERROR_FROM(Timeout, BackendError);
OPENSOC_DEFINE_ERROR_FROM(BackendUnavailable, BackendError);
OPENSOC_DEFINE_ERROR_FROM(ReplayMiss, BackendError);

class RemoteError : public BackendError {
public:
    RemoteError(int status, std::string body_excerpt)
        : BackendError("remote returned HTTP " + std::to_string(status) +
                       (body_excerpt.empty() ? "" : ": " + body_excerpt)),
          status_(status),
          excerpt_(std::move(body_excerpt)) {}
    const char* kind() const noexcept override { return "RemoteError"; }
    int status() const { return status_; }
    const std::string& body_excerpt() const { return excerpt_; }

private:
    int status_;
    std::string excerpt_;
};

enum class BackendKind { Signature, Remote, Replay };

std::string_view to_string(BackendKind k);
BackendKind parse_backend_kind(std::string_view text);  // throws InvalidValue

struct BackendConfig {
    BackendKind kind = BackendKind::Signature;
    std::optional<std::string> endpoint_url;
    std::optional<std::string> model_name;
    int max_new_tokens = 256;
    double temperature = 0.0;
    std::chrono::milliseconds timeout{60'000};
    int retries = 2;
    std::optional<std::string> replay_path;
    std::size_t pool_size = 8;  // remote connections kept open

    /// Throws InvalidValue when required fields for `kind` are missing.
    void validate() const;
};

struct BackendResponse {
    std::string raw_text;
    std::chrono::nanoseconds latency{0};
    int attempt_count = 1;
};

/// Thread-safe analysis backend. analyze() applies the retry policy around
/// attempt(); ReplayMiss is never retried.
class Backend {
public:
    explicit Backend(int retries = 0) : retries_(retries) {}
    virtual ~Backend() = default;
    Backend(const Backend&) = delete;
    Backend& operator=(const Backend&) = delete;

    BackendResponse analyze(std::string_view prompt);

    virtual BackendKind kind() const = 0;
    virtual std::string name() const { return std::string(to_string(kind())); }
    /// Cheap liveness probe; local backends are always reachable.
    virtual bool reachable() const { return true; }

protected:
    virtual std::string attempt(std::string_view prompt) = 0;

private:
    int retries_;
};

class SignatureBackend final : public Backend {
public:
    explicit SignatureBackend(RuleTable rules = builtin_rule_table());
    BackendKind kind() const override { return BackendKind::Signature; }

protected:
    std::string attempt(std::string_view prompt) override;

private:
    RuleTable rules_;
};

/// Chat-completions client: POST {endpoint}/chat/completions.
class RemoteBackend final : public Backend {
public:
    explicit RemoteBackend(BackendConfig config);
    ~RemoteBackend() override;

    BackendKind kind() const override { return BackendKind::Remote; }
    bool reachable() const override;
    const std::string& endpoint() const { return config_.endpoint_url.value(); }

    struct Pool;  // bounded set of keep-alive connections

protected:
    std::string attempt(std::string_view prompt) override;

private:
    BackendConfig config_;
    std::string origin_;     // scheme://host[:port]
    std::string base_path_;  // path prefix without trailing slash
    std::unique_ptr<Pool> pool_;
};

/// Lowercase hex SHA-256 of the exact prompt bytes.
std::string prompt_key(std::string_view prompt);

/// Recorded outputs keyed by prompt_key(prompt).
class ReplayBackend final : public Backend {
public:
    explicit ReplayBackend(std::map<std::string, std::string> recordings);
    static std::unique_ptr<ReplayBackend> load(const std::string& path);

    BackendKind kind() const override { return BackendKind::Replay; }
    std::size_t size() const { return recordings_.size(); }

protected:
    std::string attempt(std::string_view prompt) override;

private:
    std::map<std::string, std::string> recordings_;
};

/// JSON object {prompt_sha256: raw_text}.
std::string replay_to_json(const std::map<std::string, std::string>& recordings);
std::map<std::string, std::string> replay_from_json(std::string_view json_text);
void save_replay(const std::string& path, const std::map<std::string, std::string>& recordings);

/// Applies OPENSOC_BACKEND_URL when endpoint_url is unset.
BackendConfig with_environment(BackendConfig config);

std::unique_ptr<Backend> make_backend(const BackendConfig& config);

/// One-shot convenience wrapper around make_backend(config)->analyze(prompt).
BackendResponse analyze(std::string_view prompt, const BackendConfig& config);

struct ThroughputReport {
    std::size_t entries = 0;
    double wall_seconds = 0;
    double entries_per_minute = 0;
    double mean_latency_seconds = 0;
};

/// entries/minute = 60 n / wall. Throws InvalidValue with no entries or a
/// non-positive wall time.
ThroughputReport throughput_meter(std::span<const std::chrono::nanoseconds> latencies,
                                  std::chrono::nanoseconds wall);
/// Sequential run: wall time is the sum of the latencies.
ThroughputReport throughput_meter(std::span<const std::chrono::nanoseconds> latencies);

/// Runs body(i) for i in [0, count) on up to `parallelism` threads, handing
/// out indices in increasing order. A body returning false stops the
/// hand-out; indices already started still finish. Exceptions escaping a
/// body are rethrown after all workers stop.
void run_parallel(std::size_t count, std::size_t parallelism,
                  const std::function<bool(std::size_t)>& body);

}  // namespace opensoc
