#include "opensoc/backend.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <regex>
#include <sstream>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "opensoc/logparse.hpp"
#include "opensoc/prompting.hpp"

namespace opensoc {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string_view to_string(BackendKind k) {
    switch (k) {
        case BackendKind::Signature: return "signature";
        case BackendKind::Remote: return "remote";
        case BackendKind::Replay: return "replay";
    }
    return "?";
}

BackendKind parse_backend_kind(std::string_view text) {
    for (auto k : {BackendKind::Signature, BackendKind::Remote, BackendKind::Replay})
        if (iequals(text, to_string(k))) return k;
    throw InvalidValue("unknown backend '" + std::string(text) +
                       "' (expected signature, remote or replay)");
}

void BackendConfig::validate() const {
    if (kind == BackendKind::Remote && (!endpoint_url || endpoint_url->empty()))
        throw InvalidValue("remote backend requires an endpoint URL");
    if (kind == BackendKind::Replay && (!replay_path || replay_path->empty()))
        throw InvalidValue("replay backend requires a recording file");
    if (max_new_tokens < 1) throw InvalidValue("max_new_tokens must be positive");
    if (temperature < 0) throw InvalidValue("temperature must be non-negative");
    if (timeout.count() <= 0) throw InvalidValue("timeout must be positive");
    if (retries < 0) throw InvalidValue("retries must be non-negative");
    if (pool_size < 1) throw InvalidValue("pool_size must be positive");
}

BackendResponse Backend::analyze(std::string_view prompt) {
    const auto start = Clock::now();
    for (int n = 1;; ++n) {
        try {
            std::string text = attempt(prompt);
            return {std::move(text), Clock::now() - start, n};
        } catch (const ReplayMiss&) {
            throw;
        } catch (const BackendError&) {
            if (n > retries_) throw;
        }
    }
}

// ---------------------------------------------------------------- signature

SignatureBackend::SignatureBackend(RuleTable rules) : Backend(0), rules_(std::move(rules)) {}

std::string SignatureBackend::attempt(std::string_view prompt) {
    const auto line = split_prompt(prompt);
    const std::string_view text = line ? std::string_view(*line) : prompt;
    return render_output(classify_entry(parse_line(text), rules_));
}

// ------------------------------------------------------------------- remote

struct RemoteBackend::Pool {
    std::mutex mu;
    std::condition_variable cv;
    std::vector<std::unique_ptr<httplib::Client>> idle;
    std::size_t created = 0;
};

namespace {

class PooledClient {
public:
    PooledClient(RemoteBackend::Pool& pool, std::unique_ptr<httplib::Client> c)
        : pool_(pool), client_(std::move(c)) {}
    ~PooledClient() {
        std::lock_guard lock(pool_.mu);
        pool_.idle.push_back(std::move(client_));
        pool_.cv.notify_one();
    }
    httplib::Client* operator->() { return client_.get(); }

private:
    RemoteBackend::Pool& pool_;
    std::unique_ptr<httplib::Client> client_;
};

std::string excerpt(std::string_view body) {
    constexpr std::size_t kMax = 200;
    std::string out(body.substr(0, kMax));
    std::replace_if(out.begin(), out.end(), [](char c) { return c == '\n' || c == '\r'; }, ' ');
    if (body.size() > kMax) out += "...";
    return out;
}

[[noreturn]] void throw_transport(httplib::Error err, const std::string& where) {
    const std::string msg = where + ": " + httplib::to_string(err);
    switch (err) {
        case httplib::Error::Read:
        case httplib::Error::Write:
        case httplib::Error::ConnectionTimeout:
            throw Timeout(msg);
        default:
            throw BackendUnavailable(msg);
    }
}

}  // namespace

RemoteBackend::RemoteBackend(BackendConfig config)
    : Backend(config.retries), config_(std::move(config)), pool_(std::make_unique<Pool>()) {
    config_.kind = BackendKind::Remote;
    config_.validate();
    static const std::regex url_re(R"(^(https?)://([^/?#]+)([^?#]*)$)", std::regex::icase);
    std::smatch m;
    const std::string& url = *config_.endpoint_url;
    if (!std::regex_match(url, m, url_re))
        throw InvalidValue("endpoint URL must look like http://host[:port][/path]: " + url);
    origin_ = to_lower(m[1].str()) + "://" + m[2].str();
    base_path_ = m[3].str();
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
}

RemoteBackend::~RemoteBackend() = default;

namespace {

std::unique_ptr<httplib::Client> new_client(const std::string& origin,
                                            std::chrono::milliseconds timeout) {
    auto c = std::make_unique<httplib::Client>(origin);
    if (!c->is_valid()) throw InvalidValue("unsupported endpoint " + origin);
    c->set_connection_timeout(timeout);
    c->set_read_timeout(timeout);
    c->set_write_timeout(timeout);
    c->set_keep_alive(true);
    c->set_tcp_nodelay(true);
    return c;
}

}  // namespace

std::string RemoteBackend::attempt(std::string_view prompt) {
    std::unique_ptr<httplib::Client> raw;
    {
        std::unique_lock lock(pool_->mu);
        pool_->cv.wait(lock, [&] {
            return !pool_->idle.empty() || pool_->created < config_.pool_size;
        });
        if (!pool_->idle.empty()) {
            raw = std::move(pool_->idle.back());
            pool_->idle.pop_back();
        } else {
            ++pool_->created;
        }
    }
    if (!raw) {
        try {
            raw = new_client(origin_, config_.timeout);
        } catch (...) {
            std::lock_guard lock(pool_->mu);
            --pool_->created;
            pool_->cv.notify_one();
            throw;
        }
    }
    PooledClient client(*pool_, std::move(raw));

    json body = {
        {"model", config_.model_name.value_or("default")},
        {"messages", json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
        {"temperature", config_.temperature},
        {"max_tokens", config_.max_new_tokens},
    };
    const std::string path = base_path_ + "/chat/completions";
    auto res = client->Post(path, body.dump(), "application/json");
    if (!res) throw_transport(res.error(), origin_ + path);
    if (res->status < 200 || res->status >= 300) throw RemoteError(res->status, excerpt(res->body));

    try {
        const json reply = json::parse(res->body);
        const auto& content = reply.at("choices").at(0).at("message").at("content");
        if (content.is_null()) return {};
        return content.get<std::string>();
    } catch (const json::exception&) {
        throw RemoteError(res->status, "malformed completion body: " + excerpt(res->body));
    }
}

bool RemoteBackend::reachable() const {
    try {
        auto c = new_client(origin_, std::min(config_.timeout, std::chrono::milliseconds(2000)));
        // Any HTTP answer proves the server is up; only transport failures count.
        return static_cast<bool>(c->Get(base_path_ + "/models"));
    } catch (const Error&) {
        return false;
    }
}

// ------------------------------------------------------------------- replay

std::string prompt_key(std::string_view prompt) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(prompt.data(), prompt.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

ReplayBackend::ReplayBackend(std::map<std::string, std::string> recordings)
    : Backend(0), recordings_(std::move(recordings)) {}

std::unique_ptr<ReplayBackend> ReplayBackend::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BackendUnavailable("cannot read replay file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::make_unique<ReplayBackend>(replay_from_json(ss.str()));
}

std::string ReplayBackend::attempt(std::string_view prompt) {
    const std::string key = prompt_key(prompt);
    const auto it = recordings_.find(key);
    if (it == recordings_.end()) throw ReplayMiss("no recording for prompt " + key);
    return it->second;
}

std::string replay_to_json(const std::map<std::string, std::string>& recordings) {
    return json(recordings).dump(2) + "\n";
}

std::map<std::string, std::string> replay_from_json(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw InvalidValue(std::string("replay file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw InvalidValue("replay file must be a JSON object");
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : doc.items()) {
        if (!v.is_string()) throw InvalidValue("replay entry " + k + " is not a string");
        out.emplace(to_lower(k), v.get<std::string>());
    }
    return out;
}

void save_replay(const std::string& path, const std::map<std::string, std::string>& recordings) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << replay_to_json(recordings);
}

// ------------------------------------------------------------------ factory

BackendConfig with_environment(BackendConfig config) {
    if (!config.endpoint_url) {
        if (const char* env = std::getenv("OPENSOC_BACKEND_URL"); env && *env)
            config.endpoint_url = env;
    }
    return config;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
    config.validate();
    switch (config.kind) {
        case BackendKind::Signature: return std::make_unique<SignatureBackend>();
        case BackendKind::Remote: return std::make_unique<RemoteBackend>(config);
        case BackendKind::Replay: return ReplayBackend::load(*config.replay_path);
    }
    throw InvalidValue("unknown backend kind");
}

BackendResponse analyze(std::string_view prompt, const BackendConfig& config) {
    return make_backend(config)->analyze(prompt);
}

// --------------------------------------------------------------- throughput

ThroughputReport throughput_meter(std::span<const std::chrono::nanoseconds> latencies,
                                  std::chrono::nanoseconds wall) {
    if (latencies.empty()) throw InvalidValue("throughput needs at least one completed entry");
    if (wall.count() <= 0) throw InvalidValue("wall time must be positive");
    using secs = std::chrono::duration<double>;
    ThroughputReport r;
    r.entries = latencies.size();
    r.wall_seconds = std::chrono::duration_cast<secs>(wall).count();
    r.entries_per_minute = 60.0 * static_cast<double>(r.entries) / r.wall_seconds;
    const auto total = std::accumulate(latencies.begin(), latencies.end(),
                                       std::chrono::nanoseconds{0});
    r.mean_latency_seconds =
        std::chrono::duration_cast<secs>(total).count() / static_cast<double>(r.entries);
    return r;
}

ThroughputReport throughput_meter(std::span<const std::chrono::nanoseconds> latencies) {
    return throughput_meter(latencies, std::accumulate(latencies.begin(), latencies.end(),
                                                       std::chrono::nanoseconds{0}));
}

// ---------------------------------------------------------------- execution

void run_parallel(std::size_t count, std::size_t parallelism,
                  const std::function<bool(std::size_t)>& body) {
    if (count == 0) return;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr failure;
    std::mutex failure_mu;

    auto worker = [&] {
        while (!stop.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                if (!body(i)) stop = true;
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                stop = true;
            }
        }
    };

    const std::size_t n = std::clamp<std::size_t>(parallelism, 1, count);
    if (n == 1) {
        worker();
    } else {
        std::vector<std::jthread> threads;
        threads.reserve(n);
        for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace opensoc
