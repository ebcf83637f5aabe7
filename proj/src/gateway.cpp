#include "natval/gateway.hpp"

#include <atomic>
#include <ctime>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "natval/csv.hpp"
#include "natval/hash.hpp"

namespace natval {

using json = nlohmann::json;

std::string ScoreRequest::fingerprint() const {
    const auto variant = to_string(prompt.variant);
    const auto run = std::to_string(run_index);
    std::string buf;
    for (std::string_view part : {std::string_view(prompt.system_text), std::string_view(user_text), variant,
                                  std::string_view(run)}) {
        buf += std::to_string(part.size());
        buf += ':';
        buf += part;
    }
    return sha256_hex(buf);
}

ScoreRequest make_request(std::string article_id, PromptSpec prompt, std::string user_text, int run_index) {
    if (run_index < 1) throw Error(fmt::format("run index {} must be >= 1", run_index));
    ScoreRequest r;
    r.article_id = std::move(article_id);
    r.want_token_probabilities = prompt.variant == Variant::ProbabilityOnly;
    r.prompt = std::move(prompt);
    r.user_text = std::move(user_text);
    r.run_index = run_index;
    return r;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---------------------------------------------------------------------------
// Cache

namespace {

json to_json(const RawResponse& r) {
    json j;
    j["fingerprint"] = r.fingerprint;
    j["provider_id"] = r.provider_id;
    j["timestamp"] = r.timestamp;
    j["text"] = r.text;
    if (r.token_probabilities) {
        j["token_probabilities"] = json::array();
        for (const auto& tp : *r.token_probabilities)
            j["token_probabilities"].push_back({{"token", tp.token}, {"p", tp.probability}});
    } else {
        j["token_probabilities"] = nullptr;
    }
    return j;
}

RawResponse from_json(const json& j) {
    RawResponse r;
    r.fingerprint = j.at("fingerprint").get<std::string>();
    r.provider_id = j.at("provider_id").get<std::string>();
    r.timestamp = j.at("timestamp").get<std::string>();
    r.text = j.at("text").get<std::string>();
    if (const auto& tps = j.at("token_probabilities"); !tps.is_null()) {
        r.token_probabilities.emplace();
        for (const auto& tp : tps)
            r.token_probabilities->push_back({tp.at("token").get<std::string>(), tp.at("p").get<double>()});
    }
    return r;
}

std::optional<RawResponse> read_entry(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    try {
        return from_json(json::parse(in));
    } catch (const json::exception&) {
        return std::nullopt;  // torn or foreign file: treated as a miss and rewritten
    }
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::path_for(const std::string& fingerprint) const {
    return dir_ / (fingerprint + ".json");
}

std::optional<RawResponse> ResponseCache::find(const std::string& fingerprint) const {
    return read_entry(path_for(fingerprint));
}

void ResponseCache::store(const RawResponse& response) {
    if (response.fingerprint.empty()) throw Error("cannot cache a response without a fingerprint");
    std::lock_guard lock(mutex_);
    const auto target = path_for(response.fingerprint);
    if (read_entry(target)) return;
    const auto tmp = dir_ / (response.fingerprint + ".json.tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(fmt::format("cannot write cache entry '{}'", tmp.string()));
        out << to_json(response).dump(2) << '\n';
    }
    std::filesystem::rename(tmp, target);
}

std::size_t ResponseCache::size() const {
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir_)) {
        if (e.path().extension() == ".json") ++n;
    }
    return n;
}

// ---------------------------------------------------------------------------
// Batch execution

namespace {

class TokenBucket {
public:
    TokenBucket(double rate, std::size_t burst)
        : rate_(rate), capacity_(static_cast<double>(std::max<std::size_t>(burst, 1))), tokens_(capacity_),
          last_(std::chrono::steady_clock::now()) {}

    void acquire() {
        if (rate_ <= 0.0) return;
        std::unique_lock lock(mutex_);
        while (true) {
            const auto now = std::chrono::steady_clock::now();
            tokens_ = std::min(capacity_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
            last_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
            lock.unlock();
            std::this_thread::sleep_for(wait);
            lock.lock();
        }
    }

private:
    double rate_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

void validate_response(const ScoreRequest& req, const RawResponse& resp) {
    if (req.want_token_probabilities && !resp.token_probabilities)
        throw TransientError("provider returned no token probabilities");
    if (resp.token_probabilities) {
        for (const auto& tp : *resp.token_probabilities) {
            if (!(tp.probability >= 0.0 && tp.probability <= 1.0))
                throw Error(fmt::format("token probability {} outside [0, 1]", tp.probability));
        }
    }
}

FailureRecord failure_for(const ScoreRequest& req, const std::string& fp, int attempts, std::string error) {
    return FailureRecord{fp,          req.article_id,          req.prompt.regime, req.prompt.panel,
                         req.prompt.variant, req.run_index, attempts,          std::move(error)};
}

}  // namespace

BatchResult execute_batch(std::span<const ScoreRequest> requests, ScoringProvider& provider,
                          const BatchPolicy& policy, ResponseCache& cache) {
    if (requests.empty()) throw Error("empty request batch");
    if (policy.max_retries < 0) throw Error("max_retries must be >= 0");

    std::vector<std::optional<BatchOutcome>> slots(requests.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::atomic<std::size_t> calls{0}, hits{0}, retries{0}, failures{0};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;
    TokenBucket bucket(policy.requests_per_second, policy.burst);

    auto work = [&] {
        while (!abort.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= requests.size()) return;
            const auto& req = requests[i];
            if (req.want_token_probabilities != (req.prompt.variant == Variant::ProbabilityOnly)) {
                slots[i] = BatchOutcome{req, failure_for(req, req.fingerprint(), 0, "probability flag does not match variant"), false};
                ++failures;
                continue;
            }
            const auto fp = req.fingerprint();
            if (auto cached = cache.find(fp)) {
                ++hits;
                slots[i] = BatchOutcome{req, std::move(*cached), true};
                continue;
            }

            auto delay = policy.backoff;
            for (int attempt = 1;; ++attempt) {
                if (abort.load()) return;
                bucket.acquire();
                ++calls;
                try {
                    auto resp = provider.complete(req);
                    resp.fingerprint = fp;
                    if (resp.provider_id.empty()) resp.provider_id = provider.id();
                    if (resp.timestamp.empty()) resp.timestamp = utc_timestamp();
                    validate_response(req, resp);
                    cache.store(resp);
                    slots[i] = BatchOutcome{req, std::move(resp), false};
                    break;
                } catch (const AuthError&) {
                    std::lock_guard lock(fatal_mutex);
                    if (!fatal) fatal = std::current_exception();
                    abort = true;
                    return;
                } catch (const TransientError& e) {
                    if (attempt > policy.max_retries) {
                        ++failures;
                        slots[i] = BatchOutcome{req, failure_for(req, fp, attempt, e.what()), false};
                        break;
                    }
                    ++retries;
                    std::this_thread::sleep_for(delay);
                    delay = std::chrono::milliseconds(
                        static_cast<long long>(static_cast<double>(delay.count()) * policy.backoff_multiplier));
                } catch (const std::exception& e) {
                    ++failures;
                    slots[i] = BatchOutcome{req, failure_for(req, fp, attempt, e.what()), false};
                    break;
                }
            }
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(policy.max_in_flight, 1, requests.size());
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (fatal) std::rethrow_exception(fatal);

    BatchResult result;
    result.outcomes.reserve(requests.size());
    for (auto& s : slots) result.outcomes.push_back(std::move(*s));
    result.telemetry = BatchTelemetry{calls.load(), hits.load(), retries.load(), failures.load()};
    return result;
}

void write_failures_csv(std::ostream& out, const std::vector<FailureRecord>& failures) {
    csv::write_row(out, {"fingerprint", "article_id", "regime", "panel", "variant", "run_index", "attempts", "error"});
    for (const auto& f : failures) {
        csv::write_row(out, {f.fingerprint, f.article_id, std::string(to_string(f.regime)), std::string(to_string(f.panel)),
                             std::string(to_string(f.variant)), std::to_string(f.run_index), std::to_string(f.attempts),
                             f.error});
    }
}

}  // namespace natval
