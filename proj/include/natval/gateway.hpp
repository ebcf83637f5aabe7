#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "natval/error.hpp"
#include "natval/promptkit.hpp"

namespace natval {

struct ScoreRequest {
    std::string article_id;
    PromptSpec prompt;
    std::string user_text;
    int run_index = 1;
    bool want_token_probabilities = false;

    /// SHA-256 over (system_text, user_text, variant, run_index), length-prefixed.
    std::string fingerprint() const;
};

ScoreRequest make_request(std::string article_id, PromptSpec prompt, std::string user_text, int run_index);

struct TokenProbability {
    std::string token;
    double probability = 0.0;
};

struct RawResponse {
    std::string text;
    /// Distribution at the score position; present iff probabilities were requested.
    std::optional<std::vector<TokenProbability>> token_probabilities;
    std::string provider_id;
    std::string timestamp;
    std::string fingerprint;
};

/// Stateless scoring backend. Each call is an independent session; implementations
/// must tolerate concurrent calls.
class ScoringProvider {
public:
    virtual ~ScoringProvider() = default;
    virtual std::string id() const = 0;
    virtual RawResponse complete(const ScoreRequest& request) = 0;
};

/// Retryable provider failure (timeouts, rate limiting, 5xx).
class TransientError : public Error {
public:
    using Error::Error;
};

/// Credentials rejected; aborts the whole batch.
class AuthError : public Error {
public:
    using Error::Error;
};

/// On-disk directory of `<fingerprint>.json` documents. Entries are never overwritten.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<RawResponse> find(const std::string& fingerprint) const;
    /// No-op when an entry for the fingerprint already exists.
    void store(const RawResponse& response);
    std::size_t size() const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path path_for(const std::string& fingerprint) const;

    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

struct BatchPolicy {
    std::size_t max_in_flight = 4;
    int max_retries = 3;
    std::chrono::milliseconds backoff{500};
    double backoff_multiplier = 2.0;
    /// Token-bucket refill rate shared by all workers; 0 disables rate limiting.
    double requests_per_second = 0.0;
    std::size_t burst = 1;
};

struct FailureRecord {
    std::string fingerprint;
    std::string article_id;
    Regime regime = Regime::Quality;
    Panel panel = Panel::A;
    Variant variant = Variant::Report;
    int run_index = 1;
    int attempts = 0;
    std::string error;
};

struct BatchTelemetry {
    std::size_t provider_calls = 0;
    std::size_t cache_hits = 0;
    std::size_t retries = 0;
    std::size_t failures = 0;
};

struct BatchOutcome {
    ScoreRequest request;
    std::variant<RawResponse, FailureRecord> result;
    bool from_cache = false;

    bool ok() const { return std::holds_alternative<RawResponse>(result); }
    const RawResponse& response() const { return std::get<RawResponse>(result); }
};

struct BatchResult {
    /// Same order as the input requests.
    std::vector<BatchOutcome> outcomes;
    BatchTelemetry telemetry;
};

/// Runs every request once (cache first), retrying TransientError with exponential
/// backoff. Other provider errors are recorded without retry. AuthError stops all
/// workers and is rethrown; responses completed before it remain cached.
BatchResult execute_batch(std::span<const ScoreRequest> requests, ScoringProvider& provider,
                          const BatchPolicy& policy, ResponseCache& cache);

void write_failures_csv(std::ostream& out, const std::vector<FailureRecord>& failures);

std::string utc_timestamp();

}  // namespace natval
