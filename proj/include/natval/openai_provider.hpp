#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "natval/gateway.hpp"

namespace natval {

struct ProviderSettings {
    /// Base URL including the API prefix, e.g. https://api.openai.com/v1
    std::string endpoint = "https://api.openai.com/v1";
    std::string model = "gpt-4o-mini";
    /// Name of the environment variable holding the API key. The key itself is never stored.
    std::string api_key_env = "OPENAI_API_KEY";
    /// Unset means provider default (not sent).
    std::optional<double> temperature;
    int top_logprobs = 10;
    std::chrono::seconds timeout{120};
};

/// Chat-completions provider. Extraction rule for ProbabilityOnly requests: the
/// distribution is read from `top_logprobs` of the first generated token whose text,
/// stripped of spaces and '*', is a single digit 1-4. Alternatives at that position
/// are returned as-is; non-score tokens are discarded later by the scorer.
class OpenAIChatProvider final : public ScoringProvider {
public:
    OpenAIChatProvider(ProviderSettings settings, std::string api_key);

    /// Throws ConfigError when the credentials variable is unset or empty.
    static OpenAIChatProvider from_environment(const ProviderSettings& settings);

    std::string id() const override;
    RawResponse complete(const ScoreRequest& request) override;

private:
    ProviderSettings settings_;
    std::string api_key_;
};

std::string build_chat_request_body(const ScoreRequest& request, const ProviderSettings& settings);

/// Parses a chat-completions response body. Throws natval::Error on malformed JSON or
/// when probabilities were requested but no score-bearing token is present.
RawResponse parse_chat_completion(std::string_view body, bool want_token_probabilities);

}  // namespace natval
