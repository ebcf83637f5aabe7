#include "natval/openai_provider.hpp"

#include <cmath>
#include <cstdlib>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

namespace natval {

using json = nlohmann::json;

OpenAIChatProvider::OpenAIChatProvider(ProviderSettings settings, std::string api_key)
    : settings_(std::move(settings)), api_key_(std::move(api_key)) {}

OpenAIChatProvider OpenAIChatProvider::from_environment(const ProviderSettings& settings) {
    const char* key = std::getenv(settings.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
        throw ConfigError(fmt::format("environment variable {} is not set; live scoring needs an API key "
                                      "(or use --mock <seed>)",
                                      settings.api_key_env));
    return OpenAIChatProvider(settings, key);
}

std::string OpenAIChatProvider::id() const { return fmt::format("openai-{}", settings_.model); }

std::string build_chat_request_body(const ScoreRequest& request, const ProviderSettings& settings) {
    json body;
    body["model"] = settings.model;
    body["messages"] = json::array({
        {{"role", "system"}, {"content", request.prompt.system_text}},
        {{"role", "user"}, {"content", request.user_text}},
    });
    if (settings.temperature) body["temperature"] = *settings.temperature;
    if (request.want_token_probabilities) {
        body["logprobs"] = true;
        body["top_logprobs"] = settings.top_logprobs;
    }
    return body.dump();
}

namespace {

std::optional<int> score_digit(std::string_view token) {
    std::string core;
    for (char c : token) {
        if (c != ' ' && c != '*' && c != '\n' && c != '\t') core.push_back(c);
    }
    if (core.size() == 1 && core[0] >= '1' && core[0] <= '4') return core[0] - '0';
    return std::nullopt;
}

}  // namespace

RawResponse parse_chat_completion(std::string_view body, bool want_token_probabilities) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw Error(fmt::format("malformed provider response: {}", e.what()));
    }
    try {
        const auto& choice = j.at("choices").at(0);
        RawResponse r;
        r.text = choice.at("message").at("content").get<std::string>();
        if (!want_token_probabilities) return r;

        const auto& logprobs = choice.at("logprobs");
        if (logprobs.is_null()) throw Error("response carries no logprobs");
        for (const auto& tok : logprobs.at("content")) {
            if (!score_digit(tok.at("token").get<std::string>())) continue;
            std::vector<TokenProbability> dist;
            for (const auto& alt : tok.at("top_logprobs"))
                dist.push_back({alt.at("token").get<std::string>(), std::exp(alt.at("logprob").get<double>())});
            r.token_probabilities = std::move(dist);
            return r;
        }
        throw Error("no score-bearing token in logprobs");
    } catch (const json::exception& e) {
        throw Error(fmt::format("unexpected provider response shape: {}", e.what()));
    }
}

RawResponse OpenAIChatProvider::complete(const ScoreRequest& request) {
    // endpoint = scheme://host[:port]/prefix
    const auto scheme_end = settings_.endpoint.find("://");
    const auto path_start =
        settings_.endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    const auto host = settings_.endpoint.substr(0, path_start);
    const auto prefix = path_start == std::string::npos ? std::string{} : settings_.endpoint.substr(path_start);

    httplib::Client client(host);
    client.set_connection_timeout(settings_.timeout);
    client.set_read_timeout(settings_.timeout);
    client.set_bearer_token_auth(api_key_);

    const auto res = client.Post(prefix + "/chat/completions", build_chat_request_body(request, settings_),
                                 "application/json");
    if (!res) throw TransientError(fmt::format("HTTP error: {}", httplib::to_string(res.error())));
    if (res->status == 401 || res->status == 403)
        throw AuthError(fmt::format("provider rejected credentials from {} (HTTP {})", settings_.api_key_env, res->status));
    if (res->status == 408 || res->status == 429 || res->status >= 500)
        throw TransientError(fmt::format("HTTP {}", res->status));
    if (res->status != 200) throw Error(fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 200)));

    auto parsed = parse_chat_completion(res->body, request.want_token_probabilities);
    parsed.provider_id = id();
    return parsed;
}

}  // namespace natval
