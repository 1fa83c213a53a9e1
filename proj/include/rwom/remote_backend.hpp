#pragma once

#include <cstdlib>
#include <string>

#include "httplib.h"
#include "json.hpp"
#include "rwom/gateway.hpp"

namespace rwom {

// OpenAI-style chat-completion client: POST {model, messages, max_tokens,
// temperature}, read choices[0].message.content. API key comes from an
// environment variable named in the config.
class RemoteBackend : public LlmBackend {
public:
    explicit RemoteBackend(RemoteBackendConfig cfg) : cfg_(std::move(cfg)) {}

    BackendKind kind() const override { return BackendKind::remote; }

    std::string generate(const PromptRequest& req) override {
        httplib::Client client(cfg_.base_url);
        client.set_read_timeout(120, 0);

        httplib::Headers headers;
        if (const char* key = std::getenv(cfg_.api_key_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }

        nlohmann::json body = {
            {"model", cfg_.model},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", req.rendered_text}}})},
            {"max_tokens", req.max_output_tokens},
            {"temperature", req.temperature},
        };

        auto res = client.Post(cfg_.path, headers, body.dump(), "application/json");
        if (!res) {
            throw BackendUnreachable("no response from " + cfg_.base_url + cfg_.path);
        }
        if (res->status != 200) {
            throw BackendUnreachable("backend returned HTTP " + std::to_string(res->status));
        }
        nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty()) {
            throw BackendUnreachable("malformed completion envelope");
        }
        return parsed["choices"][0]["message"]["content"].get<std::string>();
    }

private:
    RemoteBackendConfig cfg_;
};

}  // namespace rwom
