#include "revassist/chat_model.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "revassist/errors.hpp"
#include "revassist/text_util.hpp"

using nlohmann::json;

namespace revassist {

std::string_view role_name(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

ConversationMemory::ConversationMemory(std::string persona) {
    messages_.push_back(Message{Role::System, std::move(persona)});
}

void ConversationMemory::append(Role role, std::string content) {
    messages_.push_back(Message{role, std::move(content)});
}

namespace {

constexpr std::pair<Stage, std::string_view> kStageNames[] = {
    {Stage::Summarize, "summarize"}, {Stage::FunctionNames, "function_names"},
    {Stage::ContextLines, "context_lines"}, {Stage::Generate, "generate"},
    {Stage::Filter, "filter"}, {Stage::Label, "label"},
};

}  // namespace

std::string_view stage_name(Stage stage) {
    for (const auto& [s, name] : kStageNames) {
        if (s == stage) return name;
    }
    return "unknown";
}

std::optional<Stage> parse_stage(std::string_view name) {
    for (const auto& [s, n] : kStageNames) {
        if (n == name) return s;
    }
    return std::nullopt;
}

// ---- scripted mock ----

ScriptedMock ScriptedMock::from_string(std::string_view script) {
    ScriptedMock mock;
    std::optional<Stage> current;
    std::vector<std::string> body;
    auto flush = [&] {
        if (!current) return;
        std::string reply = text::join(body, "\n");
        auto it = std::find_if(mock.replies_.begin(), mock.replies_.end(),
                               [&](const auto& e) { return e.first == *current; });
        if (it == mock.replies_.end()) {
            mock.replies_.push_back({*current, {}});
            it = std::prev(mock.replies_.end());
        }
        it->second.push_back(std::move(reply));
        body.clear();
    };
    std::size_t lineno = 0;
    for (const auto& raw : text::split_lines(script)) {
        ++lineno;
        std::string_view line = raw;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.rfind("===", 0) == 0) {
            flush();
            const auto name = text::trim(line.substr(3));
            current = parse_stage(name);
            if (!current) throw InvalidInput("mock script line " + std::to_string(lineno) + ": unknown stage '" +
                                             std::string(name) + "'");
            continue;
        }
        if (!current) {
            if (text::trim(line).empty()) continue;
            throw InvalidInput("mock script line " + std::to_string(lineno) + ": text before the first stage header");
        }
        body.emplace_back(line);
    }
    flush();
    mock.served_.assign(mock.replies_.size(), 0);
    return mock;
}

ScriptedMock ScriptedMock::from_file(const std::filesystem::path& path) {
    try {
        return from_string(text::read_file(path.string()));
    } catch (const InvalidInput&) {
        throw;
    } catch (const std::exception& e) {
        throw InvalidInput(e.what());
    }
}

ScriptedMock::ScriptedMock(const ScriptedMock& other) {
    std::lock_guard lock(other.mutex_);
    replies_ = other.replies_;
    served_ = other.served_;
    transcript_ = other.transcript_;
    latency_ = other.latency_;
}

std::string ScriptedMock::complete(Stage stage, const std::vector<Message>& messages) {
    std::chrono::milliseconds latency;
    std::string reply;
    {
        std::lock_guard lock(mutex_);
        latency = latency_;
        const auto it = std::find_if(replies_.begin(), replies_.end(), [&](const auto& e) { return e.first == stage; });
        if (it == replies_.end()) {
            throw BackendError("scripted mock has no reply for stage '" + std::string(stage_name(stage)) + "'");
        }
        auto& served = served_[static_cast<std::size_t>(it - replies_.begin())];
        reply = it->second[std::min(served, it->second.size() - 1)];
        ++served;
        transcript_.push_back(Call{stage, messages, reply});
    }
    if (latency.count() > 0) std::this_thread::sleep_for(latency);
    return reply;
}

std::size_t ScriptedMock::calls() const {
    std::lock_guard lock(mutex_);
    return transcript_.size();
}

std::vector<ScriptedMock::Call> ScriptedMock::transcript() const {
    std::lock_guard lock(mutex_);
    return transcript_;
}

void ScriptedMock::set_latency(std::chrono::milliseconds latency) {
    std::lock_guard lock(mutex_);
    latency_ = latency;
}

// ---- hosted clients ----

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path without trailing '/'
};

SplitUrl split_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
    const auto slash = url.find('/', scheme + 3);
    SplitUrl out{url.substr(0, slash), slash == std::string::npos ? "" : url.substr(slash)};
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    return out;
}

template <typename Error>
json post_json(const HostedEndpoint& endpoint, const std::string& path, const json& body) {
    const auto url = split_url(endpoint.base_url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(endpoint.timeout);
    client.set_read_timeout(endpoint.timeout);
    client.set_write_timeout(endpoint.timeout);
    httplib::Headers headers;
    if (!endpoint.api_key_env.empty()) {
        if (const char* key = std::getenv(endpoint.api_key_env.c_str()); key && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }
    const auto res = client.Post(url.prefix + path, headers, body.dump(), "application/json");
    if (!res) throw Error("request to " + endpoint.base_url + path + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        throw Error("request to " + endpoint.base_url + path + " returned HTTP " + std::to_string(res->status) + ": " +
                    res->body.substr(0, 300));
    }
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw Error(std::string("unparseable response body: ") + e.what());
    }
}

}  // namespace

HostedChat::HostedChat(HostedEndpoint endpoint, ModelConfig config)
    : endpoint_(std::move(endpoint)), config_(std::move(config)) {}

std::string HostedChat::complete(Stage, const std::vector<Message>& messages) {
    json body{{"model", config_.model_name}, {"temperature", config_.temperature}, {"messages", json::array()}};
    for (const auto& m : messages) body["messages"].push_back({{"role", role_name(m.role)}, {"content", m.content}});
    const auto reply = post_json<BackendError>(endpoint_, "/chat/completions", body);
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw BackendError(std::string("chat response missing choices[0].message.content: ") + e.what());
    }
}

HostedEmbedder::HostedEmbedder(HostedEndpoint endpoint, std::string model)
    : endpoint_(std::move(endpoint)), model_(std::move(model)) {}

Embedding HostedEmbedder::operator()(std::string_view input) const {
    const auto reply = post_json<EmbedderFailure>(endpoint_, "/embeddings", json{{"model", model_}, {"input", input}});
    try {
        return reply.at("data").at(0).at("embedding").get<Embedding>();
    } catch (const json::exception& e) {
        throw EmbedderFailure(std::string("embedding response missing data[0].embedding: ") + e.what());
    }
}

}  // namespace revassist
