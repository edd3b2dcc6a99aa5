#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "revassist/embedding.hpp"

namespace revassist {

enum class Role { System, User, Assistant };

std::string_view role_name(Role role);

struct Message {
    Role role = Role::User;
    std::string content;

    bool operator==(const Message&) const = default;
};

/// Ordered message buffer. The first message is always the System persona
/// and messages are only ever appended.
class ConversationMemory {
public:
    explicit ConversationMemory(std::string persona);

    void append(Role role, std::string content);
    const std::vector<Message>& messages() const { return messages_; }
    std::size_t size() const { return messages_.size(); }

private:
    std::vector<Message> messages_;
};

/// Which pipeline step a model call belongs to. The scripted backend keys its
/// replies on this; hosted backends ignore it.
enum class Stage { Summarize, FunctionNames, ContextLines, Generate, Filter, Label };

std::string_view stage_name(Stage stage);
std::optional<Stage> parse_stage(std::string_view name);

class ChatModel {
public:
    virtual ~ChatModel() = default;

    /// Returns the assistant reply to `messages`. Throws BackendError.
    virtual std::string complete(Stage stage, const std::vector<Message>& messages) = 0;
};

/// Replays canned replies from a script.
///
/// Script format: a line "=== <stage>" starts a reply for that stage and the
/// following lines (up to the next "===" line) are its text, without the
/// final newline. Several sections for one stage are served in order and the
/// last one repeats. Asking for a stage with no section is a BackendError.
class ScriptedMock : public ChatModel {
public:
    struct Call {
        Stage stage;
        std::vector<Message> messages;
        std::string reply;
    };

    static ScriptedMock from_string(std::string_view script);
    static ScriptedMock from_file(const std::filesystem::path& path);

    ScriptedMock(const ScriptedMock& other);

    std::string complete(Stage stage, const std::vector<Message>& messages) override;

    std::size_t calls() const;
    std::vector<Call> transcript() const;

    /// Sleeps this long inside every call; used to widen race windows in tests.
    void set_latency(std::chrono::milliseconds latency);

private:
    ScriptedMock() = default;

    mutable std::mutex mutex_;
    std::vector<std::pair<Stage, std::vector<std::string>>> replies_;
    std::vector<std::size_t> served_;
    std::vector<Call> transcript_;
    std::chrono::milliseconds latency_{0};
};

/// OpenAI-compatible HTTP settings shared by the hosted chat and embedding
/// clients. The key is read from the environment variable named here.
struct HostedEndpoint {
    std::string base_url;  // e.g. "https://api.openai.com/v1"
    std::string api_key_env = "OPENAI_API_KEY";
    std::chrono::seconds timeout{120};
};

struct ModelConfig {
    enum class Backend { HostedChat, ScriptedMock };

    Backend backend = Backend::HostedChat;
    std::string model_name = "gpt-4o";
    double temperature = 0.2;
};

/// POSTs {base_url}/chat/completions and returns choices[0].message.content.
class HostedChat : public ChatModel {
public:
    HostedChat(HostedEndpoint endpoint, ModelConfig config);

    std::string complete(Stage stage, const std::vector<Message>& messages) override;

private:
    HostedEndpoint endpoint_;
    ModelConfig config_;
};

/// POSTs {base_url}/embeddings and returns data[0].embedding.
/// Failures are reported as EmbedderFailure.
class HostedEmbedder {
public:
    HostedEmbedder(HostedEndpoint endpoint, std::string model);

    Embedding operator()(std::string_view text) const;

private:
    HostedEndpoint endpoint_;
    std::string model_;
};

}  // namespace revassist
