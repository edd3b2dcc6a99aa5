#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "revassist/chat_model.hpp"
#include "revassist/llm_pipeline.hpp"
#include "revassist/review_service.hpp"

namespace revassist {

/// Settings shared by the CLI verbs and the service. Loaded from a JSON file
/// (see docs/formats.md); relative paths are resolved against the file's
/// directory. Every field has a default, so an empty object is valid.
struct AppConfig {
    HostedEndpoint endpoint{"https://api.openai.com/v1"};
    ModelConfig model;

    enum class EmbedderKind { Hash, Hosted };
    EmbedderKind embedder = EmbedderKind::Hash;
    std::string embedding_model = "text-embedding-3-large";
    std::size_t hash_dim = 256;

    Approach approach = Approach::Example;
    PublicationMode publication = PublicationMode::Gated;

    std::optional<std::filesystem::path> templates_dir;  // built-in templates when absent
    std::optional<std::filesystem::path> default_examples;
    std::optional<std::filesystem::path> undesired_comments;  // judge disabled when absent
    std::optional<std::filesystem::path> categories;
    std::optional<std::filesystem::path> store;
    std::optional<std::filesystem::path> repo;
    std::filesystem::path service_db = "revassist.db";

    std::size_t examples_per_chunk = 10;
    std::size_t examples_top = 10;

    std::size_t clusters = 400;
    std::uint64_t cluster_seed = 1;
    int label_runs = 5;

    std::string host = "127.0.0.1";
    int port = 8080;
};

/// Throws ConfigError naming the offending key.
AppConfig load_config(const std::filesystem::path& path);
AppConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);

/// The embedder the config asks for.
Embedder make_embedder(const AppConfig& config);

}  // namespace revassist
