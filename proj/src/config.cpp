#include "revassist/config.hpp"

#include "json.hpp"
#include "revassist/errors.hpp"
#include "revassist/text_util.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace revassist {

namespace {

const json* member(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (const auto* v = member(obj, key)) {
        try {
            out = v->get<T>();
        } catch (const json::exception&) {
            throw ConfigError(where + key + ": wrong type");
        }
    }
}

void read_path(const json& obj, const char* key, std::optional<fs::path>& out, const fs::path& base) {
    std::string s;
    read(obj, key, s, "");
    if (!s.empty()) out = fs::path(s).is_absolute() ? fs::path(s) : base / s;
}

const json& section(const json& root, const char* key) {
    static const json empty = json::object();
    const auto* v = member(root, key);
    if (!v) return empty;
    if (!v->is_object()) throw ConfigError(std::string(key) + ": expected an object");
    return *v;
}

}  // namespace

AppConfig parse_config(std::string_view json_text, const fs::path& base_dir) {
    const auto root = json::parse(json_text, nullptr, false);
    if (root.is_discarded() || !root.is_object()) throw ConfigError("config is not a JSON object");
    AppConfig c;

    const auto& backend = section(root, "backend");
    read(backend, "base_url", c.endpoint.base_url, "backend.");
    read(backend, "api_key_env", c.endpoint.api_key_env, "backend.");
    read(backend, "model", c.model.model_name, "backend.");
    read(backend, "temperature", c.model.temperature, "backend.");
    int timeout = static_cast<int>(c.endpoint.timeout.count());
    read(backend, "timeout_s", timeout, "backend.");
    c.endpoint.timeout = std::chrono::seconds(timeout);

    const auto& embedding = section(root, "embedding");
    std::string kind = "hash";
    read(embedding, "kind", kind, "embedding.");
    if (kind == "hash") c.embedder = AppConfig::EmbedderKind::Hash;
    else if (kind == "hosted") c.embedder = AppConfig::EmbedderKind::Hosted;
    else throw ConfigError("embedding.kind: expected hash or hosted");
    read(embedding, "model", c.embedding_model, "embedding.");
    read(embedding, "dim", c.hash_dim, "embedding.");
    if (c.hash_dim == 0) throw ConfigError("embedding.dim: must be positive");

    std::string approach(approach_name(c.approach));
    read(root, "approach", approach, "");
    const auto parsed = parse_approach(approach);
    if (!parsed) throw ConfigError("approach: expected code or example");
    c.approach = *parsed;

    std::string publication = "gated";
    read(root, "publication", publication, "");
    if (publication == "gated") c.publication = PublicationMode::Gated;
    else if (publication == "ungated") c.publication = PublicationMode::Ungated;
    else throw ConfigError("publication: expected gated or ungated");

    read_path(root, "templates_dir", c.templates_dir, base_dir);
    read_path(root, "default_examples", c.default_examples, base_dir);
    read_path(root, "undesired_comments", c.undesired_comments, base_dir);
    read_path(root, "categories", c.categories, base_dir);
    read_path(root, "store", c.store, base_dir);
    read_path(root, "repo", c.repo, base_dir);
    std::optional<fs::path> db;
    read_path(root, "service_db", db, base_dir);
    if (db) c.service_db = *db;

    const auto& retrieval = section(root, "retrieval");
    read(retrieval, "per_chunk", c.examples_per_chunk, "retrieval.");
    read(retrieval, "top", c.examples_top, "retrieval.");

    const auto& clustering = section(root, "clustering");
    read(clustering, "k", c.clusters, "clustering.");
    read(clustering, "seed", c.cluster_seed, "clustering.");
    read(clustering, "runs", c.label_runs, "clustering.");

    const auto& server = section(root, "server");
    read(server, "host", c.host, "server.");
    read(server, "port", c.port, "server.");
    return c;
}

AppConfig load_config(const fs::path& path) {
    std::string text;
    try {
        text = text::read_file(path.string());
    } catch (const std::exception&) {
        throw ConfigError("cannot read config " + path.string());
    }
    return parse_config(text, path.parent_path());
}

Embedder make_embedder(const AppConfig& config) {
    if (config.embedder == AppConfig::EmbedderKind::Hosted) {
        HostedEmbedder hosted(config.endpoint, config.embedding_model);
        return [hosted](std::string_view text) { return hosted(text); };
    }
    HashNgramEmbedder hash(config.hash_dim);
    return [hash](std::string_view text) { return hash(text); };
}

}  // namespace revassist
