#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "revassist/embedding.hpp"
#include "revassist/patch.hpp"

namespace revassist {

/// A historical review comment and the chunk it was written on.
struct ExampleTuple {
    std::string chunk_text;
    std::string comment_text;
    std::string project;

    bool operator==(const ExampleTuple&) const = default;
};

struct RetrievalResult {
    ExampleTuple example;
    double similarity = 0.0;
};

/// Comments longer than this many characters (code points) are not stored.
inline constexpr std::size_t kMaxExampleCommentLength = 500;

/// True when the comment is short enough and contains no http(s) URL.
bool passes_corpus_filters(const ExampleTuple& tuple);

/// Reads the JSON Lines import format: one object per line with string
/// fields "chunk_text", "comment_text" and "project". Blank lines are
/// skipped. Throws InvalidInput on a malformed line.
std::vector<ExampleTuple> load_corpus_jsonl(const std::filesystem::path& path);

/// Vector store for the similarity-selected few-shot examples.
///
/// Retrieval is an exact full scan; ties on similarity go to the example
/// ingested first. When opened on a file, accepted records are appended to
/// it as they are ingested (see docs/formats.md for the record layout).
class ExampleStore {
public:
    struct Record {
        ExampleTuple tuple;
        Embedding embedding;
        std::size_t seq = 0;  // ingestion order
    };
    using Snapshot = std::shared_ptr<const std::vector<Record>>;

    /// In-memory store.
    ExampleStore();

    /// Loads every record of `path` (created when missing) and appends to it.
    /// Throws StoreCorrupt when the file cannot be parsed.
    static std::unique_ptr<ExampleStore> open(const std::filesystem::path& path);

    /// Stores the tuples passing the corpus filters with their chunk
    /// embeddings and returns how many were stored. All embeddings are
    /// computed before anything is stored, so an EmbedderFailure leaves the
    /// store unchanged.
    std::size_t ingest(const std::vector<ExampleTuple>& tuples, const Embedder& embed);

    /// Up to k examples by descending cosine similarity to the chunk.
    std::vector<RetrievalResult> retrieve_for_chunk(std::string_view chunk_text, std::size_t k,
                                                    const Embedder& embed) const;

    /// Retrieves `per_chunk` examples for every chunk of the patch, merges
    /// identical (chunk_text, comment_text) pairs keeping their best
    /// similarity, and returns the `top` best overall.
    std::vector<ExampleTuple> select_examples(const Patch& patch, const Embedder& embed,
                                              std::size_t per_chunk = 10, std::size_t top = 10) const;

    std::size_t size() const { return snapshot()->size(); }
    std::optional<std::size_t> dim() const;

    /// Immutable view of the records at call time.
    Snapshot snapshot() const;

private:
    struct Scored {
        const Record* record;
        double similarity;
    };
    static std::vector<Scored> top_k(const Snapshot& snap, const Embedding& query, std::size_t k);
    void append_to_file(const std::vector<Record>& records);

    mutable std::mutex snapshot_mutex_;
    Snapshot records_;
    std::mutex writer_mutex_;
    std::optional<std::filesystem::path> file_;
};

}  // namespace revassist
