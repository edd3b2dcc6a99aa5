#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "revassist/chat_model.hpp"
#include "revassist/context_retriever.hpp"
#include "revassist/example_store.hpp"
#include "revassist/patch.hpp"
#include "revassist/prompts.hpp"

namespace revassist {

struct GeneratedComment {
    std::string com;
    int line = 0;
    std::string file;

    auto operator<=>(const GeneratedComment&) const = default;
};

enum class Approach { Code, Example };

std::string_view approach_name(Approach approach);
std::optional<Approach> parse_approach(std::string_view name);

// ---- reply parsing ----

/// Names from a comma- or newline-separated reply. "none", "[]" or an empty
/// reply mean no names. At most kMaxLookupsPerPatch are kept.
std::vector<std::string> parse_function_names(std::string_view reply);

/// "file:line" entries. Entries for files absent from the patch are dropped
/// with a warning. At most kMaxLookupsPerPatch are kept.
std::vector<LineKey> parse_context_lines(std::string_view reply, const Patch& patch);

/// Comment records in reply order. A JSON array of objects with
/// "comment" (or "com"), "file" and "line" is tried first, then lines of the
/// form "{com;line;file}". nullopt when the reply holds neither; an explicit
/// empty array gives an empty list.
std::optional<std::vector<GeneratedComment>> parse_comment_records(std::string_view reply);

/// Renders comments as the JSON array shown to the judge.
std::string comments_to_json(const std::vector<GeneratedComment>& comments);

// ---- pipeline stages ----

std::string summarize_patch(ConversationMemory& memory, const FormattedPatch& formatted, ChatModel& model,
                            const PromptTemplates& templates);

std::vector<std::string> request_function_names(ConversationMemory& memory, ChatModel& model,
                                                const PromptTemplates& templates);

std::vector<LineKey> request_context_lines(ConversationMemory& memory, const Patch& patch, ChatModel& model,
                                           const PromptTemplates& templates);

/// Records whose (file, line) is not a line of the formatted patch, or whose
/// text is blank, are dropped with a warning. Exact duplicates are kept once.
std::vector<GeneratedComment> generate_comments(ConversationMemory& memory, const std::vector<ExampleTuple>& examples,
                                                const FormattedPatch& formatted, ChatModel& model,
                                                const PromptTemplates& templates);

/// Judge pass in a fresh conversation. The result is the input comments the
/// judge kept, in input order; anything the judge invents is ignored. An
/// unparseable verdict keeps every comment. No call is made for an empty
/// input.
std::vector<GeneratedComment> filter_comments(const std::vector<GeneratedComment>& comments,
                                              const FormattedPatch& formatted,
                                              const std::vector<std::string>& undesired, ChatModel& model,
                                              const PromptTemplates& templates);

// ---- extra context sources ----

/// Repository lookups used by the Code approach.
class CodeContextSource {
public:
    virtual ~CodeContextSource() = default;
    virtual std::optional<SourceSpan> function_definition(std::string_view name) = 0;
    virtual SourceSpan enclosing_context(std::string_view path, int line) = 0;
};

class RepoContextSource : public CodeContextSource {
public:
    explicit RepoContextSource(const ContextRetriever& retriever) : retriever_(retriever) {}
    std::optional<SourceSpan> function_definition(std::string_view name) override;
    SourceSpan enclosing_context(std::string_view path, int line) override;

private:
    const ContextRetriever& retriever_;
};

/// Similar-example selection used by the Example approach.
class ExampleSource {
public:
    virtual ~ExampleSource() = default;
    virtual std::vector<ExampleTuple> select(const Patch& patch) = 0;
};

class StoreExampleSource : public ExampleSource {
public:
    StoreExampleSource(const ExampleStore& store, Embedder embed, std::size_t per_chunk = 10, std::size_t top = 10)
        : store_(store), embed_(std::move(embed)), per_chunk_(per_chunk), top_(top) {}
    std::vector<ExampleTuple> select(const Patch& patch) override;

private:
    const ExampleStore& store_;
    Embedder embed_;
    std::size_t per_chunk_;
    std::size_t top_;
};

// ---- end to end ----

struct PipelineDeps {
    ChatModel* model = nullptr;
    const PromptTemplates* templates = nullptr;
    CodeContextSource* code = nullptr;         // required for Approach::Code
    ExampleSource* examples = nullptr;         // required for Approach::Example
    std::vector<ExampleTuple> default_examples;  // few-shot set for Approach::Code
    std::vector<std::string> undesired;          // empty disables the judge pass
};

struct ReviewOutcome {
    std::vector<GeneratedComment> comments;   // after the judge
    std::vector<GeneratedComment> generated;  // before the judge
    std::string summary;
    std::vector<Message> memory;
};

/// Format, summarize, gather extra context for the chosen approach, generate,
/// then filter. Throws NotNeedsReview before any model call when the patch
/// is not awaiting review, InvalidInput for a patch with no lines or missing
/// dependencies, and BackendError from the model.
ReviewOutcome run_review(const Patch& patch, Approach approach, const PipelineDeps& deps);

/// Default few-shot set or undesired list readers. The examples file uses the
/// example corpus format; the undesired file has one example per non-blank line.
std::vector<ExampleTuple> load_default_examples(const std::filesystem::path& path);
std::vector<std::string> load_undesired_comments(const std::filesystem::path& path);

}  // namespace revassist
