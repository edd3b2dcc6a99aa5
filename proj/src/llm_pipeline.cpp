#include "revassist/llm_pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <tuple>
#include <set>

#include "json.hpp"
#include "revassist/errors.hpp"
#include "revassist/log.hpp"
#include "revassist/text_util.hpp"

using nlohmann::json;

namespace revassist {

std::string_view approach_name(Approach approach) {
    return approach == Approach::Code ? "code" : "example";
}

std::optional<Approach> parse_approach(std::string_view name) {
    const auto lower = text::to_lower(text::trim(name));
    if (lower == "code") return Approach::Code;
    if (lower == "example") return Approach::Example;
    return std::nullopt;
}

namespace {

bool is_decline(std::string_view reply) {
    std::string t = text::to_lower(text::trim(reply));
    while (!t.empty() && (t.back() == '.' || t.back() == '!')) t.pop_back();
    return t.empty() || t == "none" || t == "[]" || t == "no" || t == "\"none\"";
}

std::vector<std::string_view> split_tokens(std::string_view reply) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= reply.size(); ++i) {
        if (i == reply.size() || reply[i] == ',' || reply[i] == '\n') {
            out.push_back(reply.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

// Strips list bullets, numbering, quotes and backticks around a token.
std::string_view clean_token(std::string_view t) {
    t = text::trim(t);
    if (t.size() >= 2 && (t[0] == '-' || t[0] == '*') && t[1] == ' ') t = text::trim(t.substr(2));
    std::size_t digits = 0;
    while (digits < t.size() && std::isdigit(static_cast<unsigned char>(t[digits]))) ++digits;
    if (digits > 0 && digits + 1 < t.size() && (t[digits] == '.' || t[digits] == ')') && t[digits + 1] == ' ') {
        t = text::trim(t.substr(digits + 2));
    }
    while (!t.empty() && (t.front() == '"' || t.front() == '\'' || t.front() == '`' || t.front() == '[')) t.remove_prefix(1);
    while (!t.empty() && (t.back() == '"' || t.back() == '\'' || t.back() == '`' || t.back() == ']' || t.back() == '.')) {
        t.remove_suffix(1);
    }
    return text::trim(t);
}

bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    const auto c0 = static_cast<unsigned char>(s[0]);
    if (!(std::isalpha(c0) || c0 == '_' || c0 == '~')) return false;
    for (char ch : s) {
        const auto c = static_cast<unsigned char>(ch);
        if (!(std::isalnum(c) || c == '_' || c == ':' || c == '.' || c == '~')) return false;
    }
    return s.back() != ':' && s.back() != '.';
}

std::optional<int> parse_positive(std::string_view s) {
    s = text::trim(s);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v <= 0) return std::nullopt;
    return v;
}

template <typename T>
void cap_lookups(std::vector<T>& items, std::string_view what) {
    if (items.size() > kMaxLookupsPerPatch) {
        warn("dropping " + std::to_string(items.size() - kMaxLookupsPerPatch) + " " + std::string(what) +
             " beyond the per-patch limit");
        items.resize(kMaxLookupsPerPatch);
    }
}

std::optional<GeneratedComment> record_from_json(const json& e) {
    if (!e.is_object()) return std::nullopt;
    GeneratedComment c;
    const auto com = e.contains("comment") ? e.find("comment") : e.find("com");
    if (com == e.end() || !com->is_string()) return std::nullopt;
    c.com = com->get<std::string>();
    const auto file = e.find("file");
    if (file == e.end() || !file->is_string()) return std::nullopt;
    c.file = file->get<std::string>();
    const auto line = e.find("line");
    if (line == e.end()) return std::nullopt;
    if (line->is_number_integer()) {
        const auto v = line->get<long long>();
        if (v <= 0 || v > std::numeric_limits<int>::max()) return std::nullopt;
        c.line = static_cast<int>(v);
    } else if (line->is_string()) {
        const auto v = parse_positive(line->get<std::string>());
        if (!v) return std::nullopt;
        c.line = *v;
    } else {
        return std::nullopt;
    }
    return c;
}

std::optional<std::vector<GeneratedComment>> parse_json_records(std::string_view reply) {
    const auto end = reply.rfind(']');
    if (end == std::string_view::npos) return std::nullopt;
    for (auto start = reply.find('['); start != std::string_view::npos && start < end;
         start = reply.find('[', start + 1)) {
        json arr = json::parse(reply.substr(start, end - start + 1), nullptr, false);
        if (arr.is_discarded() || !arr.is_array()) continue;
        if (!arr.empty() && !std::any_of(arr.begin(), arr.end(), [](const json& e) { return e.is_object(); })) continue;
        std::vector<GeneratedComment> out;
        for (const auto& e : arr) {
            if (auto c = record_from_json(e)) out.push_back(std::move(*c));
            else warn("skipping malformed comment record: " + e.dump());
        }
        return out;
    }
    return std::nullopt;
}

std::optional<std::vector<GeneratedComment>> parse_line_records(std::string_view reply) {
    std::vector<GeneratedComment> out;
    bool any = false;
    for (const auto& raw : text::split_lines(reply)) {
        std::string_view line = text::trim(raw);
        if (line.size() >= 2 && (line[0] == '-' || line[0] == '*') && line[1] == ' ') line = text::trim(line.substr(2));
        if (line.size() < 2 || line.front() != '{' || line.back() != '}') continue;
        line = line.substr(1, line.size() - 2);
        const auto file_sep = line.rfind(';');
        if (file_sep == std::string_view::npos) continue;
        const auto line_sep = line.rfind(';', file_sep == 0 ? 0 : file_sep - 1);
        if (line_sep == std::string_view::npos || line_sep == file_sep) continue;
        const auto number = parse_positive(line.substr(line_sep + 1, file_sep - line_sep - 1));
        if (!number) continue;
        any = true;
        out.push_back(GeneratedComment{std::string(text::trim(line.substr(0, line_sep))), *number,
                                       std::string(text::trim(line.substr(file_sep + 1)))});
    }
    if (!any) return std::nullopt;
    return out;
}

std::string render_examples(const std::vector<ExampleTuple>& examples, const PromptTemplates& templates) {
    if (examples.empty()) return "(no examples available)";
    std::vector<std::string> parts;
    for (const auto& e : examples) {
        parts.push_back(templates.render("example", {{"chunk", e.chunk_text}, {"comment", e.comment_text}}));
    }
    return text::join(parts, "\n\n");
}

std::string ask(ConversationMemory& memory, Stage stage, std::string prompt, ChatModel& model) {
    memory.append(Role::User, std::move(prompt));
    auto reply = model.complete(stage, memory.messages());
    memory.append(Role::Assistant, reply);
    return reply;
}

}  // namespace

std::vector<std::string> parse_function_names(std::string_view reply) {
    std::vector<std::string> out;
    if (is_decline(reply)) return out;
    std::set<std::string, std::less<>> seen;
    for (auto token : split_tokens(reply)) {
        auto name = clean_token(token);
        if (name.size() > 2 && name.substr(name.size() - 2) == "()") name.remove_suffix(2);
        if (!is_identifier(name) || text::to_lower(name) == "none") continue;
        if (seen.emplace(name).second) out.emplace_back(name);
    }
    if (out.empty()) warn("could not read any function name from the model reply; continuing without definitions");
    cap_lookups(out, "function names");
    return out;
}

std::vector<LineKey> parse_context_lines(std::string_view reply, const Patch& patch) {
    std::vector<LineKey> out;
    if (is_decline(reply)) return out;
    std::set<LineKey> seen;
    bool any = false;
    for (auto token : split_tokens(reply)) {
        const auto entry = clean_token(token);
        const auto colon = entry.rfind(':');
        if (colon == std::string_view::npos) continue;
        const auto line = parse_positive(entry.substr(colon + 1));
        if (!line) continue;
        any = true;
        std::string path(text::trim(entry.substr(0, colon)));
        if (!patch.find_file(path)) {
            warn("context request for " + path + ":" + std::to_string(*line) + " names a file outside the patch");
            continue;
        }
        LineKey key{std::move(path), *line};
        if (seen.insert(key).second) out.push_back(std::move(key));
    }
    if (!any) warn("could not read any file:line entry from the model reply; continuing without line context");
    cap_lookups(out, "context line requests");
    return out;
}

std::optional<std::vector<GeneratedComment>> parse_comment_records(std::string_view reply) {
    if (auto records = parse_json_records(reply)) return records;
    return parse_line_records(reply);
}

std::string comments_to_json(const std::vector<GeneratedComment>& comments) {
    json arr = json::array();
    for (const auto& c : comments) arr.push_back({{"comment", c.com}, {"file", c.file}, {"line", c.line}});
    return arr.dump(2);
}

std::string summarize_patch(ConversationMemory& memory, const FormattedPatch& formatted, ChatModel& model,
                            const PromptTemplates& templates) {
    if (formatted.empty()) throw InvalidInput("refusing to summarize an empty patch");
    return ask(memory, Stage::Summarize, templates.render("summarize", {{"patch", formatted.text}}), model);
}

std::vector<std::string> request_function_names(ConversationMemory& memory, ChatModel& model,
                                                const PromptTemplates& templates) {
    return parse_function_names(ask(memory, Stage::FunctionNames, templates.render("function_names", {}), model));
}

std::vector<LineKey> request_context_lines(ConversationMemory& memory, const Patch& patch, ChatModel& model,
                                           const PromptTemplates& templates) {
    return parse_context_lines(ask(memory, Stage::ContextLines, templates.render("context_lines", {}), model), patch);
}

std::vector<GeneratedComment> generate_comments(ConversationMemory& memory, const std::vector<ExampleTuple>& examples,
                                                const FormattedPatch& formatted, ChatModel& model,
                                                const PromptTemplates& templates) {
    const auto prompt =
        templates.render("generate", {{"examples", render_examples(examples, templates)}, {"patch", formatted.text}});
    const auto records = parse_comment_records(ask(memory, Stage::Generate, prompt, model));
    if (!records) {
        warn("generation reply holds no comment records");
        return {};
    }
    std::vector<GeneratedComment> out;
    std::set<GeneratedComment> seen;
    for (auto c : *records) {
        c.com = std::string(text::trim(c.com));
        if (c.com.empty()) {
            warn("dropping a comment with empty text");
            continue;
        }
        if (!formatted.contains(c.file, c.line)) {
            warn("dropping comment on " + c.file + ":" + std::to_string(c.line) + ", not a line of the patch");
            continue;
        }
        if (seen.insert(c).second) out.push_back(std::move(c));
    }
    return out;
}

std::vector<GeneratedComment> filter_comments(const std::vector<GeneratedComment>& comments,
                                              const FormattedPatch& formatted,
                                              const std::vector<std::string>& undesired, ChatModel& model,
                                              const PromptTemplates& templates) {
    if (comments.empty()) return {};
    std::vector<std::string> bullets;
    for (const auto& u : undesired) bullets.push_back("- " + u);
    ConversationMemory judge(templates.text("persona"));
    const auto prompt = templates.render(
        "filter",
        {{"patch", formatted.text}, {"comments", comments_to_json(comments)}, {"undesired", text::join(bullets, "\n")}});
    const auto verdict = parse_comment_records(ask(judge, Stage::Filter, prompt, model));
    if (!verdict) {
        warn("could not read the filter verdict; keeping all " + std::to_string(comments.size()) + " comments");
        return comments;
    }
    const std::set<GeneratedComment> kept(verdict->begin(), verdict->end());
    std::vector<GeneratedComment> out;
    std::copy_if(comments.begin(), comments.end(), std::back_inserter(out),
                 [&](const GeneratedComment& c) { return kept.count(c) > 0; });
    const std::set<GeneratedComment> input(comments.begin(), comments.end());
    const auto invented = std::count_if(kept.begin(), kept.end(), [&](const auto& c) { return !input.count(c); });
    if (invented > 0) warn("filter returned " + std::to_string(invented) + " comments that were not in its input");
    return out;
}

std::optional<SourceSpan> RepoContextSource::function_definition(std::string_view name) {
    return retriever_.find_function_definition(name);
}

SourceSpan RepoContextSource::enclosing_context(std::string_view path, int line) {
    return retriever_.enclosing_function_context(path, line);
}

std::vector<ExampleTuple> StoreExampleSource::select(const Patch& patch) {
    return store_.select_examples(patch, embed_, per_chunk_, top_);
}

namespace {

void add_code_context(ConversationMemory& memory, const Patch& patch, const PipelineDeps& deps) {
    auto& model = *deps.model;
    const auto& templates = *deps.templates;
    const auto names = request_function_names(memory, model, templates);
    const auto lines = request_context_lines(memory, patch, model, templates);

    std::set<std::tuple<std::string, int, int>> added;
    for (const auto& name : names) {
        const auto span = deps.code->function_definition(name);
        if (!span) {
            warn("no definition found for " + name);
            continue;
        }
        if (!added.emplace(span->path, span->start_line, span->end_line).second) continue;
        memory.append(Role::User, templates.render("function_context", {{"name", name},
                                                                         {"path", span->path},
                                                                         {"start_line", std::to_string(span->start_line)},
                                                                         {"end_line", std::to_string(span->end_line)},
                                                                         {"code", span->text}}));
    }
    for (const auto& key : lines) {
        SourceSpan span;
        try {
            span = deps.code->enclosing_context(key.path, key.line);
        } catch (const FileMissing& e) {
            warn(e.what());
            continue;
        } catch (const LineOutOfRange& e) {
            warn(e.what());
            continue;
        }
        if (!added.emplace(span.path, span.start_line, span.end_line).second) continue;
        memory.append(Role::User, templates.render("line_context", {{"path", span.path},
                                                                     {"line", std::to_string(key.line)},
                                                                     {"start_line", std::to_string(span.start_line)},
                                                                     {"end_line", std::to_string(span.end_line)},
                                                                     {"code", span.text}}));
    }
}

}  // namespace

ReviewOutcome run_review(const Patch& patch, Approach approach, const PipelineDeps& deps) {
    if (patch.status != PatchStatus::NeedsReview) throw NotNeedsReview("patch " + patch.id + " is not awaiting review");
    if (!deps.model || !deps.templates) throw InvalidInput("pipeline needs a model and templates");
    if (approach == Approach::Code && !deps.code) throw InvalidInput("the code approach needs a repository");
    if (approach == Approach::Example && !deps.examples) throw InvalidInput("the example approach needs an example store");

    const auto formatted = format_patch(patch);
    if (formatted.empty()) throw InvalidInput("patch " + patch.id + " has no lines to review");

    ReviewOutcome out;
    try {
        ConversationMemory memory(deps.templates->text("persona"));
        out.summary = summarize_patch(memory, formatted, *deps.model, *deps.templates);
        std::vector<ExampleTuple> examples;
        if (approach == Approach::Code) {
            add_code_context(memory, patch, deps);
            examples = deps.default_examples;
        } else {
            examples = deps.examples->select(patch);
        }
        out.generated = generate_comments(memory, examples, formatted, *deps.model, *deps.templates);
        out.comments = deps.undesired.empty()
                           ? out.generated
                           : filter_comments(out.generated, formatted, deps.undesired, *deps.model, *deps.templates);
        out.memory = memory.messages();
    } catch (const BackendError& e) {
        throw BackendError("patch " + patch.id + ": " + e.what());
    }
    return out;
}

std::vector<ExampleTuple> load_default_examples(const std::filesystem::path& path) {
    return load_corpus_jsonl(path);
}

std::vector<std::string> load_undesired_comments(const std::filesystem::path& path) {
    std::string content;
    try {
        content = text::read_file(path.string());
    } catch (const std::exception& e) {
        throw InvalidInput(e.what());
    }
    std::vector<std::string> out;
    for (const auto& line : text::split_lines(content)) {
        const auto t = text::trim(line);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

}  // namespace revassist
