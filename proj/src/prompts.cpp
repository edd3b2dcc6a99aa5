#include "revassist/prompts.hpp"

#include <set>

#include "revassist/errors.hpp"
#include "revassist/text_util.hpp"

namespace fs = std::filesystem;

namespace revassist {

namespace {

struct SlotSpec {
    std::set<std::string, std::less<>> allowed;
    std::set<std::string, std::less<>> required;
};

const std::map<std::string, SlotSpec, std::less<>>& slot_specs() {
    static const std::map<std::string, SlotSpec, std::less<>> specs{
        {"persona", {{}, {}}},
        {"summarize", {{"patch"}, {"patch"}}},
        {"function_names", {{}, {}}},
        {"context_lines", {{}, {}}},
        {"function_context", {{"name", "path", "start_line", "end_line", "code"}, {"code"}}},
        {"line_context", {{"path", "line", "start_line", "end_line", "code"}, {"code"}}},
        {"example", {{"chunk", "comment"}, {}}},
        {"generate", {{"examples", "patch"}, {"examples"}}},
        {"filter", {{"patch", "comments", "undesired"}, {"patch", "comments", "undesired"}}},
        {"label_cluster", {{"comments", "categories"}, {"comments", "categories"}}},
    };
    return specs;
}

// Calls on_text for literal runs and on_slot for every "{{name}}".
template <typename OnText, typename OnSlot>
void walk(std::string_view tpl, OnText on_text, OnSlot on_slot) {
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        const auto open = tpl.find("{{", pos);
        if (open == std::string_view::npos) break;
        const auto close = tpl.find("}}", open + 2);
        if (close == std::string_view::npos) break;
        on_text(tpl.substr(pos, open - pos));
        on_slot(text::trim(tpl.substr(open + 2, close - open - 2)));
        pos = close + 2;
    }
    on_text(tpl.substr(pos));
}

void validate(std::string_view name, std::string_view tpl) {
    const auto spec = slot_specs().find(name);
    if (spec == slot_specs().end()) throw TemplateError("unknown template '" + std::string(name) + "'");
    std::set<std::string, std::less<>> seen;
    walk(tpl, [](std::string_view) {},
         [&](std::string_view slot) {
             if (!spec->second.allowed.count(slot)) {
                 throw TemplateError("template '" + std::string(name) + "' uses unknown slot '" + std::string(slot) + "'");
             }
             seen.emplace(slot);
         });
    for (const auto& r : spec->second.required) {
        if (!seen.count(r)) throw TemplateError("template '" + std::string(name) + "' lacks slot '" + r + "'");
    }
}

}  // namespace

const std::vector<std::string>& PromptTemplates::names() {
    static const std::vector<std::string> n = [] {
        std::vector<std::string> out;
        for (const auto& [k, v] : slot_specs()) out.push_back(k);
        return out;
    }();
    return n;
}

PromptTemplates PromptTemplates::defaults() {
    PromptTemplates t;
    t.texts_ = {
#include "prompt_defaults.inc"
    };
    return t;
}

PromptTemplates PromptTemplates::load(const fs::path& dir) {
    auto t = defaults();
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw TemplateError("template directory not found: " + dir.string());
    for (const auto& name : names()) {
        const auto file = dir / (name + ".txt");
        if (!fs::exists(file, ec)) continue;
        std::string body;
        try {
            body = text::read_file(file.string());
        } catch (const std::exception& e) {
            throw TemplateError(e.what());
        }
        if (!body.empty() && body.back() == '\n') body.pop_back();
        t.set(name, std::move(body));
    }
    return t;
}

const std::string& PromptTemplates::text(std::string_view name) const {
    const auto it = texts_.find(name);
    if (it == texts_.end()) throw TemplateError("unknown template '" + std::string(name) + "'");
    return it->second;
}

void PromptTemplates::set(std::string_view name, std::string tpl) {
    validate(name, tpl);
    texts_.insert_or_assign(std::string(name), std::move(tpl));
}

std::string PromptTemplates::render(std::string_view name, const SlotValues& slots) const {
    std::string out;
    walk(text(name), [&](std::string_view lit) { out += lit; },
         [&](std::string_view slot) {
             const auto it = slots.find(slot);
             if (it == slots.end()) {
                 throw TemplateError("no value for slot '" + std::string(slot) + "' in template '" + std::string(name) +
                                     "'");
             }
             out += it->second;
         });
    return out;
}

}  // namespace revassist
