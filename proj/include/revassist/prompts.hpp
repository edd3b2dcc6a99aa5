#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace revassist {

using SlotValues = std::map<std::string, std::string, std::less<>>;

/// Prompt texts with "{{slot}}" placeholders.
///
/// Known templates and their slots (a "!" marks slots that must appear):
///   persona          -
///   summarize        patch!
///   function_names   -
///   context_lines    -
///   function_context name path start_line end_line code!
///   line_context     path line start_line end_line code!
///   example          chunk comment
///   generate         examples! patch
///   filter           patch! comments! undesired!
///   label_cluster    comments! categories!
class PromptTemplates {
public:
    /// The built-in texts.
    static PromptTemplates defaults();

    /// Built-ins overridden by "<dir>/<name>.txt" for every file present.
    /// One trailing newline of a file is dropped. Throws TemplateError when a
    /// file uses an unknown slot or lacks a required one.
    static PromptTemplates load(const std::filesystem::path& dir);

    static const std::vector<std::string>& names();

    const std::string& text(std::string_view name) const;

    /// Substitutes every placeholder; values are inserted verbatim and not
    /// scanned again. Throws TemplateError for an unknown template or a
    /// placeholder without a value.
    std::string render(std::string_view name, const SlotValues& slots) const;

    /// Replaces one template after validating it.
    void set(std::string_view name, std::string text);

private:
    std::map<std::string, std::string, std::less<>> texts_;
};

}  // namespace revassist
