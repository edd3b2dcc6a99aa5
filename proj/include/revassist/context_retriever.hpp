#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace revassist {

/// A contiguous slice of a repository file. `text` holds exactly
/// end_line - start_line + 1 lines joined by '\n' (no trailing newline).
struct SourceSpan {
    std::string path;  // relative to the repository root, '/' separated
    int start_line = 0;
    int end_line = 0;
    std::string text;

    bool operator==(const SourceSpan&) const = default;
};

/// How function definitions are recognised in a file.
enum class ScanStyle {
    Braces,       // C family: name(...) qualifiers { ... }
    Indentation,  // offside rule: def name(...): followed by an indented block
    None,
};

/// Extension (with dot, lower case) -> scan style. Unlisted extensions are
/// not scanned for definitions.
using LanguageMap = std::map<std::string, ScanStyle>;

LanguageMap default_language_map();

/// Most lookups of each kind honored per patch; later requests are dropped.
inline constexpr std::size_t kMaxLookupsPerPatch = 8;

/// Half-width of the window returned when no function encloses a line.
inline constexpr int kFallbackContextRadius = 25;

/// A function definition found by the scanner, 1-based inclusive lines.
struct FunctionSpan {
    std::string name;       // unqualified identifier
    std::string qualified;  // e.g. "Parser::parse" when written that way
    int start_line = 0;
    int end_line = 0;
};

/// Scans one file's content for function definitions.
std::vector<FunctionSpan> scan_functions(std::string_view content, ScanStyle style);

/// Heuristic, read-only lookups over a checked-out repository.
class ContextRetriever {
public:
    explicit ContextRetriever(std::filesystem::path repo_root, LanguageMap languages = default_language_map());

    /// First definition named `name` (unqualified, or qualified as written
    /// with "::" or "."). Files are visited in lexicographic path order and
    /// ties within a file go to the smallest start line.
    /// Throws RepoUnreadable on I/O failure.
    std::optional<SourceSpan> find_function_definition(std::string_view name) const;

    /// Innermost function whose span contains `line`; otherwise a window of
    /// +-25 lines clamped to the file. Throws FileMissing or LineOutOfRange.
    SourceSpan enclosing_function_context(std::string_view path, int line) const;

    const std::filesystem::path& root() const { return root_; }

private:
    ScanStyle style_for(const std::filesystem::path& file) const;

    std::filesystem::path root_;
    LanguageMap languages_;
};

}  // namespace revassist
