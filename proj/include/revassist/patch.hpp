#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace revassist {

struct DiffLine {
    enum class Kind { Added, Removed, Context };

    Kind kind = Kind::Context;
    std::optional<int> old_line;  // absent for Added
    std::optional<int> new_line;  // absent for Removed
    std::string text;             // without the +/-/space marker and newline

    // The number shown for this line: new_line for Added/Context, old_line for Removed.
    int display_line() const { return kind == Kind::Removed ? *old_line : *new_line; }

    bool operator==(const DiffLine&) const = default;
};

char marker_of(DiffLine::Kind kind);

struct Chunk {
    std::string header;  // original "@@ ... @@" line, kept for analytics
    std::vector<DiffLine> lines;

    // First new_line, or first old_line for pure deletions.
    int anchor_line() const;
};

struct FileDiff {
    std::string path;
    std::vector<Chunk> chunks;
};

enum class PatchStatus { NeedsReview, Other };

struct Patch {
    std::string id;
    std::vector<FileDiff> files;
    PatchStatus status = PatchStatus::NeedsReview;

    const FileDiff* find_file(std::string_view path) const;
};

struct LineKey {
    std::string path;
    int line = 0;

    auto operator<=>(const LineKey&) const = default;
};

struct FormattedPatch {
    std::string text;
    // (path, displayed line number) -> 0-based index of the first rendered
    // line of `text` carrying that number for that path.
    std::map<LineKey, std::size_t> line_index;

    bool empty() const { return text.empty(); }
    bool contains(std::string_view path, int line) const {
        return line_index.count(LineKey{std::string(path), line}) > 0;
    }
};

/// Parses Git-style unified diff text.
///
/// Line numbers are computed by walking each hunk from its header start
/// numbers, and every hunk must contain exactly the counts its header
/// announces. Binary entries and rename/mode-only entries are skipped with a
/// warning. Invalid UTF-8 is replaced with U+FFFD and a trailing '\r' on a
/// line is dropped.
///
/// When `id` is empty the patch id is a stable hash of the input text.
/// Throws MalformedDiff; no partial Patch is ever returned.
Patch parse_unified_diff(std::string_view diff_text, std::string id = {});

/// Renders a patch for model consumption: one "File: <path>" heading per
/// file, each line as "<line_no> <marker> <text>", hunk headers dropped and
/// consecutive chunks of a file separated by a blank line. Files are also
/// separated by a blank line.
FormattedPatch format_patch(const Patch& patch);

/// All chunks in file order, then chunk order.
std::vector<Chunk> chunks_of(const Patch& patch);

/// Chunk body as unified-diff lines ("+x", "-y", " z") joined by '\n'.
/// This is the text form used as the retrieval key for similar examples.
std::string chunk_text(const Chunk& chunk);

}  // namespace revassist
