#include "revassist/patch.hpp"

#include <charconv>
#include <cstdint>
#include <set>
#include <sstream>

#include "revassist/errors.hpp"
#include "revassist/log.hpp"
#include "revassist/text_util.hpp"

namespace revassist {

char marker_of(DiffLine::Kind kind) {
    switch (kind) {
        case DiffLine::Kind::Added: return '+';
        case DiffLine::Kind::Removed: return '-';
        case DiffLine::Kind::Context: return ' ';
    }
    return ' ';
}

int Chunk::anchor_line() const {
    for (const auto& l : lines) {
        if (l.new_line) return *l.new_line;
    }
    for (const auto& l : lines) {
        if (l.old_line) return *l.old_line;
    }
    return 0;
}

const FileDiff* Patch::find_file(std::string_view path) const {
    for (const auto& f : files) {
        if (f.path == path) return &f;
    }
    return nullptr;
}

namespace {

struct HunkRange {
    int old_start = 0;
    int old_count = 0;
    int new_start = 0;
    int new_count = 0;
};

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

bool read_int(std::string_view& s, int& out) {
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr == begin) return false;
    s.remove_prefix(static_cast<std::size_t>(ptr - begin));
    return true;
}

// "@@ -a[,b] +c[,d] @@[ section]"
std::optional<HunkRange> parse_hunk_header(std::string_view line) {
    HunkRange r;
    if (!starts_with(line, "@@ -")) return std::nullopt;
    line.remove_prefix(4);
    r.old_count = 1;
    if (!read_int(line, r.old_start)) return std::nullopt;
    if (starts_with(line, ",")) {
        line.remove_prefix(1);
        if (!read_int(line, r.old_count)) return std::nullopt;
    }
    if (!starts_with(line, " +")) return std::nullopt;
    line.remove_prefix(2);
    r.new_count = 1;
    if (!read_int(line, r.new_start)) return std::nullopt;
    if (starts_with(line, ",")) {
        line.remove_prefix(1);
        if (!read_int(line, r.new_count)) return std::nullopt;
    }
    if (!starts_with(line, " @@")) return std::nullopt;
    if (r.old_start < 0 || r.new_start < 0 || r.old_count < 0 || r.new_count < 0) return std::nullopt;
    if ((r.old_count > 0 && r.old_start == 0) || (r.new_count > 0 && r.new_start == 0)) return std::nullopt;
    if (r.old_count == 0 && r.new_count == 0) return std::nullopt;
    return r;
}

std::string unquote_path(std::string_view p) {
    if (p.size() >= 2 && p.front() == '"' && p.back() == '"') {
        std::string out;
        for (std::size_t i = 1; i + 1 < p.size(); ++i) {
            if (p[i] == '\\' && i + 2 < p.size()) {
                const char n = p[++i];
                switch (n) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    default: out.push_back(n); break;
                }
            } else {
                out.push_back(p[i]);
            }
        }
        return out;
    }
    return std::string(p);
}

// Path from a "--- " / "+++ " line: drops a trailing "\t<timestamp>".
std::string header_path(std::string_view rest) {
    if (!rest.empty() && rest.front() != '"') {
        if (auto tab = rest.find('\t'); tab != std::string_view::npos) rest = rest.substr(0, tab);
    }
    return unquote_path(text::trim_right(rest));
}

std::string strip_prefix(std::string path, std::string_view prefix) {
    if (starts_with(path, prefix)) path.erase(0, prefix.size());
    return path;
}

struct PendingFile {
    std::string git_old;
    std::string git_new;
    std::string old_path;
    std::string new_path;
    bool has_minus = false;
    bool has_plus = false;
    bool binary = false;
    bool renamed = false;
    std::vector<Chunk> chunks;

    bool started() const { return !git_new.empty() || has_minus; }

    std::string path() const {
        if (has_plus && new_path != "/dev/null") return strip_prefix(new_path, "b/");
        if (has_minus && old_path != "/dev/null") return strip_prefix(old_path, "a/");
        if (!git_new.empty()) return git_new;
        return git_old;
    }
};

// "diff --git a/x b/y" -> ("x", "y"); best effort for unquoted paths.
std::pair<std::string, std::string> split_git_header(std::string_view rest) {
    if (!rest.empty() && rest.front() == '"') {
        const auto close = rest.find('"', 1);
        if (close != std::string_view::npos) {
            auto a = unquote_path(rest.substr(0, close + 1));
            auto b = unquote_path(text::trim(rest.substr(close + 1)));
            return {strip_prefix(a, "a/"), strip_prefix(b, "b/")};
        }
    }
    // Both sides usually name the same path, so split at the midpoint " b/".
    const auto mid = rest.find(" b/");
    if (mid != std::string_view::npos) {
        return {strip_prefix(std::string(rest.substr(0, mid)), "a/"),
                strip_prefix(std::string(rest.substr(mid + 1)), "b/")};
    }
    return {std::string(rest), std::string(rest)};
}

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

class DiffParser {
public:
    explicit DiffParser(std::vector<std::string> lines) : lines_(std::move(lines)) {}

    std::vector<FileDiff> run() {
        while (pos_ < lines_.size()) {
            const std::string_view line = lines_[pos_];
            if (starts_with(line, "diff --git ")) {
                flush();
                auto [a, b] = split_git_header(line.substr(11));
                current_.git_old = std::move(a);
                current_.git_new = std::move(b);
                saw_header_ = true;
                ++pos_;
            } else if (starts_with(line, "--- ") && pos_ + 1 < lines_.size() &&
                       starts_with(lines_[pos_ + 1], "+++ ")) {
                if (current_.has_minus || !current_.chunks.empty()) flush();
                current_.old_path = header_path(line.substr(4));
                current_.new_path = header_path(std::string_view(lines_[pos_ + 1]).substr(4));
                current_.has_minus = current_.has_plus = true;
                saw_header_ = true;
                pos_ += 2;
            } else if (starts_with(line, "@@ ")) {
                if (!current_.started()) {
                    throw MalformedDiff("hunk without file header at line " + std::to_string(pos_ + 1));
                }
                parse_hunk();
            } else {
                if (current_.started()) {
                    if (starts_with(line, "Binary files ") || starts_with(line, "GIT binary patch")) {
                        current_.binary = true;
                    } else if (starts_with(line, "rename from ") || starts_with(line, "rename to ") ||
                               starts_with(line, "copy from ") || starts_with(line, "copy to ")) {
                        current_.renamed = true;
                    }
                }
                ++pos_;
            }
        }
        flush();
        if (!saw_header_) throw MalformedDiff("no diff headers found");
        return std::move(files_);
    }

private:
    void parse_hunk() {
        const std::string& header = lines_[pos_];
        const auto range = parse_hunk_header(header);
        if (!range) throw MalformedDiff("bad hunk header at line " + std::to_string(pos_ + 1) + ": " + header);
        ++pos_;

        Chunk chunk;
        chunk.header = header;
        int old_left = range->old_count;
        int new_left = range->new_count;
        int old_no = range->old_start;
        int new_no = range->new_start;
        while (old_left > 0 || new_left > 0) {
            if (pos_ >= lines_.size()) {
                throw MalformedDiff("truncated hunk '" + header + "'");
            }
            std::string_view l = lines_[pos_];
            if (starts_with(l, "\\")) {  // "\ No newline at end of file"
                ++pos_;
                continue;
            }
            DiffLine dl;
            const char marker = l.empty() ? ' ' : l.front();
            if (!l.empty()) l.remove_prefix(1);
            dl.text = std::string(l);
            if (marker == ' ') {
                if (old_left == 0 || new_left == 0) throw MalformedDiff("hunk line count mismatch in '" + header + "'");
                dl.kind = DiffLine::Kind::Context;
                dl.old_line = old_no++;
                dl.new_line = new_no++;
                --old_left;
                --new_left;
            } else if (marker == '-') {
                if (old_left == 0) throw MalformedDiff("hunk line count mismatch in '" + header + "'");
                dl.kind = DiffLine::Kind::Removed;
                dl.old_line = old_no++;
                --old_left;
            } else if (marker == '+') {
                if (new_left == 0) throw MalformedDiff("hunk line count mismatch in '" + header + "'");
                dl.kind = DiffLine::Kind::Added;
                dl.new_line = new_no++;
                --new_left;
            } else {
                throw MalformedDiff("truncated hunk '" + header + "' at line " + std::to_string(pos_ + 1));
            }
            chunk.lines.push_back(std::move(dl));
            ++pos_;
        }
        while (pos_ < lines_.size() && starts_with(lines_[pos_], "\\")) ++pos_;

        if (!current_.chunks.empty()) {
            const auto& prev = current_.chunks.back();
            int prev_old_end = 0;
            int prev_new_end = 0;
            for (const auto& pl : prev.lines) {
                if (pl.old_line) prev_old_end = *pl.old_line;
                if (pl.new_line) prev_new_end = *pl.new_line;
            }
            for (const auto& cl : chunk.lines) {
                if ((cl.old_line && *cl.old_line <= prev_old_end) || (cl.new_line && *cl.new_line <= prev_new_end)) {
                    throw MalformedDiff("hunks out of order or overlapping at '" + header + "'");
                }
            }
        }
        current_.chunks.push_back(std::move(chunk));
    }

    void flush() {
        if (!current_.started()) {
            current_ = {};
            return;
        }
        const std::string path = current_.path();
        if (current_.chunks.empty()) {
            if (current_.binary) {
                warn("skipping binary diff entry for " + path);
            } else if (current_.renamed) {
                warn("skipping rename-only diff entry for " + path);
            } else {
                warn("skipping diff entry without hunks for " + path);
            }
        } else {
            if (path.empty()) throw MalformedDiff("diff entry without a file path");
            if (!seen_paths_.insert(path).second) throw MalformedDiff("duplicate file in patch: " + path);
            files_.push_back(FileDiff{path, std::move(current_.chunks)});
        }
        current_ = {};
    }

    std::vector<std::string> lines_;
    std::size_t pos_ = 0;
    PendingFile current_;
    std::vector<FileDiff> files_;
    std::set<std::string> seen_paths_;
    bool saw_header_ = false;
};

}  // namespace

Patch parse_unified_diff(std::string_view diff_text, std::string id) {
    const std::string clean = text::sanitize_utf8(diff_text);
    auto lines = text::split_lines(clean);
    for (auto& l : lines) {
        if (!l.empty() && l.back() == '\r') l.pop_back();
    }
    Patch patch;
    patch.files = DiffParser(std::move(lines)).run();
    patch.id = id.empty() ? fnv1a_hex(diff_text) : std::move(id);
    patch.status = PatchStatus::NeedsReview;
    return patch;
}

FormattedPatch format_patch(const Patch& patch) {
    FormattedPatch out;
    std::ostringstream ss;
    std::size_t row = 0;
    auto emit = [&](const std::string& s) {
        ss << s << '\n';
        ++row;
    };
    for (std::size_t fi = 0; fi < patch.files.size(); ++fi) {
        const auto& file = patch.files[fi];
        if (fi > 0) emit("");
        emit("File: " + file.path);
        for (std::size_t ci = 0; ci < file.chunks.size(); ++ci) {
            if (ci > 0) emit("");
            for (const auto& line : file.chunks[ci].lines) {
                const int n = line.display_line();
                out.line_index.emplace(LineKey{file.path, n}, row);
                std::string rendered = std::to_string(n);
                rendered.push_back(' ');
                rendered.push_back(marker_of(line.kind));
                rendered.push_back(' ');
                rendered += line.text;
                emit(rendered);
            }
        }
    }
    out.text = ss.str();
    return out;
}

std::vector<Chunk> chunks_of(const Patch& patch) {
    std::vector<Chunk> out;
    for (const auto& f : patch.files) {
        out.insert(out.end(), f.chunks.begin(), f.chunks.end());
    }
    return out;
}

std::string chunk_text(const Chunk& chunk) {
    std::string out;
    for (std::size_t i = 0; i < chunk.lines.size(); ++i) {
        if (i) out.push_back('\n');
        out.push_back(marker_of(chunk.lines[i].kind));
        out += chunk.lines[i].text;
    }
    return out;
}

}  // namespace revassist
