#include "revassist/context_retriever.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <system_error>

#include "revassist/errors.hpp"
#include "revassist/text_util.hpp"

namespace fs = std::filesystem;

namespace revassist {

LanguageMap default_language_map() {
    LanguageMap m;
    for (const char* ext : {".c", ".h", ".cc", ".cpp", ".cxx", ".c++", ".hh", ".hpp", ".hxx", ".inl", ".ipp",
                            ".m", ".mm", ".java", ".js", ".jsx", ".mjs", ".ts", ".tsx", ".cs", ".go", ".rs",
                            ".swift", ".kt", ".kts", ".scala", ".php", ".dart", ".groovy"}) {
        m.emplace(ext, ScanStyle::Braces);
    }
    for (const char* ext : {".py", ".pyi"}) {
        m.emplace(ext, ScanStyle::Indentation);
    }
    return m;
}

namespace {

bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

// 1-based line number for every byte offset.
class LineTable {
public:
    explicit LineTable(std::string_view s) {
        starts_.push_back(0);
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '\n') starts_.push_back(i + 1);
        }
    }
    int line_of(std::size_t offset) const {
        auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
        return static_cast<int>(it - starts_.begin());
    }

private:
    std::vector<std::size_t> starts_;
};

// Comments and literals become spaces (newlines kept) so that braces and
// parentheses inside them do not disturb matching. A preprocessor line
// becomes ';' followed by spaces: it acts as a statement boundary.
std::string mask_c_family(std::string_view src) {
    std::string out(src);
    const std::size_t n = src.size();
    std::size_t i = 0;
    bool line_start = true;
    auto blank = [&](std::size_t from, std::size_t to) {
        for (std::size_t k = from; k < to && k < n; ++k) {
            if (out[k] != '\n') out[k] = ' ';
        }
    };
    while (i < n) {
        const char c = src[i];
        if (line_start && c == '#') {
            std::size_t j = i;
            while (j < n) {
                if (src[j] == '\n' && (j == 0 || src[j - 1] != '\\')) break;
                ++j;
            }
            blank(i, j);
            out[i] = ';';
            i = j;
            continue;
        }
        if (c == '\n') {
            line_start = true;
            ++i;
            continue;
        }
        if (!is_space(c)) line_start = false;
        if (c == '/' && i + 1 < n && src[i + 1] == '/') {
            std::size_t j = src.find('\n', i);
            if (j == std::string_view::npos) j = n;
            blank(i, j);
            i = j;
        } else if (c == '/' && i + 1 < n && src[i + 1] == '*') {
            std::size_t j = src.find("*/", i + 2);
            j = (j == std::string_view::npos) ? n : j + 2;
            blank(i, j);
            i = j;
        } else if (c == 'R' && i + 1 < n && src[i + 1] == '"' && (i == 0 || !is_ident_char(src[i - 1]))) {
            // C++ raw string R"delim( ... )delim"
            const std::size_t open = src.find('(', i + 2);
            if (open == std::string_view::npos) {
                ++i;
                continue;
            }
            const std::string close = ")" + std::string(src.substr(i + 2, open - i - 2)) + "\"";
            std::size_t j = src.find(close, open);
            j = (j == std::string_view::npos) ? n : j + close.size();
            blank(i, j);
            i = j;
        } else if (c == '"' || c == '`') {
            std::size_t j = i + 1;
            while (j < n && src[j] != c) {
                if (src[j] == '\\') ++j;
                else if (src[j] == '\n' && c == '"') break;
                ++j;
            }
            blank(i, std::min(j + 1, n));
            i = std::min(j + 1, n);
        } else if (c == '\'') {
            // char literal only when it closes quickly; otherwise a lifetime or digit separator
            std::size_t j = i + 1;
            if (j < n && src[j] == '\\') j += 2;
            else ++j;
            while (j < n && j < i + 10 && src[j] != '\'' && src[j] != '\n') ++j;
            if (j < n && src[j] == '\'' && j <= i + 9) {
                blank(i, j + 1);
                i = j + 1;
            } else {
                ++i;
            }
        } else {
            ++i;
        }
    }
    return out;
}

const std::vector<std::string_view>& control_keywords() {
    static const std::vector<std::string_view> kw = {
        "if",     "for",      "while",  "switch",   "catch",     "return",   "sizeof",  "alignof",
        "decltype", "new",    "delete", "else",     "do",        "case",     "typeof",  "defined",
        "using",  "throw",    "static_assert", "assert", "foreach", "lock",  "using",   "fixed",
        "synchronized", "when", "match", "loop",   "elif",      "until",    "noexcept", "requires",
        "operator", "__attribute__", "__declspec", "alignas", "co_return", "co_await", "await", "yield", "func", "function", "fn", "fun", "def"};
    return kw;
}

bool is_control_keyword(std::string_view w) {
    const auto& kw = control_keywords();
    return std::find(kw.begin(), kw.end(), w) != kw.end();
}

class BraceScanner {
public:
    explicit BraceScanner(std::string_view content)
        : code_(mask_c_family(content)), lines_(content) {}

    std::vector<FunctionSpan> run() {
        std::vector<FunctionSpan> out;
        const std::size_t n = code_.size();
        std::size_t i = 0;
        while (i < n) {
            if (!is_ident_start(code_[i]) || (i > 0 && is_ident_char(code_[i - 1]))) {
                ++i;
                continue;
            }
            std::size_t end = i;
            while (end < n && is_ident_char(code_[end])) ++end;
            const std::string_view word(code_.data() + i, end - i);
            if (!is_control_keyword(word)) {
                if (auto span = try_definition(i, end)) out.push_back(std::move(*span));
            }
            i = end;
        }
        std::sort(out.begin(), out.end(), [](const FunctionSpan& a, const FunctionSpan& b) {
            return a.start_line != b.start_line ? a.start_line < b.start_line : a.end_line > b.end_line;
        });
        return out;
    }

private:
    std::size_t skip_ws(std::size_t i) const {
        while (i < code_.size() && is_space(code_[i])) ++i;
        return i;
    }

    // Index just past the bracket matching the one at `i`, or npos.
    std::size_t match(std::size_t i, char open, char close) const {
        int depth = 0;
        for (std::size_t k = i; k < code_.size(); ++k) {
            if (code_[k] == open) ++depth;
            else if (code_[k] == close && --depth == 0) return k + 1;
        }
        return std::string::npos;
    }

    // Angle brackets: bail out on tokens that cannot be inside template args.
    std::size_t match_angle(std::size_t i) const {
        int depth = 0;
        for (std::size_t k = i; k < code_.size() && k < i + 400; ++k) {
            const char c = code_[k];
            if (c == '<') ++depth;
            else if (c == '>') {
                if (--depth == 0) return k + 1;
            } else if (c == ';' || c == '{' || c == '}') {
                return std::string::npos;
            }
        }
        return std::string::npos;
    }

    std::size_t skip_ident(std::size_t i) const {
        while (i < code_.size() && is_ident_char(code_[i])) ++i;
        return i;
    }

    // After a parameter list: qualifiers, trailing return types and
    // initializer lists up to the body's '{'. Returns the '{' offset.
    std::optional<std::size_t> find_body(std::size_t i) const {
        const std::size_t n = code_.size();
        bool saw_where = false;
        for (int guard = 0; guard < 200; ++guard) {
            i = skip_ws(i);
            if (i >= n) return std::nullopt;
            const char c = code_[i];
            if (c == '{') return i;
            if (saw_where) {
                if (c == ';' || c == '}') return std::nullopt;
                ++i;
                continue;
            }
            if (is_ident_start(c)) {
                const std::size_t e = skip_ident(i);
                if (std::string_view(code_.data() + i, e - i) == "where") saw_where = true;
                i = e;
            } else if (c == '(') {
                i = match(i, '(', ')');
                if (i == std::string::npos) return std::nullopt;
            } else if (c == '<') {
                i = match_angle(i);
                if (i == std::string::npos) return std::nullopt;
            } else if (c == '[') {
                i = match(i, '[', ']');
                if (i == std::string::npos) return std::nullopt;
            } else if (c == ':' && i + 1 < n && code_[i + 1] == ':') {
                i += 2;
            } else if (c == ':') {
                return initializer_list(i + 1);
            } else if (c == '-' && i + 1 < n && code_[i + 1] == '>') {
                i += 2;
            } else if (c == '&' || c == '*' || c == ',' || c == '.' || c == '?' || c == '!') {
                ++i;
            } else {
                return std::nullopt;
            }
        }
        return std::nullopt;
    }

    // ": a(x), b{y} {" in C++, or ": ReturnType {" in Kotlin/TypeScript style.
    std::optional<std::size_t> initializer_list(std::size_t i) const {
        const std::size_t n = code_.size();
        for (int guard = 0; guard < 100; ++guard) {
            i = skip_ws(i);
            if (i >= n) return std::nullopt;
            if (code_[i] == '{') return i;
            if (!is_ident_start(code_[i])) return std::nullopt;
            // member or type name, possibly qualified / templated / nullable
            while (i < n) {
                i = skip_ident(i);
                if (i < n && code_[i] == '<') {
                    i = match_angle(i);
                    if (i == std::string::npos) return std::nullopt;
                }
                if (i + 1 < n && code_[i] == ':' && code_[i + 1] == ':') {
                    i += 2;
                    continue;
                }
                if (i < n && (code_[i] == '.' || code_[i] == '?')) {
                    ++i;
                    continue;
                }
                break;
            }
            i = skip_ws(i);
            if (i >= n) return std::nullopt;
            std::size_t brace_item = std::string::npos;
            if (code_[i] == '(') {
                i = match(i, '(', ')');
            } else if (code_[i] == '{') {
                brace_item = i;
                i = match(i, '{', '}');
            } else {
                continue;  // "ReturnType {" is handled at the loop head
            }
            if (i == std::string::npos) return std::nullopt;
            i = skip_ws(i);
            if (i < n && code_[i] == ',') {
                ++i;
                continue;
            }
            if (i < n && code_[i] == '{') return i;
            if (brace_item != std::string::npos) return brace_item;
            return std::nullopt;
        }
        return std::nullopt;
    }

    std::optional<FunctionSpan> try_definition(std::size_t name_begin, std::size_t name_end) const {
        const std::size_t n = code_.size();
        std::size_t i = skip_ws(name_end);
        if (i < n && code_[i] == '<') {
            i = match_angle(i);
            if (i == std::string::npos) return std::nullopt;
            i = skip_ws(i);
        }
        if (i >= n || code_[i] != '(') return std::nullopt;
        const std::size_t params_end = match(i, '(', ')');
        if (params_end == std::string::npos) return std::nullopt;
        if (preceded_by_new(name_begin) || in_expression(name_begin)) return std::nullopt;
        const auto body = find_body(params_end);
        if (!body) return std::nullopt;
        const std::size_t body_end = match(*body, '{', '}');
        if (body_end == std::string::npos) return std::nullopt;

        FunctionSpan span;
        span.name = std::string(code_.substr(name_begin, name_end - name_begin));
        std::size_t qual_begin = name_begin;
        if (qual_begin > 0 && code_[qual_begin - 1] == '~') {
            --qual_begin;
            span.name = "~" + span.name;
        }
        span.qualified = qualified_name(qual_begin, span.name);
        span.start_line = lines_.line_of(statement_start(qual_begin));
        span.end_line = lines_.line_of(body_end - 1);
        return span;
    }

    // A name right after an operator, separator or an initializer-list colon
    // is a call or member initializer, not a declarator.
    bool in_expression(std::size_t i) const {
        if (i > 0 && code_[i - 1] == '~') --i;
        while (i >= 2 && code_[i - 1] == ':' && code_[i - 2] == ':') {
            i -= 2;
            while (i > 0 && (is_ident_char(code_[i - 1]) || code_[i - 1] == '>' || code_[i - 1] == '<')) --i;
        }
        while (i > 0 && is_space(code_[i - 1])) --i;
        if (i == 0) return false;
        const char p = code_[i - 1];
        if (p == ':') {
            std::size_t k = i - 1;
            while (k > 0 && is_space(code_[k - 1])) --k;
            return k > 0 && code_[k - 1] == ')';
        }
        static constexpr std::string_view kOperators = ",(=.?!+-/%|^[<";
        return kOperators.find(p) != std::string_view::npos;
    }

    bool preceded_by_new(std::size_t i) const {
        while (i > 0 && is_space(code_[i - 1])) --i;
        return i >= 3 && code_.compare(i - 3, 3, "new") == 0 && (i == 3 || !is_ident_char(code_[i - 4]));
    }

    std::string qualified_name(std::size_t begin, const std::string& name) const {
        std::string q = name;
        std::size_t i = begin;
        while (i >= 2 && code_[i - 1] == ':' && code_[i - 2] == ':') {
            std::size_t e = i - 2;
            if (e > 0 && code_[e - 1] == '>') {
                int depth = 0;
                std::size_t k = e;
                while (k > 0) {
                    --k;
                    if (code_[k] == '>') ++depth;
                    else if (code_[k] == '<' && --depth == 0) break;
                }
                e = k;
            }
            std::size_t b = e;
            while (b > 0 && is_ident_char(code_[b - 1])) --b;
            if (b == e) break;
            q = std::string(code_.substr(b, e - b)) + "::" + q;
            i = b;
        }
        return q;
    }

    // True when the line ending at the newline `nl` holds only whitespace.
    bool blank_line_before(std::size_t nl) const {
        std::size_t k = nl;
        while (k > 0 && code_[k - 1] != '\n') {
            if (!is_space(code_[k - 1])) return false;
            --k;
        }
        return k > 0;
    }

    // First non-blank offset after the previous ';', '{', '}' or label ':'.
    std::size_t statement_start(std::size_t name_begin) const {
        std::size_t k = name_begin;
        while (k > 0) {
            const char c = code_[k - 1];
            if (c == ';' || c == '{' || c == '}') break;
            if (c == '\n' && blank_line_before(k - 1)) break;
            if (c == ':' && !(k >= 2 && code_[k - 2] == ':') && !(k < code_.size() && code_[k] == ':')) break;
            --k;
        }
        return skip_ws(k);
    }

    std::string code_;
    LineTable lines_;
};

// Offside-rule scanner for Python-like sources.
std::vector<FunctionSpan> scan_indented(std::string_view content) {
    const auto rows = text::split_lines(content);
    const std::size_t n = rows.size();
    // rows that continue a triple-quoted string do not count for indentation
    std::vector<bool> in_string(n, false);
    {
        bool open = false;
        std::string delim;
        for (std::size_t r = 0; r < n; ++r) {
            if (open) in_string[r] = true;
            const std::string& s = rows[r];
            std::size_t i = 0;
            while (i < s.size()) {
                if (open) {
                    const auto e = s.find(delim, i);
                    if (e == std::string::npos) break;
                    open = false;
                    i = e + 3;
                } else if (s[i] == '#') {
                    break;
                } else if (s.compare(i, 3, "\"\"\"") == 0 || s.compare(i, 3, "'''") == 0) {
                    delim = s.substr(i, 3);
                    open = true;
                    i += 3;
                } else if (s[i] == '"' || s[i] == '\'') {
                    const char q = s[i++];
                    while (i < s.size() && s[i] != q) {
                        if (s[i] == '\\') ++i;
                        ++i;
                    }
                    ++i;
                } else {
                    ++i;
                }
            }
        }
    }
    auto indent_of = [&](std::size_t r) -> int {
        int w = 0;
        for (char c : rows[r]) {
            if (c == ' ') ++w;
            else if (c == '\t') w += 8 - (w % 8);
            else break;
        }
        return w;
    };
    auto blank = [&](std::size_t r) { return text::trim(rows[r]).empty() || text::trim(rows[r]).front() == '#'; };

    struct Scope {
        std::string name;
        int indent;
    };
    std::vector<Scope> scopes;
    std::vector<FunctionSpan> out;
    for (std::size_t r = 0; r < n; ++r) {
        if (in_string[r] || blank(r)) continue;
        const int ind = indent_of(r);
        while (!scopes.empty() && scopes.back().indent >= ind) scopes.pop_back();
        std::string_view s = text::trim(rows[r]);
        bool is_class = false;
        if (s.rfind("async ", 0) == 0) s = text::trim(s.substr(6));
        if (s.rfind("def ", 0) == 0) {
            s.remove_prefix(4);
        } else if (s.rfind("class ", 0) == 0) {
            s.remove_prefix(6);
            is_class = true;
        } else {
            continue;
        }
        s = text::trim(s);
        std::size_t e = 0;
        while (e < s.size() && is_ident_char(s[e])) ++e;
        if (e == 0) continue;
        const std::string name(s.substr(0, e));

        // header may span lines until the parentheses balance
        std::size_t header_end = r;
        int depth = 0;
        for (std::size_t h = r; h < n; ++h) {
            for (char c : rows[h]) {
                if (c == '(' || c == '[') ++depth;
                else if (c == ')' || c == ']') --depth;
            }
            header_end = h;
            if (depth <= 0) break;
        }
        std::size_t last = header_end;
        for (std::size_t b = header_end + 1; b < n; ++b) {
            if (in_string[b] || blank(b)) continue;
            if (indent_of(b) <= ind) break;
            last = b;
        }
        if (is_class) {
            scopes.push_back({name, ind});
            continue;
        }
        FunctionSpan span;
        span.name = name;
        span.qualified = name;
        for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) span.qualified = it->name + "::" + span.qualified;
        span.start_line = static_cast<int>(r) + 1;
        span.end_line = static_cast<int>(last) + 1;
        out.push_back(std::move(span));
        scopes.push_back({name, ind});
    }
    return out;
}

std::string normalize_qualifier(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '.') out += "::";
        else out.push_back(s[i]);
    }
    return out;
}

bool name_matches(const FunctionSpan& f, std::string_view query) {
    if (query == f.name) return true;
    const std::string q = normalize_qualifier(query);
    if (q == f.qualified) return true;
    return f.qualified.size() > q.size() && f.qualified.compare(f.qualified.size() - q.size(), q.size(), q) == 0 &&
           f.qualified.compare(f.qualified.size() - q.size() - 2, 2, "::") == 0;
}

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw RepoUnreadable("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw RepoUnreadable("error reading " + p.string());
    return ss.str();
}

// Byte slice covering lines [first, last] (1-based), without the final newline.
std::string slice_lines(std::string_view content, int first, int last) {
    std::size_t pos = 0;
    for (int l = 1; l < first; ++l) {
        pos = content.find('\n', pos);
        if (pos == std::string_view::npos) return {};
        ++pos;
    }
    std::size_t end = pos;
    for (int l = first; l <= last; ++l) {
        const auto nl = content.find('\n', end);
        if (nl == std::string_view::npos) {
            end = content.size();
            break;
        }
        end = (l == last) ? nl : nl + 1;
    }
    return std::string(content.substr(pos, end - pos));
}

int count_lines(std::string_view content) {
    if (content.empty()) return 0;
    int n = static_cast<int>(std::count(content.begin(), content.end(), '\n'));
    if (content.back() != '\n') ++n;
    return n;
}

}  // namespace

std::vector<FunctionSpan> scan_functions(std::string_view content, ScanStyle style) {
    switch (style) {
        case ScanStyle::Braces: return BraceScanner(content).run();
        case ScanStyle::Indentation: return scan_indented(content);
        case ScanStyle::None: break;
    }
    return {};
}

ContextRetriever::ContextRetriever(fs::path repo_root, LanguageMap languages)
    : root_(std::move(repo_root)), languages_(std::move(languages)) {}

ScanStyle ContextRetriever::style_for(const fs::path& file) const {
    const auto ext = text::to_lower(file.extension().string());
    const auto it = languages_.find(ext);
    return it == languages_.end() ? ScanStyle::None : it->second;
}

std::optional<SourceSpan> ContextRetriever::find_function_definition(std::string_view name) const {
    std::error_code ec;
    if (!fs::is_directory(root_, ec)) throw RepoUnreadable("repository root is not a readable directory: " + root_.string());

    std::vector<std::pair<std::string, fs::path>> files;
    fs::recursive_directory_iterator it(root_, fs::directory_options::none, ec);
    if (ec) throw RepoUnreadable("cannot list " + root_.string() + ": " + ec.message());
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) throw RepoUnreadable("cannot list " + root_.string() + ": " + ec.message());
        const auto& entry = *it;
        const auto fname = entry.path().filename().string();
        if (entry.is_directory(ec)) {
            if (!fname.empty() && fname.front() == '.') it.disable_recursion_pending();
            continue;
        }
        if (!entry.is_regular_file(ec) || style_for(entry.path()) == ScanStyle::None) continue;
        files.emplace_back(fs::relative(entry.path(), root_).generic_string(), entry.path());
    }
    std::sort(files.begin(), files.end());

    for (const auto& [rel, full] : files) {
        const std::string content = read_all(full);
        const auto spans = scan_functions(content, style_for(full));
        const FunctionSpan* best = nullptr;
        for (const auto& f : spans) {
            if (name_matches(f, name) && (!best || f.start_line < best->start_line)) best = &f;
        }
        if (best) {
            return SourceSpan{rel, best->start_line, best->end_line,
                              slice_lines(content, best->start_line, best->end_line)};
        }
    }
    return std::nullopt;
}

SourceSpan ContextRetriever::enclosing_function_context(std::string_view path, int line) const {
    const fs::path rel(path);
    if (path.empty() || rel.is_absolute()) throw FileMissing("not a repository-relative path: " + std::string(path));
    for (const auto& part : rel) {
        if (part == "..") throw FileMissing("path escapes the repository: " + std::string(path));
    }
    const fs::path full = root_ / rel;
    std::error_code ec;
    if (!fs::is_regular_file(full, ec)) throw FileMissing("no such file in repository: " + std::string(path));

    std::string content;
    try {
        content = read_all(full);
    } catch (const RepoUnreadable& e) {
        throw FileMissing(e.what());
    }
    const int total = count_lines(content);
    if (line < 1 || line > total) {
        throw LineOutOfRange("line " + std::to_string(line) + " outside 1.." + std::to_string(total) + " of " +
                             std::string(path));
    }
    const std::string rel_str = rel.generic_string();
    const FunctionSpan* inner = nullptr;
    const auto spans = scan_functions(content, style_for(full));
    for (const auto& f : spans) {
        if (f.start_line <= line && line <= f.end_line) {
            if (!inner || f.start_line > inner->start_line ||
                (f.start_line == inner->start_line && f.end_line < inner->end_line)) {
                inner = &f;
            }
        }
    }
    if (inner) {
        return SourceSpan{rel_str, inner->start_line, inner->end_line,
                          slice_lines(content, inner->start_line, inner->end_line)};
    }
    const int first = std::max(1, line - kFallbackContextRadius);
    const int last = std::min(total, line + kFallbackContextRadius);
    return SourceSpan{rel_str, first, last, slice_lines(content, first, last)};
}

}  // namespace revassist
