#include <algorithm>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "revassist/errors.hpp"
#include "revassist/log.hpp"
#include "revassist/patch.hpp"
#include "revassist/text_util.hpp"
#include "support.hpp"

using namespace revassist;
using revassist::testing::WarningCapture;
using Kind = DiffLine::Kind;

namespace {

const std::string kFixtures = REVASSIST_FIXTURES;

}  // namespace

TEST_CASE("empty input is malformed") {
    CHECK_THROWS_AS(parse_unified_diff(""), MalformedDiff);
    CHECK_THROWS_AS(parse_unified_diff("just some text\nwithout headers\n"), MalformedDiff);
}

TEST_CASE("one hunk line numbers follow the header") {
    const auto patch = parse_unified_diff(
        "--- a/f.txt\n"
        "+++ b/f.txt\n"
        "@@ -1,2 +1,3 @@\n"
        " a\n"
        "+b\n"
        " c\n");
    REQUIRE(patch.files.size() == 1);
    CHECK(patch.files[0].path == "f.txt");
    REQUIRE(patch.files[0].chunks.size() == 1);
    const auto& lines = patch.files[0].chunks[0].lines;
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == DiffLine{Kind::Context, 1, 1, "a"});
    CHECK(lines[1] == DiffLine{Kind::Added, std::nullopt, 2, "b"});
    CHECK(lines[2] == DiffLine{Kind::Context, 2, 3, "c"});
    CHECK(patch.files[0].chunks[0].header == "@@ -1,2 +1,3 @@");
    CHECK(patch.status == PatchStatus::NeedsReview);
    CHECK_FALSE(patch.id.empty());
}

TEST_CASE("malformed hunks are rejected without partial output") {
    SUBCASE("bad header") {
        CHECK_THROWS_AS(parse_unified_diff("--- a/x\n+++ b/x\n@@ -1,x +1 @@\n a\n"), MalformedDiff);
        CHECK_THROWS_AS(parse_unified_diff("--- a/x\n+++ b/x\n@@ 1,1 +1 @@\n a\n"), MalformedDiff);
    }
    SUBCASE("truncated") {
        CHECK_THROWS_AS(parse_unified_diff("--- a/x\n+++ b/x\n@@ -1,3 +1,3 @@\n a\n b\n"), MalformedDiff);
    }
    SUBCASE("count mismatch") {
        CHECK_THROWS_AS(parse_unified_diff("--- a/x\n+++ b/x\n@@ -1,1 +1,1 @@\n+a\n+b\n"), MalformedDiff);
        CHECK_THROWS_AS(parse_unified_diff("--- a/x\n+++ b/x\n@@ -1,2 +1,1 @@\n a\n?b\n"), MalformedDiff);
    }
    SUBCASE("hunk before any file header") {
        CHECK_THROWS_AS(parse_unified_diff("@@ -1 +1 @@\n-a\n+b\n"), MalformedDiff);
    }
    SUBCASE("overlapping hunks") {
        CHECK_THROWS_AS(parse_unified_diff("--- a/x\n+++ b/x\n@@ -5,1 +5,1 @@\n-a\n+b\n@@ -5,1 +5,1 @@\n-a\n+b\n"),
                        MalformedDiff);
    }
    SUBCASE("duplicate path") {
        CHECK_THROWS_AS(parse_unified_diff("--- a/x\n+++ b/x\n@@ -1 +1 @@\n-a\n+b\n"
                                           "--- a/x\n+++ b/x\n@@ -9 +9 @@\n-a\n+b\n"),
                        MalformedDiff);
    }
}

TEST_CASE("header defaults, new files and no-newline markers") {
    const auto patch = parse_unified_diff(
        "diff --git a/new.txt b/new.txt\n"
        "new file mode 100644\n"
        "--- /dev/null\n"
        "+++ b/new.txt\n"
        "@@ -0,0 +1,2 @@\n"
        "+one\n"
        "+two\n"
        "\\ No newline at end of file\n"
        "diff --git a/gone.txt b/gone.txt\n"
        "deleted file mode 100644\n"
        "--- a/gone.txt\n"
        "+++ /dev/null\n"
        "@@ -1 +0,0 @@\n"
        "-bye\n");
    REQUIRE(patch.files.size() == 2);
    CHECK(patch.files[0].path == "new.txt");
    CHECK(patch.files[0].chunks[0].lines.size() == 2);
    CHECK(patch.files[0].chunks[0].lines[1].new_line == 2);
    CHECK(patch.files[1].path == "gone.txt");
    CHECK(patch.files[1].chunks[0].lines[0] == DiffLine{Kind::Removed, 1, std::nullopt, "bye"});
    CHECK(patch.files[1].chunks[0].anchor_line() == 1);
}

TEST_CASE("binary and rename-only entries are skipped with a warning") {
    WarningCapture warnings;
    const auto patch = parse_unified_diff(
        "diff --git a/img.png b/img.png\n"
        "index 0000000..1111111 100644\n"
        "Binary files a/img.png and b/img.png differ\n"
        "diff --git a/old.c b/new.c\n"
        "similarity index 100%\n"
        "rename from old.c\n"
        "rename to new.c\n"
        "diff --git a/k.c b/k.c\n"
        "--- a/k.c\n"
        "+++ b/k.c\n"
        "@@ -3 +3 @@\n"
        "-x\n"
        "+y\n");
    REQUIRE(patch.files.size() == 1);
    CHECK(patch.files[0].path == "k.c");
    REQUIRE(warnings.messages.size() == 2);
    CHECK(warnings.messages[0].find("binary") != std::string::npos);
    CHECK(warnings.messages[1].find("rename") != std::string::npos);
}

TEST_CASE("CRLF endings and invalid UTF-8") {
    const std::string diff = "--- a/w.txt\r\n+++ b/w.txt\r\n@@ -1 +1 @@\r\n-caf\xE9\r\n+caf\xC3\xA9\r\n";
    const auto patch = parse_unified_diff(diff);
    const auto& lines = patch.files.at(0).chunks.at(0).lines;
    CHECK(lines[0].text == "caf\xEF\xBF\xBD");
    CHECK(lines[1].text == "caf\xC3\xA9");
}

TEST_CASE("an empty line inside a hunk is an empty context line") {
    const auto patch = parse_unified_diff("--- a/x\n+++ b/x\n@@ -1,3 +1,3 @@\n a\n\n-b\n+c\n");
    const auto& lines = patch.files.at(0).chunks.at(0).lines;
    REQUIRE(lines.size() == 4);
    CHECK(lines[1] == DiffLine{Kind::Context, 2, 2, ""});
}

TEST_CASE("preamble text before the first header is ignored") {
    const auto patch = parse_unified_diff(
        "From 1234 Mon Sep 17 00:00:00 2001\n"
        "Subject: [PATCH] tweak\n"
        "---\n"
        " x | 2 +-\n"
        "\n"
        "diff --git a/x b/x\n"
        "--- a/x\n"
        "+++ b/x\n"
        "@@ -1 +1 @@\n"
        "-a\n"
        "+b\n"
        "-- \n"
        "2.40.0\n");
    REQUIRE(patch.files.size() == 1);
    CHECK(patch.files[0].chunks[0].lines.size() == 2);
}

TEST_CASE("format_patch renders a single added line") {
    const auto patch = parse_unified_diff("--- a/a.c\n+++ b/a.c\n@@ -6,0 +7 @@\n+x = 1\n");
    const auto formatted = format_patch(patch);
    CHECK(formatted.text == "File: a.c\n7 + x = 1\n");
    CHECK(formatted.contains("a.c", 7));
    CHECK_FALSE(formatted.contains("a.c", 6));
}

TEST_CASE("format_patch groups chunks of one file under one heading") {
    const auto patch = parse_unified_diff(
        "--- a/a.c\n+++ b/a.c\n"
        "@@ -2 +2 @@\n-old\n+new\n"
        "@@ -20,2 +20,2 @@\n ctx\n-gone\n+here\n");
    const auto formatted = format_patch(patch);
    CHECK(formatted.text ==
          "File: a.c\n"
          "2 - old\n"
          "2 + new\n"
          "\n"
          "20   ctx\n"
          "21 - gone\n"
          "21 + here\n");
    // removed and added lines with the same number share one index entry
    CHECK(formatted.line_index.at(LineKey{"a.c", 2}) == 1);
    CHECK(formatted.line_index.at(LineKey{"a.c", 21}) == 5);
}

TEST_CASE("two-file fixture matches the hand-traced golden") {
    const auto diff = text::read_file(kFixtures + "/patch/two_file.patch");
    const auto patch = parse_unified_diff(diff, "D100");
    CHECK(patch.id == "D100");
    REQUIRE(patch.files.size() == 2);
    CHECK(patch.files[0].path == "scripts/report.py");
    CHECK(patch.files[1].path == "src/parser.c");
    CHECK(patch.files[0].chunks.size() == 1);
    CHECK(patch.files[1].chunks.size() == 2);

    const auto formatted = format_patch(patch);
    CHECK(formatted.text == text::read_file(kFixtures + "/patch/two_file.formatted.golden"));

    const auto chunks = chunks_of(patch);
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[0].header == patch.files[0].chunks[0].header);
    CHECK(chunks[1].header == patch.files[1].chunks[0].header);
    CHECK(chunks[2].header == patch.files[1].chunks[1].header);
    CHECK(chunks[2].anchor_line() == 22);
}

TEST_CASE("chunks_of ordering") {
    CHECK(chunks_of(Patch{}).empty());
    const auto patch = parse_unified_diff(
        "--- a/a\n+++ b/a\n@@ -1 +1 @@\n-1\n+1a\n@@ -10 +10 @@\n-2\n+2a\n@@ -30 +30 @@\n-3\n+3a\n");
    const auto chunks = chunks_of(patch);
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[0].anchor_line() == 1);
    CHECK(chunks[1].anchor_line() == 10);
    CHECK(chunks[2].anchor_line() == 30);
    CHECK(chunk_text(chunks[0]) == "-1\n+1a");
}

TEST_CASE("line index keys resolve to lines with the same number prefix") {
    const auto patch = parse_unified_diff(text::read_file(kFixtures + "/patch/two_file.patch"));
    const auto formatted = format_patch(patch);
    const auto rows = text::split_lines(formatted.text);
    for (const auto& [key, row] : formatted.line_index) {
        REQUIRE(row < rows.size());
        CHECK(rows[row].rfind(std::to_string(key.line) + " ", 0) == 0);
    }
}

// Random diffs built line by line: what the parser reports must be exactly
// what the generator put in.
TEST_CASE("round trip on generated hunks") {
    std::mt19937 rng(7);
    for (int iter = 0; iter < 200; ++iter) {
        std::string diff = "--- a/r.txt\n+++ b/r.txt\n";
        std::vector<std::tuple<char, int, std::string>> expected;
        int old_no = 1 + static_cast<int>(rng() % 5);
        int new_no = old_no;
        const int hunks = 1 + static_cast<int>(rng() % 3);
        for (int h = 0; h < hunks; ++h) {
            std::string body;
            int oc = 0, nc = 0;
            const int hs_old = old_no, hs_new = new_no;
            const int n = 1 + static_cast<int>(rng() % 8);
            for (int i = 0; i < n; ++i) {
                const auto t = "t" + std::to_string(rng() % 1000);
                switch (rng() % 3) {
                    case 0: body += " " + t + "\n"; expected.emplace_back(' ', new_no, t); ++oc; ++nc; ++old_no; ++new_no; break;
                    case 1: body += "-" + t + "\n"; expected.emplace_back('-', old_no, t); ++oc; ++old_no; break;
                    default: body += "+" + t + "\n"; expected.emplace_back('+', new_no, t); ++nc; ++new_no; break;
                }
            }
            diff += "@@ -" + std::to_string(oc ? hs_old : hs_old - 1) + "," + std::to_string(oc) + " +" +
                    std::to_string(nc ? hs_new : hs_new - 1) + "," + std::to_string(nc) + " @@\n" + body;
            const int gap = 2 + static_cast<int>(rng() % 10);
            old_no += gap;
            new_no += gap;
        }
        const auto patch = parse_unified_diff(diff);
        std::vector<std::tuple<char, int, std::string>> got;
        for (const auto& c : chunks_of(patch)) {
            for (const auto& l : c.lines) got.emplace_back(marker_of(l.kind), l.display_line(), l.text);
        }
        auto sorted_expected = expected;
        std::sort(sorted_expected.begin(), sorted_expected.end());
        std::sort(got.begin(), got.end());
        REQUIRE(got == sorted_expected);

        // deterministic and one rendered row per line
        const auto f1 = format_patch(patch);
        CHECK(f1.text == format_patch(patch).text);
        CHECK(text::split_lines(f1.text).size() == 1 + expected.size() + static_cast<std::size_t>(hunks - 1));
    }
}

TEST_CASE("diff corpus matches the reference parse") {
    const auto names = text::split_lines(text::read_file(kFixtures + "/diff_corpus/MANIFEST"));
    REQUIRE(names.size() == 50);
    for (const auto& name : names) {
        CAPTURE(name);
        const auto base = kFixtures + "/diff_corpus/" + name;
        const auto patch = [&] {
            WarningCapture quiet;
            return parse_unified_diff(text::read_file(base + ".diff"));
        }();
        const auto expected = nlohmann::json::parse(text::read_file(base + ".expected.json"));
        REQUIRE(patch.files.size() == expected.size());
        for (std::size_t f = 0; f < patch.files.size(); ++f) {
            const auto& ef = expected[f];
            CHECK(patch.files[f].path == ef["path"].get<std::string>());
            REQUIRE(patch.files[f].chunks.size() == ef["chunks"].size());
            for (std::size_t c = 0; c < patch.files[f].chunks.size(); ++c) {
                const auto& lines = patch.files[f].chunks[c].lines;
                const auto& el = ef["chunks"][c];
                REQUIRE(lines.size() == el.size());
                for (std::size_t i = 0; i < lines.size(); ++i) {
                    const auto& rec = el[i];
                    CHECK(std::string(1, marker_of(lines[i].kind)) == rec[0].get<std::string>());
                    CHECK(lines[i].old_line == (rec[1].is_null() ? std::nullopt : std::optional<int>(rec[1].get<int>())));
                    CHECK(lines[i].new_line == (rec[2].is_null() ? std::nullopt : std::optional<int>(rec[2].get<int>())));
                    CHECK(lines[i].text == rec[3].get<std::string>());
                }
            }
        }
        CHECK(format_patch(patch).text == text::read_file(base + ".formatted"));
    }
}
