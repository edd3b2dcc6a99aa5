#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "doctest.h"
#include "revassist/errors.hpp"
#include "revassist/example_store.hpp"
#include "oracle/oracles.hpp"

using namespace revassist;
using namespace revassist::testing;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = REVASSIST_FIXTURES;

// Embedder backed by an explicit text -> vector table.
struct TableEmbedder {
    std::shared_ptr<std::map<std::string, Embedding, std::less<>>> table =
        std::make_shared<std::map<std::string, Embedding, std::less<>>>();

    Embedding operator()(std::string_view text) const {
        const auto it = table->find(text);
        if (it == table->end()) throw std::runtime_error("no vector for text");
        return it->second;
    }
};

struct SyntheticStore {
    std::vector<std::vector<double>> vectors;
    std::vector<ExampleTuple> tuples;
    TableEmbedder embed;
    ExampleStore store;
};

constexpr std::size_t kDim = 32;

std::unique_ptr<SyntheticStore> make_synthetic(std::size_t n, std::uint64_t seed) {
    auto s = std::make_unique<SyntheticStore>();
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        auto v = random_vector(rng, kDim);
        ExampleTuple t{"chunk " + std::to_string(i), "comment " + std::to_string(i), "synthetic"};
        (*s->embed.table)[t.chunk_text] = v;
        s->vectors.push_back(std::move(v));
        s->tuples.push_back(std::move(t));
    }
    REQUIRE(s->store.ingest(s->tuples, s->embed) == n);
    return s;
}

Patch patch_with_chunks(int chunks) {
    std::string diff = "--- a/f.c\n+++ b/f.c\n";
    for (int c = 0; c < chunks; ++c) {
        const int start = 1 + c * 10;
        diff += "@@ -" + std::to_string(start) + ",1 +" + std::to_string(start) + ",2 @@\n";
        diff += " ctx" + std::to_string(c) + "\n+added" + std::to_string(c) + "\n";
    }
    return parse_unified_diff(diff, "p");
}

fs::path temp_store_path(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("revassist_" + name + ".store");
    fs::remove(p);
    return p;
}

}  // namespace

TEST_CASE("cosine similarity properties") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        auto u = random_vector(rng, 17);
        auto neg = u;
        for (auto& x : neg) x = -x;
        CHECK(cosine_similarity(u, u) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(cosine_similarity(u, neg) == doctest::Approx(-1.0).epsilon(1e-12));
        const auto v = random_vector(rng, 17);
        const double s = cosine_similarity(u, v);
        CHECK(s >= -1.0);
        CHECK(s <= 1.0);
        CHECK(s == doctest::Approx(oracle_cosine(u, v)).epsilon(1e-12));
    }
    const std::vector<double> zero(4, 0.0), one{1, 0, 0, 0};
    CHECK(cosine_similarity(zero, one) == 0.0);
}

TEST_CASE("corpus filters") {
    CHECK(passes_corpus_filters({"c", std::string(500, 'x'), ""}));
    CHECK_FALSE(passes_corpus_filters({"c", std::string(501, 'x'), ""}));
    // length counts characters, not bytes
    std::string accented;
    for (int i = 0; i < 500; ++i) accented += "\xc3\xa9";
    CHECK(passes_corpus_filters({"c", accented, ""}));
    CHECK_FALSE(passes_corpus_filters({"c", "see https://example.com", ""}));
    CHECK_FALSE(passes_corpus_filters({"c", "see HTTP://example.com", ""}));
    CHECK(passes_corpus_filters({"c", "the http client is fine", ""}));

    HashNgramEmbedder embed;
    ExampleStore store;
    CHECK(store.ingest({}, embed) == 0);
    CHECK(store.ingest({{"c", std::string(501, 'x'), ""}}, embed) == 0);
    CHECK(store.ingest({{"c", "https://example.com", ""}}, embed) == 0);
    CHECK(store.size() == 0);
}

TEST_CASE("fixture corpus accepts exactly five tuples") {
    const auto tuples = load_corpus_jsonl(kFixtures + "/examples_corpus.jsonl");
    REQUIRE(tuples.size() == 10);
    ExampleStore store;
    CHECK(store.ingest(tuples, HashNgramEmbedder{}) == 5);
    CHECK(store.size() == 5);

    SUBCASE("re-ingesting the accepted set is filter idempotent") {
        std::vector<ExampleTuple> accepted;
        for (const auto& r : *store.snapshot()) accepted.push_back(r.tuple);
        std::vector<ExampleTuple> expected;
        std::copy_if(tuples.begin(), tuples.end(), std::back_inserter(expected), passes_corpus_filters);
        CHECK(accepted == expected);
        ExampleStore again;
        CHECK(again.ingest(accepted, HashNgramEmbedder{}) == accepted.size());
    }
    SUBCASE("every accepted tuple is retrievable verbatim") {
        HashNgramEmbedder embed;
        for (const auto& r : *store.snapshot()) {
            const auto got = store.retrieve_for_chunk(r.tuple.chunk_text, 1, embed);
            REQUIRE(got.size() == 1);
            CHECK(got[0].example == r.tuple);
            CHECK(got[0].similarity == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("malformed corpus line") {
    const auto p = fs::temp_directory_path() / "revassist_bad_corpus.jsonl";
    std::ofstream(p) << "{\"chunk_text\":\"a\",\"comment_text\":\"b\"}\n{not json}\n";
    CHECK_THROWS_AS(load_corpus_jsonl(p), InvalidInput);
    fs::remove(p);
}

TEST_CASE("retrieve_for_chunk small cases") {
    TableEmbedder embed;
    ExampleStore store;
    (*embed.table)["q"] = {0, 1, 0};
    CHECK(store.retrieve_for_chunk("q", 3, embed).empty());

    (*embed.table)["a"] = {1, 0, 0};
    (*embed.table)["b"] = {0, 1, 0};
    (*embed.table)["c"] = {0, 0, 1};
    REQUIRE(store.ingest({{"a", "A", ""}, {"b", "B", ""}, {"c", "C", ""}}, embed) == 3);
    const auto got = store.retrieve_for_chunk("q", 3, embed);
    REQUIRE(got.size() == 3);
    CHECK(got[0].example.comment_text == "B");
    CHECK(got[0].similarity == 1.0);
    // equal similarities keep ingestion order
    CHECK(got[1].example.comment_text == "A");
    CHECK(got[2].example.comment_text == "C");
    CHECK(store.retrieve_for_chunk("q", 10, embed).size() == 3);
}

TEST_CASE("embedder failures leave the store unchanged") {
    TableEmbedder embed;
    (*embed.table)["a"] = {1, 0};
    (*embed.table)["wide"] = {1, 0, 0};
    (*embed.table)["nan"] = {std::nan(""), 0};
    ExampleStore store;
    REQUIRE(store.ingest({{"a", "A", ""}}, embed) == 1);
    CHECK_THROWS_AS(store.ingest({{"a", "A2", ""}, {"missing", "M", ""}}, embed), EmbedderFailure);
    CHECK_THROWS_AS(store.ingest({{"a", "A2", ""}, {"wide", "W", ""}}, embed), EmbedderFailure);
    CHECK_THROWS_AS(store.ingest({{"nan", "N", ""}}, embed), EmbedderFailure);
    CHECK(store.size() == 1);
    CHECK_THROWS_AS(store.retrieve_for_chunk("wide", 1, embed), EmbedderFailure);
}

TEST_CASE("retrieval equals the brute-force oracle on 1000 random vectors") {
    const auto s = make_synthetic(1000, 20240917);
    std::mt19937_64 rng(99);
    for (int q = 0; q < 100; ++q) {
        const auto query = random_vector(rng, kDim);
        (*s->embed.table)["query"] = query;
        const auto got = s->store.retrieve_for_chunk("query", 10, s->embed);
        const auto want = oracle_top_k(s->vectors, query, 10);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(got[i].example == s->tuples[want[i]]);
            CHECK(got[i].similarity == doctest::Approx(oracle_cosine(s->vectors[want[i]], query)).epsilon(1e-12));
            if (i > 0) CHECK(got[i - 1].similarity >= got[i].similarity);
        }
    }
}

TEST_CASE("select_examples equals the union oracle") {
    const auto s = make_synthetic(1000, 7);
    std::mt19937_64 rng(3);

    SUBCASE("no chunks") {
        CHECK(s->store.select_examples(Patch{}, s->embed).empty());
    }
    SUBCASE("one chunk matches retrieve_for_chunk truncated") {
        const auto patch = patch_with_chunks(1);
        const auto text = chunk_text(chunks_of(patch)[0]);
        (*s->embed.table)[text] = random_vector(rng, kDim);
        const auto single = s->store.retrieve_for_chunk(text, 10, s->embed);
        const auto selected = s->store.select_examples(patch, s->embed, 10, 4);
        REQUIRE(selected.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) CHECK(selected[i] == single[i].example);
    }
    SUBCASE("three chunks, many patches") {
        for (int round = 0; round < 30; ++round) {
            const auto patch = patch_with_chunks(3);
            std::map<std::size_t, double> best;  // corpus index -> best similarity
            for (const auto& c : chunks_of(patch)) {
                auto q = random_vector(rng, kDim);
                // bias one chunk toward another's neighborhood so the unions overlap
                if (round % 2 == 0 && !best.empty()) {
                    const auto& near = s->vectors[best.begin()->first];
                    for (std::size_t d = 0; d < kDim; ++d) q[d] = near[d] + 0.3 * q[d];
                }
                (*s->embed.table)[chunk_text(c)] = q;
                for (auto i : oracle_top_k(s->vectors, q, 10)) {
                    const double sim = oracle_cosine(s->vectors[i], q);
                    auto [it, fresh] = best.try_emplace(i, sim);
                    if (!fresh) it->second = std::max(it->second, sim);
                }
            }
            std::vector<std::pair<std::size_t, double>> ranked(best.begin(), best.end());
            std::stable_sort(ranked.begin(), ranked.end(),
                             [](const auto& a, const auto& b) { return a.second > b.second; });
            ranked.resize(std::min<std::size_t>(10, ranked.size()));
            const auto got = s->store.select_examples(patch, s->embed);
            REQUIRE(got.size() == ranked.size());
            for (std::size_t i = 0; i < ranked.size(); ++i) CHECK(got[i] == s->tuples[ranked[i].first]);
        }
    }
}

TEST_CASE("select_examples deduplicates identical tuples") {
    TableEmbedder embed;
    const auto patch = patch_with_chunks(2);
    const auto chunks = chunks_of(patch);
    (*embed.table)[chunk_text(chunks[0])] = {1, 0};
    (*embed.table)[chunk_text(chunks[1])] = {0, 1};
    (*embed.table)["x"] = {1, 1};
    (*embed.table)["y"] = {1, 0.2};
    ExampleStore store;
    REQUIRE(store.ingest({{"x", "X", "p1"}, {"x", "X", "p2"}, {"y", "Y", ""}}, embed) == 3);
    const auto got = store.select_examples(patch, embed);
    REQUIRE(got.size() == 2);
    CHECK(got[0].comment_text == "Y");
    CHECK(got[1].comment_text == "X");
    CHECK(got[1].project == "p1");
}

TEST_CASE("persistence round-trip") {
    const auto path = temp_store_path("roundtrip");
    HashNgramEmbedder embed(64);
    const auto tuples = load_corpus_jsonl(kFixtures + "/examples_corpus.jsonl");
    {
        auto store = ExampleStore::open(path);
        CHECK(store->size() == 0);
        CHECK(store->ingest(tuples, embed) == 5);
        CHECK(store->ingest({{"chunk\nwith newline", "comment with 12:colons", "p"}}, embed) == 1);
    }
    auto reloaded = ExampleStore::open(path);
    REQUIRE(reloaded->size() == 6);
    ExampleStore fresh;
    fresh.ingest(tuples, embed);
    fresh.ingest({{"chunk\nwith newline", "comment with 12:colons", "p"}}, embed);
    const auto a = reloaded->snapshot();
    const auto b = fresh.snapshot();
    for (std::size_t i = 0; i < a->size(); ++i) {
        CHECK((*a)[i].tuple == (*b)[i].tuple);
        CHECK((*a)[i].embedding == (*b)[i].embedding);  // bit-exact
        CHECK((*a)[i].seq == i);
    }
    fs::remove(path);
}

TEST_CASE("corrupt store file") {
    const auto path = temp_store_path("corrupt");
    std::ofstream(path) << "revassist-examples 1\n2 1:a1:b0: 3ff0000000000000\n";
    CHECK_THROWS_AS(ExampleStore::open(path), StoreCorrupt);
    std::ofstream(path) << "something else\n";
    CHECK_THROWS_AS(ExampleStore::open(path), StoreCorrupt);
    fs::remove(path);
}

TEST_CASE("concurrent readers see consistent snapshots while ingesting") {
    const auto s = make_synthetic(200, 1);
    // the table is filled before any reader starts; only the store changes
    std::mt19937_64 rng(2);
    std::vector<ExampleTuple> extras;
    for (int i = 0; i < 50; ++i) {
        extras.push_back({"extra " + std::to_string(i), "c", ""});
        (*s->embed.table)[extras.back().chunk_text] = random_vector(rng, kDim);
    }
    std::atomic<bool> stop{false};
    std::atomic<int> bad{0};
    std::vector<std::thread> readers;
    for (int t = 0; t < 4; ++t) {
        readers.emplace_back([&] {
            while (!stop) {
                const auto got = s->store.retrieve_for_chunk("chunk 0", 5, s->embed);
                if (got.empty() || got[0].example.comment_text != "comment 0") ++bad;
            }
        });
    }
    for (const auto& t : extras) s->store.ingest({t}, s->embed);
    stop = true;
    for (auto& r : readers) r.join();
    CHECK(bad == 0);
    CHECK(s->store.size() == 250);
}
