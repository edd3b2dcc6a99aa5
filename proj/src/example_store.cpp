#include "revassist/example_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "revassist/errors.hpp"
#include "revassist/text_util.hpp"

namespace fs = std::filesystem;

namespace revassist {

bool passes_corpus_filters(const ExampleTuple& tuple) {
    if (text::utf8_length(tuple.comment_text) > kMaxExampleCommentLength) return false;
    if (text::contains_ci(tuple.comment_text, "http://") || text::contains_ci(tuple.comment_text, "https://")) {
        return false;
    }
    return true;
}

std::vector<ExampleTuple> load_corpus_jsonl(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open corpus " + path.string());
    std::vector<ExampleTuple> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            out.push_back(ExampleTuple{j.at("chunk_text").get<std::string>(), j.at("comment_text").get<std::string>(),
                                       j.value("project", std::string{})});
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

namespace {

constexpr std::string_view kFileMagic = "revassist-examples 1";

std::string hex_double(double v) {
    static constexpr char digits[] = "0123456789abcdef";
    auto bits = std::bit_cast<std::uint64_t>(v);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[bits & 0xF];
        bits >>= 4;
    }
    return out;
}

void write_field(std::ostream& os, const std::string& s) {
    os << s.size() << ':' << s;
}

class RecordReader {
public:
    explicit RecordReader(std::string data) : data_(std::move(data)) {}

    bool at_end() const { return pos_ >= data_.size(); }

    std::size_t number(char terminator) {
        std::size_t v = 0;
        bool any = false;
        while (pos_ < data_.size() && data_[pos_] >= '0' && data_[pos_] <= '9') {
            v = v * 10 + static_cast<std::size_t>(data_[pos_++] - '0');
            any = true;
        }
        if (!any || pos_ >= data_.size() || data_[pos_] != terminator) fail("expected number");
        ++pos_;
        return v;
    }

    std::string field() {
        const auto len = number(':');
        if (pos_ + len > data_.size()) fail("field runs past end of file");
        std::string s = data_.substr(pos_, len);
        pos_ += len;
        return s;
    }

    void expect(char c) {
        if (pos_ >= data_.size() || data_[pos_] != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    double hex_value() {
        if (pos_ + 16 > data_.size()) fail("truncated embedding");
        std::uint64_t bits = 0;
        for (int i = 0; i < 16; ++i) {
            const char c = data_[pos_++];
            bits <<= 4;
            if (c >= '0' && c <= '9') bits |= static_cast<std::uint64_t>(c - '0');
            else if (c >= 'a' && c <= 'f') bits |= static_cast<std::uint64_t>(c - 'a' + 10);
            else fail("bad hex digit");
        }
        return std::bit_cast<double>(bits);
    }

    std::string_view line() {
        const auto nl = data_.find('\n', pos_);
        const auto end = nl == std::string::npos ? data_.size() : nl;
        std::string_view l(data_.data() + pos_, end - pos_);
        pos_ = nl == std::string::npos ? data_.size() : nl + 1;
        return l;
    }

    [[noreturn]] void fail(const std::string& why) const {
        throw StoreCorrupt("example store: " + why + " at byte " + std::to_string(pos_));
    }

private:
    std::string data_;
    std::size_t pos_ = 0;
};

bool finite(const Embedding& e) {
    return std::all_of(e.begin(), e.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

ExampleStore::ExampleStore() : records_(std::make_shared<const std::vector<Record>>()) {}

std::unique_ptr<ExampleStore> ExampleStore::open(const fs::path& path) {
    auto store = std::make_unique<ExampleStore>();
    std::vector<Record> records;
    std::error_code ec;
    if (fs::exists(path, ec)) {
        std::string data;
        try {
            data = text::read_file(path.string());
        } catch (const std::exception& e) {
            throw StoreCorrupt(e.what());
        }
        RecordReader r(std::move(data));
        if (!r.at_end()) {
            if (r.line() != kFileMagic) r.fail("missing header");
        }
        std::optional<std::size_t> dim;
        while (!r.at_end()) {
            Record rec;
            const auto d = r.number(' ');
            if (dim && *dim != d) r.fail("inconsistent embedding dimension");
            dim = d;
            rec.tuple.chunk_text = r.field();
            rec.tuple.comment_text = r.field();
            rec.tuple.project = r.field();
            rec.embedding.reserve(d);
            for (std::size_t i = 0; i < d; ++i) {
                r.expect(' ');
                rec.embedding.push_back(r.hex_value());
            }
            r.expect('\n');
            rec.seq = records.size();
            records.push_back(std::move(rec));
        }
    } else {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw StoreCorrupt("cannot create " + path.string());
        out << kFileMagic << '\n';
    }
    store->records_ = std::make_shared<const std::vector<Record>>(std::move(records));
    store->file_ = path;
    return store;
}

std::optional<std::size_t> ExampleStore::dim() const {
    const auto snap = snapshot();
    if (snap->empty()) return std::nullopt;
    return snap->front().embedding.size();
}

ExampleStore::Snapshot ExampleStore::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return records_;
}

void ExampleStore::append_to_file(const std::vector<Record>& records) {
    std::ofstream out(*file_, std::ios::binary | std::ios::app);
    if (!out) throw StoreCorrupt("cannot append to " + file_->string());
    for (const auto& rec : records) {
        out << rec.embedding.size() << ' ';
        write_field(out, rec.tuple.chunk_text);
        write_field(out, rec.tuple.comment_text);
        write_field(out, rec.tuple.project);
        for (double x : rec.embedding) out << ' ' << hex_double(x);
        out << '\n';
    }
    out.flush();
    if (!out) throw StoreCorrupt("write failed for " + file_->string());
}

std::size_t ExampleStore::ingest(const std::vector<ExampleTuple>& tuples, const Embedder& embed) {
    std::lock_guard writer(writer_mutex_);
    const auto current = snapshot();
    std::optional<std::size_t> expected_dim;
    if (!current->empty()) expected_dim = current->front().embedding.size();

    std::vector<Record> fresh;
    for (const auto& t : tuples) {
        if (!passes_corpus_filters(t)) continue;
        Embedding e;
        try {
            e = embed(t.chunk_text);
        } catch (const EmbedderFailure&) {
            throw;
        } catch (const std::exception& ex) {
            throw EmbedderFailure(std::string("embedder failed: ") + ex.what());
        }
        if (e.empty()) throw EmbedderFailure("embedder returned an empty vector");
        if (expected_dim && e.size() != *expected_dim) {
            throw EmbedderFailure("embedding dimension " + std::to_string(e.size()) + " differs from store dimension " +
                                  std::to_string(*expected_dim));
        }
        if (!finite(e)) throw EmbedderFailure("embedding contains NaN or Inf");
        expected_dim = e.size();
        fresh.push_back(Record{t, std::move(e), 0});
    }
    if (fresh.empty()) return 0;

    auto next = std::make_shared<std::vector<Record>>(*current);
    for (auto& rec : fresh) {
        rec.seq = next->size();
        next->push_back(rec);
    }
    if (file_) append_to_file(fresh);
    {
        std::lock_guard lock(snapshot_mutex_);
        records_ = std::move(next);
    }
    return fresh.size();
}

std::vector<ExampleStore::Scored> ExampleStore::top_k(const Snapshot& snap, const Embedding& query, std::size_t k) {
    std::vector<Scored> scored;
    scored.reserve(snap->size());
    for (const auto& rec : *snap) scored.push_back(Scored{&rec, cosine_similarity(query, rec.embedding)});
    const auto better = [](const Scored& a, const Scored& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.record->seq < b.record->seq;
    };
    k = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(), better);
    scored.resize(k);
    return scored;
}

namespace {

Embedding embed_query(const Embedder& embed, std::string_view text, std::optional<std::size_t> dim) {
    Embedding q;
    try {
        q = embed(text);
    } catch (const EmbedderFailure&) {
        throw;
    } catch (const std::exception& ex) {
        throw EmbedderFailure(std::string("embedder failed: ") + ex.what());
    }
    if (dim && q.size() != *dim) throw EmbedderFailure("query embedding dimension does not match the store");
    if (!finite(q)) throw EmbedderFailure("query embedding contains NaN or Inf");
    return q;
}

}  // namespace

std::vector<RetrievalResult> ExampleStore::retrieve_for_chunk(std::string_view chunk_text, std::size_t k,
                                                              const Embedder& embed) const {
    const auto snap = snapshot();
    if (snap->empty() || k == 0) return {};
    const auto query = embed_query(embed, chunk_text, snap->front().embedding.size());
    std::vector<RetrievalResult> out;
    for (const auto& s : top_k(snap, query, k)) out.push_back(RetrievalResult{s.record->tuple, s.similarity});
    return out;
}

std::vector<ExampleTuple> ExampleStore::select_examples(const Patch& patch, const Embedder& embed,
                                                        std::size_t per_chunk, std::size_t top) const {
    const auto snap = snapshot();
    const auto chunks = chunks_of(patch);
    if (snap->empty() || chunks.empty() || top == 0) return {};
    const auto dim = snap->front().embedding.size();

    struct Best {
        const Record* record;
        double similarity;
        std::size_t first_seq;
    };
    std::map<std::pair<std::string, std::string>, Best> merged;
    for (const auto& chunk : chunks) {
        const auto query = embed_query(embed, chunk_text(chunk), dim);
        for (const auto& s : top_k(snap, query, per_chunk)) {
            const auto key = std::make_pair(s.record->tuple.chunk_text, s.record->tuple.comment_text);
            auto [it, inserted] = merged.try_emplace(key, Best{s.record, s.similarity, s.record->seq});
            if (!inserted) {
                Best& b = it->second;
                b.first_seq = std::min(b.first_seq, s.record->seq);
                if (s.similarity > b.similarity ||
                    (s.similarity == b.similarity && s.record->seq < b.record->seq)) {
                    b.record = s.record;
                    b.similarity = s.similarity;
                }
            }
        }
    }
    std::vector<Best> ranked;
    ranked.reserve(merged.size());
    for (auto& [key, b] : merged) ranked.push_back(b);
    std::sort(ranked.begin(), ranked.end(), [](const Best& a, const Best& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.first_seq < b.first_seq;
    });
    if (ranked.size() > top) ranked.resize(top);
    std::vector<ExampleTuple> out;
    out.reserve(ranked.size());
    for (const auto& b : ranked) out.push_back(b.record->tuple);
    return out;
}

}  // namespace revassist
