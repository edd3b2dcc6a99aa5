#include "revassist/evaluation.hpp"

#include "revassist/errors.hpp"
#include "revassist/text_util.hpp"

using nlohmann::json;

namespace revassist {

namespace {

constexpr std::pair<IgnoreReason, std::string_view> kReasons[] = {
    {IgnoreReason::Incorrect, "incorrect"},
    {IgnoreReason::Trivial, "trivial"},
    {IgnoreReason::ValuableTipReviewer, "valuable_tip_reviewer"},
    {IgnoreReason::ValuableTipDevelopment, "valuable_tip_development"},
    {IgnoreReason::NotSure, "not_sure"},
    {IgnoreReason::SeenNoReason, "seen_no_reason"},
};

template <typename T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

}  // namespace

std::string_view reason_name(IgnoreReason reason) {
    for (const auto& [r, name] : kReasons) {
        if (r == reason) return name;
    }
    return "unknown";
}

std::optional<IgnoreReason> parse_reason(std::string_view name) {
    for (const auto& [r, n] : kReasons) {
        if (n == name) return r;
    }
    return std::nullopt;
}

const std::vector<IgnoreReason>& all_reasons() {
    static const std::vector<IgnoreReason> all = [] {
        std::vector<IgnoreReason> out;
        for (const auto& [r, n] : kReasons) out.push_back(r);
        return out;
    }();
    return all;
}

json to_json(const StoredComment& c) {
    json j{{"id", c.id},
           {"patch_id", c.patch_id},
           {"approach", c.approach},
           {"com", c.com},
           {"line", c.line},
           {"file", c.file},
           {"created_at", c.created_at},
           {"opened_at", optional_json(c.opened_at)},
           {"evaluated_at", optional_json(c.evaluated_at)},
           {"decision", nullptr},
           {"reason", nullptr},
           {"published_text", optional_json(c.published_text)}};
    if (c.decision) {
        j["decision"] = c.decision->kind == EvaluationDecision::Kind::Accept ? "accept" : "ignore";
        if (c.decision->reason) j["reason"] = reason_name(*c.decision->reason);
    }
    return j;
}

StoredComment comment_from_json(const json& j) {
    try {
        StoredComment c;
        c.id = j.at("id").get<std::string>();
        c.patch_id = j.at("patch_id").get<std::string>();
        c.approach = j.value("approach", std::string{});
        c.com = j.at("com").get<std::string>();
        c.line = j.at("line").get<int>();
        c.file = j.at("file").get<std::string>();
        c.created_at = j.at("created_at").get<Timestamp>();
        c.opened_at = optional_field<Timestamp>(j, "opened_at");
        c.evaluated_at = optional_field<Timestamp>(j, "evaluated_at");
        c.published_text = optional_field<std::string>(j, "published_text");
        if (const auto d = optional_field<std::string>(j, "decision")) {
            EvaluationDecision decision;
            if (*d == "accept") decision.kind = EvaluationDecision::Kind::Accept;
            else if (*d == "ignore") decision.kind = EvaluationDecision::Kind::Ignore;
            else throw InvalidInput("unknown decision '" + *d + "'");
            if (const auto r = optional_field<std::string>(j, "reason")) {
                decision.reason = parse_reason(*r);
                if (!decision.reason) throw InvalidInput("unknown reason '" + *r + "'");
            }
            if (!decision.valid()) throw InvalidInput("decision and reason do not agree");
            c.decision = decision;
        }
        return c;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("bad comment record: ") + e.what());
    }
}

std::vector<StoredComment> read_export(std::string_view jsonl) {
    std::vector<StoredComment> out;
    std::size_t lineno = 0;
    for (const auto& line : text::split_lines(jsonl)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(comment_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw InvalidInput("export line " + std::to_string(lineno) + ": " + e.what());
        } catch (const InvalidInput& e) {
            throw InvalidInput("export line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace revassist
