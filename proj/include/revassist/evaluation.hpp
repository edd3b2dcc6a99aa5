#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace revassist {

/// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;

enum class IgnoreReason { Incorrect, Trivial, ValuableTipReviewer, ValuableTipDevelopment, NotSure, SeenNoReason };

std::string_view reason_name(IgnoreReason reason);
std::optional<IgnoreReason> parse_reason(std::string_view name);
const std::vector<IgnoreReason>& all_reasons();

struct EvaluationDecision {
    enum class Kind { Accept, Ignore };

    Kind kind = Kind::Accept;
    std::optional<IgnoreReason> reason;  // required for Ignore, absent for Accept

    static EvaluationDecision accept() { return {Kind::Accept, std::nullopt}; }
    static EvaluationDecision ignore(IgnoreReason r) { return {Kind::Ignore, r}; }

    bool valid() const { return (kind == Kind::Ignore) == reason.has_value(); }
    bool operator==(const EvaluationDecision&) const = default;
};

/// A generated comment as persisted by the service, with its evaluation.
struct StoredComment {
    std::string id;
    std::string patch_id;
    std::string approach;  // "code" or "example"
    std::string com;
    int line = 0;
    std::string file;
    Timestamp created_at = 0;
    std::optional<Timestamp> opened_at;
    std::optional<Timestamp> evaluated_at;
    std::optional<EvaluationDecision> decision;
    std::optional<std::string> published_text;  // only for accepted comments

    bool operator==(const StoredComment&) const = default;
};

/// Wire form used by the REST API and the export log:
/// {"id","patch_id","approach","com","line","file","created_at","opened_at",
///  "evaluated_at","decision","reason","published_text"}; absent values are null.
nlohmann::json to_json(const StoredComment& c);

/// Inverse of to_json. Throws InvalidInput on a missing or mistyped field.
StoredComment comment_from_json(const nlohmann::json& j);

/// Reads a JSON Lines export. Throws InvalidInput naming the bad line.
std::vector<StoredComment> read_export(std::string_view jsonl);

}  // namespace revassist
