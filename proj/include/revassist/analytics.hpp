#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "revassist/chat_model.hpp"
#include "revassist/embedding.hpp"
#include "revassist/evaluation.hpp"
#include "revassist/prompts.hpp"

namespace revassist {

// ---- ratios -----------------------------------------------------------------

struct EvaluationCounts {
    int accepted = 0;
    int valuable_tip = 0;
    int other_rejected = 0;
    int not_sure = 0;  // not part of evaluated()
    int seen_only = 0;

    int evaluated() const { return accepted + valuable_tip + other_rejected + seen_only; }
    bool operator==(const EvaluationCounts&) const = default;
};

/// Buckets a log. Comments that were opened but never evaluated count as
/// seen_only, like an explicit seen_no_reason; unopened ones are skipped.
EvaluationCounts count_evaluations(std::span<const StoredComment> log);

/// Throw EmptyDenominator when nothing was evaluated.
double acceptance_ratio(const EvaluationCounts& c);
double appreciation_ratio(const EvaluationCounts& c);

// ---- tests and effect sizes ---------------------------------------------------

enum class Alternative { TwoSided, Less, Greater };
std::string_view alternative_name(Alternative a);

struct FisherResult {
    double p_value = 1.0;
};

/// Fisher's exact test on [[a, b], [c, d]] by hypergeometric enumeration
/// over tables with the same margins. TwoSided sums every table at most as
/// probable as the observed one (relative slack 1e-7). Less and Greater are
/// the lower and upper tails of `a`. Throws DegenerateTable on all zeros.
FisherResult fisher_exact_2x2(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d,
                              Alternative alternative = Alternative::TwoSided);

enum class EffectLabel { Negligible, Small, Medium, Large };
std::string_view effect_label_name(EffectLabel l);

/// Largest of .2 / .5 / .8 strictly exceeded by |d|.
EffectLabel effect_label(double d);

struct EffectSize {
    double d = 0;
    EffectLabel label = EffectLabel::Negligible;
};

/// Cohen's d between two proportions, treating each group as n samples of
/// 0/1 with the pooled (n - 1) standard deviation. Throws ZeroVariance when
/// that deviation is zero and InvalidInput on n <= 0 or p outside [0, 1].
EffectSize cohens_d(double p1, int n1, double p2, int n2);

// ---- edits, impact, durations -------------------------------------------------

enum class EditClass { AsIs, Shorten, Extended, Other };
std::string_view edit_class_name(EditClass e);

/// Compares texts after trimming trailing whitespace: equal is AsIs, a
/// published text strictly inside the generated one is Shorten, the reverse
/// is Extended.
EditClass classify_edit(std::string_view generated, std::string_view published);

struct ImpactRecord {
    bool revised_line = false;
    bool revised_chunk = false;  // implied by revised_line
    bool thread = false;

    bool operator==(const ImpactRecord&) const = default;
};

using LineSet = std::set<std::pair<std::string, int>>;

ImpactRecord impact_flags(const StoredComment& comment, const LineSet& revised_lines,
                          const LineSet& revised_chunk_lines, int replies);

/// One row of an impact file: a comment position, the group it belongs to
/// (e.g. "generated" or "human") and what happened after it.
struct ImpactObservation {
    std::string group;
    std::string file;
    int line = 0;
    LineSet revised_lines;
    LineSet revised_chunk_lines;
    int replies = 0;
};

/// JSON Lines with {"group","file","line","revised_lines":[[file,line]...],
/// "revised_chunk_lines":[...],"replies"}. Throws InvalidInput.
std::vector<ImpactObservation> read_impact(std::string_view jsonl);

/// Empirical quantile with linear interpolation between order statistics
/// (the common "type 7" definition). Throws InvalidInput on empty input.
double quantile(std::vector<double> values, double q);

struct DurationSummary {
    std::size_t n = 0;
    double median = 0;  // seconds
    double low = 0;     // 2.5% quantile
    double high = 0;    // 97.5% quantile
};

DurationSummary summarize_durations(std::vector<double> seconds);

struct DurationReport {
    std::optional<DurationSummary> accepted;
    std::optional<DurationSummary> others;
    std::optional<DurationSummary> per_patch;
};

/// evaluated_at - opened_at per comment that has both, and its sum per patch.
DurationReport evaluation_durations(std::span<const StoredComment> log);

// ---- clustering and agreement -------------------------------------------------

struct KMeansResult {
    std::vector<int> assignments;
    std::vector<Embedding> centroids;
    std::vector<double> inertia_history;  // after each centroid update
    double inertia = 0;
    int iterations = 0;
    bool converged = false;
};

/// Lloyd's algorithm from k-means++ seeding until the assignment is a fixed
/// point or `max_iterations` updates. A cluster that loses all its points
/// keeps its centroid. Ties go to the lowest cluster index. Throws KTooLarge
/// when k exceeds the number of points and InvalidInput on k = 0 or mixed
/// dimensions.
KMeansResult kmeans(const std::vector<Embedding>& points, std::size_t k, std::uint64_t seed,
                    int max_iterations = 300);

/// Within-cluster sum of squared distances.
double inertia(const std::vector<Embedding>& points, const std::vector<int>& assignments,
               const std::vector<Embedding>& centroids);

/// Per-item modal label over runs. A tie goes to the tied label that
/// appears first when reading the item's labels in run order.
std::vector<std::string> majority_label(const std::vector<std::vector<std::string>>& runs);

/// Throws InvalidInput on unequal or empty inputs and DegenerateAgreement
/// when chance agreement is 1.
double cohen_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b);

// ---- categorization -------------------------------------------------------------

enum class GeneralCategory { Functional, Refactoring, Documentation, Discussion };
std::string_view general_category_name(GeneralCategory g);

struct CategoryLabel {
    GeneralCategory general = GeneralCategory::Functional;
    std::string specific;
    bool novel = false;  // not in the known list; shown with a star

    std::string text() const;  // "General - Specific", plus "*" when novel
    bool operator==(const CategoryLabel&) const = default;
};

/// Reads "General - Specific[: description]" lines; returns "General - Specific".
std::vector<std::string> load_categories(const std::string& path);

/// Parses a model reply such as "Functional - Validation" or
/// "Refactoring - Naming*". The label is novel when starred or when it is
/// not among `known` (compared case-insensitively).
std::optional<CategoryLabel> parse_category_label(std::string_view reply, const std::vector<std::string>& known);

struct CategorizeOptions {
    std::size_t k = 400;
    std::uint64_t seed = 1;
    int runs = 5;
    std::size_t max_comments_per_prompt = 30;
};

struct CategorizedComment {
    std::string comment_id;
    int cluster = 0;  // k-means cluster before merging
    std::optional<CategoryLabel> label;
};

struct CategoryGroup {
    std::optional<CategoryLabel> label;  // nullopt: no run produced a usable label
    std::vector<int> clusters;
    std::vector<std::string> comment_ids;
};

struct Categorization {
    std::vector<CategorizedComment> comments;  // input order
    std::vector<CategoryGroup> groups;         // merged by label, largest first
};

/// Embeds the comments, clusters them (k is capped at the comment count),
/// asks the model for a label per cluster `runs` times and keeps the
/// majority. Clusters that end up with the same label are merged.
Categorization categorize(std::span<const StoredComment> comments, const Embedder& embed, ChatModel& model,
                          const PromptTemplates& templates, const std::vector<std::string>& categories,
                          const CategorizeOptions& options);

// ---- report ---------------------------------------------------------------------

struct RatioRow {
    std::string name;  // approach or "total"
    EvaluationCounts counts;
};

struct Comparison {
    std::string what;
    std::string left, right;
    int left_hits = 0, left_n = 0, right_hits = 0, right_n = 0;
    std::optional<double> p_two_sided;
    std::optional<double> p_one_sided;  // in the direction of the observed difference
    std::optional<EffectSize> effect;
};

struct Report {
    std::vector<RatioRow> ratios;
    std::vector<Comparison> comparisons;
    std::vector<std::pair<EditClass, int>> edits;
    DurationReport durations;
    std::vector<std::pair<std::string, std::vector<ImpactRecord>>> impact;  // per group
};

/// Ratios per approach and in total, code vs example comparisons, edit
/// classes of accepted comments, durations, and impact when given.
Report build_report(std::span<const StoredComment> log, std::span<const ImpactObservation> impact = {});

std::string report_text(const Report& r);
nlohmann::json report_json(const Report& r);

std::string categorization_text(const Categorization& c);
nlohmann::json categorization_json(const Categorization& c);

}  // namespace revassist
