#include "revassist/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "revassist/errors.hpp"
#include "revassist/log.hpp"
#include "revassist/text_util.hpp"

using nlohmann::json;

namespace revassist {

namespace {

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

std::string percent(double ratio) { return fmt("%.1f%%", 100.0 * ratio); }

bool is_valuable(const EvaluationDecision& d) {
    return d.reason == IgnoreReason::ValuableTipReviewer || d.reason == IgnoreReason::ValuableTipDevelopment;
}

}  // namespace

// ---- ratios -----------------------------------------------------------------

EvaluationCounts count_evaluations(std::span<const StoredComment> log) {
    EvaluationCounts c;
    for (const auto& comment : log) {
        if (!comment.decision) {
            if (comment.opened_at) ++c.seen_only;
            continue;
        }
        const auto& d = *comment.decision;
        if (d.kind == EvaluationDecision::Kind::Accept) ++c.accepted;
        else if (is_valuable(d)) ++c.valuable_tip;
        else if (d.reason == IgnoreReason::NotSure) ++c.not_sure;
        else if (d.reason == IgnoreReason::SeenNoReason) ++c.seen_only;
        else ++c.other_rejected;
    }
    return c;
}

double acceptance_ratio(const EvaluationCounts& c) {
    if (c.evaluated() <= 0) throw EmptyDenominator("no evaluated comments");
    return static_cast<double>(c.accepted) / c.evaluated();
}

double appreciation_ratio(const EvaluationCounts& c) {
    if (c.evaluated() <= 0) throw EmptyDenominator("no evaluated comments");
    return static_cast<double>(c.accepted + c.valuable_tip) / c.evaluated();
}

// ---- tests and effect sizes ---------------------------------------------------

std::string_view alternative_name(Alternative a) {
    switch (a) {
        case Alternative::TwoSided: return "two-sided";
        case Alternative::Less: return "less";
        case Alternative::Greater: return "greater";
    }
    return "?";
}

FisherResult fisher_exact_2x2(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d,
                              Alternative alternative) {
    const std::uint64_t n = a + b + c + d;
    if (n == 0) throw DegenerateTable("all cells are zero");
    const std::uint64_t row1 = a + b;
    const std::uint64_t col1 = a + c;
    const std::uint64_t lo = row1 + col1 > n ? row1 + col1 - n : 0;
    const std::uint64_t hi = std::min(row1, col1);

    auto log_choose = [](double m, double k) {
        return std::lgamma(m + 1) - std::lgamma(k + 1) - std::lgamma(m - k + 1);
    };
    // Log-weights of every table with these margins; the common denominator
    // C(n, row1) cancels once we normalise by the sum.
    std::vector<double> logw(hi - lo + 1);
    for (std::uint64_t x = lo; x <= hi; ++x) {
        logw[x - lo] = log_choose(static_cast<double>(col1), static_cast<double>(x)) +
                       log_choose(static_cast<double>(n - col1), static_cast<double>(row1 - x));
    }
    const double peak = *std::max_element(logw.begin(), logw.end());
    std::vector<double> w(logw.size());
    double total = 0;
    for (std::size_t i = 0; i < w.size(); ++i) total += (w[i] = std::exp(logw[i] - peak));

    const std::size_t obs = a - lo;
    double tail = 0;
    switch (alternative) {
        case Alternative::TwoSided: {
            const double cutoff = w[obs] * (1 + 1e-7);
            for (const double v : w) {
                if (v <= cutoff) tail += v;
            }
            break;
        }
        case Alternative::Less:
            for (std::size_t i = 0; i <= obs; ++i) tail += w[i];
            break;
        case Alternative::Greater:
            for (std::size_t i = obs; i < w.size(); ++i) tail += w[i];
            break;
    }
    return {std::min(1.0, tail / total)};
}

std::string_view effect_label_name(EffectLabel l) {
    switch (l) {
        case EffectLabel::Negligible: return "negligible";
        case EffectLabel::Small: return "small";
        case EffectLabel::Medium: return "medium";
        case EffectLabel::Large: return "large";
    }
    return "?";
}

EffectLabel effect_label(double d) {
    const double m = std::fabs(d);
    if (m > 0.8) return EffectLabel::Large;
    if (m > 0.5) return EffectLabel::Medium;
    if (m > 0.2) return EffectLabel::Small;
    return EffectLabel::Negligible;
}

EffectSize cohens_d(double p1, int n1, double p2, int n2) {
    if (n1 <= 0 || n2 <= 0) throw InvalidInput("cohens_d: group sizes must be positive");
    if (!(p1 >= 0 && p1 <= 1 && p2 >= 0 && p2 <= 1)) throw InvalidInput("cohens_d: proportions must be in [0, 1]");
    const int dof = n1 + n2 - 2;
    const double pooled_var = dof > 0 ? (n1 * p1 * (1 - p1) + n2 * p2 * (1 - p2)) / dof : 0.0;
    if (!(pooled_var > 0)) throw ZeroVariance("cohens_d: pooled standard deviation is zero");
    const double d = (p1 - p2) / std::sqrt(pooled_var);
    return {d, effect_label(d)};
}

// ---- edits, impact, durations -------------------------------------------------

std::string_view edit_class_name(EditClass e) {
    switch (e) {
        case EditClass::AsIs: return "as-is";
        case EditClass::Shorten: return "shorten";
        case EditClass::Extended: return "extended";
        case EditClass::Other: return "other";
    }
    return "?";
}

EditClass classify_edit(std::string_view generated, std::string_view published) {
    const auto g = text::trim_right(generated);
    const auto p = text::trim_right(published);
    if (g == p) return EditClass::AsIs;
    if (p.size() < g.size() && g.find(p) != std::string_view::npos) return EditClass::Shorten;
    if (g.size() < p.size() && p.find(g) != std::string_view::npos) return EditClass::Extended;
    return EditClass::Other;
}

ImpactRecord impact_flags(const StoredComment& comment, const LineSet& revised_lines,
                          const LineSet& revised_chunk_lines, int replies) {
    const std::pair<std::string, int> key{comment.file, comment.line};
    ImpactRecord r;
    r.revised_line = revised_lines.count(key) > 0;
    r.revised_chunk = r.revised_line || revised_chunk_lines.count(key) > 0;
    r.thread = replies > 0;
    return r;
}

namespace {

LineSet line_set(const json& j, const std::string& where) {
    LineSet out;
    if (j.is_null()) return out;
    if (!j.is_array()) throw InvalidInput(where + ": expected an array of [file, line]");
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_number_integer()) {
            throw InvalidInput(where + ": expected [file, line] pairs");
        }
        out.emplace(e[0].get<std::string>(), e[1].get<int>());
    }
    return out;
}

}  // namespace

std::vector<ImpactObservation> read_impact(std::string_view jsonl) {
    std::vector<ImpactObservation> out;
    int lineno = 0;
    for (const auto& line : text::split_lines(jsonl)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        const std::string where = "impact line " + std::to_string(lineno);
        const auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw InvalidInput(where + ": not a JSON object");
        try {
            ImpactObservation o;
            o.group = j.at("group").get<std::string>();
            o.file = j.at("file").get<std::string>();
            o.line = j.at("line").get<int>();
            o.revised_lines = line_set(j.value("revised_lines", json()), where);
            o.revised_chunk_lines = line_set(j.value("revised_chunk_lines", json()), where);
            o.replies = j.value("replies", 0);
            out.push_back(std::move(o));
        } catch (const json::exception& e) {
            throw InvalidInput(where + ": " + e.what());
        }
    }
    return out;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidInput("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (values.size() - 1) * std::clamp(q, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - lo) * (values[lo + 1] - values[lo]);
}

DurationSummary summarize_durations(std::vector<double> seconds) {
    DurationSummary s;
    s.n = seconds.size();
    s.median = quantile(seconds, 0.5);
    s.low = quantile(seconds, 0.025);
    s.high = quantile(seconds, 0.975);
    return s;
}

DurationReport evaluation_durations(std::span<const StoredComment> log) {
    std::vector<double> accepted, others;
    std::map<std::string, double> per_patch;
    for (const auto& c : log) {
        if (!c.opened_at || !c.evaluated_at || !c.decision) continue;
        const double secs = static_cast<double>(*c.evaluated_at - *c.opened_at) / 1000.0;
        (c.decision->kind == EvaluationDecision::Kind::Accept ? accepted : others).push_back(secs);
        per_patch[c.patch_id] += secs;
    }
    DurationReport r;
    if (!accepted.empty()) r.accepted = summarize_durations(accepted);
    if (!others.empty()) r.others = summarize_durations(others);
    if (!per_patch.empty()) {
        std::vector<double> sums;
        for (const auto& [id, s] : per_patch) sums.push_back(s);
        r.per_patch = summarize_durations(sums);
    }
    return r;
}

// ---- clustering and agreement -------------------------------------------------

namespace {

double dist2(const Embedding& a, const Embedding& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::vector<int> assign(const std::vector<Embedding>& points, const std::vector<Embedding>& centroids) {
    std::vector<int> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            const double d = dist2(points[i], centroids[c]);
            if (d < best) {
                best = d;
                out[i] = static_cast<int>(c);
            }
        }
    }
    return out;
}

void update(const std::vector<Embedding>& points, const std::vector<int>& assignments,
            std::vector<Embedding>& centroids) {
    const std::size_t dim = points[0].size();
    std::vector<Embedding> sums(centroids.size(), Embedding(dim, 0.0));
    std::vector<std::size_t> counts(centroids.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto& s = sums[assignments[i]];
        for (std::size_t j = 0; j < dim; ++j) s[j] += points[i][j];
        ++counts[assignments[i]];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t j = 0; j < dim; ++j) centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
}

std::vector<Embedding> seed_plus_plus(const std::vector<Embedding>& points, std::size_t k, std::mt19937_64& rng) {
    const std::size_t n = points.size();
    std::vector<Embedding> centroids;
    std::vector<bool> chosen(n, false);
    auto pick = [&](std::size_t i) {
        chosen[i] = true;
        centroids.push_back(points[i]);
    };
    pick(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = dist2(points[i], centroids[0]);

    while (centroids.size() < k) {
        double total = 0;
        for (const double v : d2) total += v;
        std::size_t next = n;
        if (total > 0) {
            const double r = std::uniform_real_distribution<double>(0, total)(rng);
            double acc = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0) continue;
                acc += d2[i];
                next = i;
                if (acc > r) break;
            }
        } else {
            // every point coincides with a centroid already; take an unused one
            std::vector<std::size_t> unused;
            for (std::size_t i = 0; i < n; ++i) {
                if (!chosen[i]) unused.push_back(i);
            }
            next = unused[std::uniform_int_distribution<std::size_t>(0, unused.size() - 1)(rng)];
        }
        pick(next);
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], dist2(points[i], centroids.back()));
    }
    return centroids;
}

}  // namespace

double inertia(const std::vector<Embedding>& points, const std::vector<int>& assignments,
               const std::vector<Embedding>& centroids) {
    double s = 0;
    for (std::size_t i = 0; i < points.size(); ++i) s += dist2(points[i], centroids[assignments[i]]);
    return s;
}

KMeansResult kmeans(const std::vector<Embedding>& points, std::size_t k, std::uint64_t seed, int max_iterations) {
    if (k == 0) throw InvalidInput("kmeans: k must be positive");
    if (k > points.size()) {
        throw KTooLarge("kmeans: k=" + std::to_string(k) + " exceeds " + std::to_string(points.size()) + " points");
    }
    for (const auto& p : points) {
        if (p.size() != points[0].size()) throw InvalidInput("kmeans: points have different dimensions");
    }

    std::mt19937_64 rng(seed);
    KMeansResult r;
    r.centroids = seed_plus_plus(points, k, rng);
    r.assignments = assign(points, r.centroids);
    for (int it = 0; it < max_iterations; ++it) {
        update(points, r.assignments, r.centroids);
        r.inertia_history.push_back(inertia(points, r.assignments, r.centroids));
        r.iterations = it + 1;
        auto next = assign(points, r.centroids);
        if (next == r.assignments) {
            r.converged = true;
            break;
        }
        r.assignments = std::move(next);
    }
    r.inertia = inertia(points, r.assignments, r.centroids);
    return r;
}

namespace {

// Modal value; ties go to the tied value seen first.
std::string vote(const std::vector<std::string>& labels) {
    std::map<std::string, int> counts;
    int best = 0;
    for (const auto& l : labels) best = std::max(best, ++counts[l]);
    for (const auto& l : labels) {
        if (counts[l] == best) return l;
    }
    return {};
}

}  // namespace

std::vector<std::string> majority_label(const std::vector<std::vector<std::string>>& runs) {
    if (runs.empty()) throw InvalidInput("majority_label: no runs");
    const std::size_t items = runs[0].size();
    for (const auto& r : runs) {
        if (r.size() != items) throw InvalidInput("majority_label: runs have different lengths");
    }
    std::vector<std::string> out;
    out.reserve(items);
    for (std::size_t i = 0; i < items; ++i) {
        std::vector<std::string> labels;
        for (const auto& r : runs) labels.push_back(r[i]);
        out.push_back(vote(labels));
    }
    return out;
}

double cohen_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || a.size() != b.size()) throw InvalidInput("cohen_kappa: inputs must be non-empty and equal length");
    std::map<std::string, long long> ca, cb;
    long long agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++ca[a[i]];
        ++cb[b[i]];
        agree += a[i] == b[i];
    }
    const auto n = static_cast<long long>(a.size());
    long long chance = 0;  // sum of marginal products, in units of 1/n^2
    for (const auto& [label, count] : ca) {
        if (const auto it = cb.find(label); it != cb.end()) chance += count * it->second;
    }
    if (chance == n * n) throw DegenerateAgreement("cohen_kappa: chance agreement is 1");
    const double po = static_cast<double>(agree) / n;
    const double pe = static_cast<double>(chance) / static_cast<double>(n * n);
    return (po - pe) / (1 - pe);
}

// ---- categorization -------------------------------------------------------------

std::string_view general_category_name(GeneralCategory g) {
    switch (g) {
        case GeneralCategory::Functional: return "Functional";
        case GeneralCategory::Refactoring: return "Refactoring";
        case GeneralCategory::Documentation: return "Documentation";
        case GeneralCategory::Discussion: return "Discussion";
    }
    return "?";
}

std::string CategoryLabel::text() const {
    return std::string(general_category_name(general)) + " - " + specific + (novel ? "*" : "");
}

namespace {

std::optional<GeneralCategory> parse_general(std::string_view s) {
    const auto lower = text::to_lower(text::trim(s));
    for (const auto g : {GeneralCategory::Functional, GeneralCategory::Refactoring, GeneralCategory::Documentation,
                         GeneralCategory::Discussion}) {
        if (lower == text::to_lower(general_category_name(g))) return g;
    }
    return std::nullopt;
}

std::string known_key(GeneralCategory g, std::string_view specific) {
    return text::to_lower(general_category_name(g)) + " - " + text::to_lower(text::trim(specific));
}

std::string_view strip_wrapping(std::string_view s) {
    s = text::trim(s);
    while (!s.empty() && (s.front() == '"' || s.front() == '\'' || s.front() == '`' || s.front() == '*')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == '"' || s.back() == '\'' || s.back() == '`' || s.back() == '.')) {
        s.remove_suffix(1);
    }
    return text::trim(s);
}

}  // namespace

std::vector<std::string> load_categories(const std::string& path) {
    std::vector<std::string> out;
    for (const auto& raw : text::split_lines(text::read_file(path))) {
        auto line = text::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (const auto colon = line.find(':'); colon != std::string_view::npos) line = text::trim(line.substr(0, colon));
        out.emplace_back(line);
    }
    return out;
}

std::optional<CategoryLabel> parse_category_label(std::string_view reply, const std::vector<std::string>& known) {
    std::string first;
    for (const auto& l : text::split_lines(reply)) {
        if (!text::trim(l).empty()) {
            first = l;
            break;
        }
    }
    auto line = strip_wrapping(first);
    if (text::to_lower(line.substr(0, 6)) == "label:") line = text::trim(line.substr(6));
    const auto dash = line.find('-');
    if (dash == std::string_view::npos) return std::nullopt;
    const auto general = parse_general(line.substr(0, dash));
    if (!general) return std::nullopt;
    auto specific = text::trim(line.substr(dash + 1));
    if (const auto colon = specific.find(':'); colon != std::string_view::npos) {
        specific = text::trim(specific.substr(0, colon));
    }
    bool starred = false;
    while (!specific.empty() && specific.back() == '*') {
        starred = true;
        specific = text::trim(specific.substr(0, specific.size() - 1));
    }
    specific = strip_wrapping(specific);
    if (specific.empty()) return std::nullopt;

    bool listed = false;
    const auto key = known_key(*general, specific);
    for (const auto& k : known) {
        const auto d = k.find('-');
        const auto g = d == std::string::npos ? std::nullopt : parse_general(std::string_view(k).substr(0, d));
        if (g && known_key(*g, std::string_view(k).substr(d + 1)) == key) listed = true;
    }
    return CategoryLabel{*general, std::string(specific), starred || !listed};
}

Categorization categorize(std::span<const StoredComment> comments, const Embedder& embed, ChatModel& model,
                          const PromptTemplates& templates, const std::vector<std::string>& categories,
                          const CategorizeOptions& options) {
    Categorization out;
    if (comments.empty()) return out;
    if (options.runs <= 0) throw InvalidInput("categorize: runs must be positive");

    std::vector<Embedding> points;
    points.reserve(comments.size());
    for (const auto& c : comments) points.push_back(embed(c.com));
    const auto km = kmeans(points, std::min(options.k, comments.size()), options.seed);

    std::vector<std::vector<std::size_t>> members(km.centroids.size());
    for (std::size_t i = 0; i < comments.size(); ++i) members[km.assignments[i]].push_back(i);

    std::string category_list;
    for (const auto& c : categories) category_list += "- " + c + "\n";
    if (!category_list.empty()) category_list.pop_back();

    // votes[cluster] collects the parsed label of each run
    std::vector<std::vector<std::string>> votes(members.size());
    std::map<std::string, CategoryLabel> by_text;
    for (int run = 0; run < options.runs; ++run) {
        for (std::size_t c = 0; c < members.size(); ++c) {
            if (members[c].empty()) continue;
            std::string listing;
            for (std::size_t j = 0; j < members[c].size() && j < options.max_comments_per_prompt; ++j) {
                auto t = comments[members[c][j]].com;
                std::replace(t.begin(), t.end(), '\n', ' ');
                listing += "- " + t + "\n";
            }
            listing.pop_back();
            const std::vector<Message> messages{
                {Role::System, templates.text("persona")},
                {Role::User, templates.render("label_cluster", {{"comments", listing}, {"categories", category_list}})}};
            const auto reply = model.complete(Stage::Label, messages);
            if (const auto label = parse_category_label(reply, categories)) {
                votes[c].push_back(label->text());
                by_text.emplace(label->text(), *label);
            } else {
                warn("cluster " + std::to_string(c) + " run " + std::to_string(run + 1) + ": unusable label '" +
                     std::string(text::trim(reply)) + "'");
            }
        }
    }

    std::vector<std::optional<CategoryLabel>> cluster_label(members.size());
    for (std::size_t c = 0; c < members.size(); ++c) {
        if (!votes[c].empty()) cluster_label[c] = by_text.at(vote(votes[c]));
    }

    out.comments.reserve(comments.size());
    for (std::size_t i = 0; i < comments.size(); ++i) {
        const int c = km.assignments[i];
        out.comments.push_back({comments[i].id, c, cluster_label[c]});
    }

    std::map<std::string, std::size_t> group_of;  // label text, "" for unlabelled
    for (std::size_t c = 0; c < members.size(); ++c) {
        if (members[c].empty()) continue;
        const auto key = cluster_label[c] ? cluster_label[c]->text() : std::string();
        auto [it, fresh] = group_of.emplace(key, out.groups.size());
        if (fresh) out.groups.push_back({cluster_label[c], {}, {}});
        auto& g = out.groups[it->second];
        g.clusters.push_back(static_cast<int>(c));
        for (const auto i : members[c]) g.comment_ids.push_back(comments[i].id);
    }
    std::stable_sort(out.groups.begin(), out.groups.end(), [](const CategoryGroup& x, const CategoryGroup& y) {
        if (x.label.has_value() != y.label.has_value()) return x.label.has_value();
        if (x.comment_ids.size() != y.comment_ids.size()) return x.comment_ids.size() > y.comment_ids.size();
        return x.label && x.label->text() < y.label->text();
    });
    return out;
}

// ---- report ---------------------------------------------------------------------

namespace {

Comparison compare(std::string what, std::string left, int lh, int ln, std::string right, int rh, int rn) {
    Comparison c{std::move(what), std::move(left), std::move(right), lh, ln, rh, rn, {}, {}, {}};
    if (ln <= 0 || rn <= 0) return c;
    const auto a = static_cast<std::uint64_t>(lh), b = static_cast<std::uint64_t>(ln - lh);
    const auto cc = static_cast<std::uint64_t>(rh), d = static_cast<std::uint64_t>(rn - rh);
    const double pl = static_cast<double>(lh) / ln, pr = static_cast<double>(rh) / rn;
    c.p_two_sided = fisher_exact_2x2(a, b, cc, d).p_value;
    c.p_one_sided = fisher_exact_2x2(a, b, cc, d, pl < pr ? Alternative::Less : Alternative::Greater).p_value;
    try {
        c.effect = cohens_d(pl, ln, pr, rn);
    } catch (const ZeroVariance&) {
    }
    return c;
}

}  // namespace

Report build_report(std::span<const StoredComment> log, std::span<const ImpactObservation> impact) {
    Report r;
    std::map<std::string, std::vector<StoredComment>> by_approach;
    for (const auto& c : log) by_approach[c.approach].push_back(c);
    for (const auto& [approach, comments] : by_approach) r.ratios.push_back({approach, count_evaluations(comments)});
    r.ratios.push_back({"total", count_evaluations(log)});

    if (by_approach.count("code") && by_approach.count("example")) {
        const auto code = count_evaluations(by_approach["code"]);
        const auto example = count_evaluations(by_approach["example"]);
        r.comparisons.push_back(compare("acceptance", "code", code.accepted, code.evaluated(), "example",
                                        example.accepted, example.evaluated()));
        r.comparisons.push_back(compare("appreciation", "code", code.accepted + code.valuable_tip, code.evaluated(),
                                        "example", example.accepted + example.valuable_tip, example.evaluated()));
    }

    std::map<EditClass, int> edits;
    for (const auto e : {EditClass::AsIs, EditClass::Shorten, EditClass::Extended, EditClass::Other}) edits[e] = 0;
    for (const auto& c : log) {
        if (c.decision && c.decision->kind == EvaluationDecision::Kind::Accept && c.published_text) {
            ++edits[classify_edit(c.com, *c.published_text)];
        }
    }
    r.edits.assign(edits.begin(), edits.end());
    r.durations = evaluation_durations(log);

    for (const auto& o : impact) {
        auto it = std::find_if(r.impact.begin(), r.impact.end(), [&](const auto& g) { return g.first == o.group; });
        if (it == r.impact.end()) it = r.impact.insert(r.impact.end(), {o.group, {}});
        StoredComment at;
        at.file = o.file;
        at.line = o.line;
        it->second.push_back(impact_flags(at, o.revised_lines, o.revised_chunk_lines, o.replies));
    }
    if (r.impact.size() == 2) {
        const auto& [ln, lrec] = r.impact[0];
        const auto& [rn, rrec] = r.impact[1];
        auto hits = [](const std::vector<ImpactRecord>& v, bool ImpactRecord::*flag) {
            return static_cast<int>(std::count_if(v.begin(), v.end(), [&](const ImpactRecord& x) { return x.*flag; }));
        };
        const auto lsize = static_cast<int>(lrec.size()), rsize = static_cast<int>(rrec.size());
        r.comparisons.push_back(compare("revised line", ln, hits(lrec, &ImpactRecord::revised_line), lsize, rn,
                                        hits(rrec, &ImpactRecord::revised_line), rsize));
        r.comparisons.push_back(compare("revised chunk", ln, hits(lrec, &ImpactRecord::revised_chunk), lsize, rn,
                                        hits(rrec, &ImpactRecord::revised_chunk), rsize));
        r.comparisons.push_back(compare("thread", ln, hits(lrec, &ImpactRecord::thread), lsize, rn,
                                        hits(rrec, &ImpactRecord::thread), rsize));
    }
    return r;
}

namespace {

std::string ratio_or_dash(const EvaluationCounts& c, double (*f)(const EvaluationCounts&)) {
    return c.evaluated() > 0 ? percent(f(c)) : "-";
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string duration_line(const char* name, const std::optional<DurationSummary>& s) {
    if (!s) return pad(name, 12) + "-\n";
    return pad(name, 12) + "n=" + std::to_string(s->n) + "  median " + fmt("%.1fs", s->median) + "  95% [" +
           fmt("%.1fs", s->low) + ", " + fmt("%.1fs", s->high) + "]\n";
}

json duration_json(const std::optional<DurationSummary>& s) {
    if (!s) return nullptr;
    return json{{"n", s->n}, {"median_s", s->median}, {"low_s", s->low}, {"high_s", s->high}};
}

json counts_json(const EvaluationCounts& c) {
    json j{{"accepted", c.accepted},     {"valuable_tip", c.valuable_tip}, {"other_rejected", c.other_rejected},
           {"not_sure", c.not_sure},     {"seen_only", c.seen_only},       {"evaluated", c.evaluated()},
           {"acceptance", nullptr},      {"appreciation", nullptr}};
    if (c.evaluated() > 0) {
        j["acceptance"] = acceptance_ratio(c);
        j["appreciation"] = appreciation_ratio(c);
    }
    return j;
}

}  // namespace

std::string report_text(const Report& r) {
    std::ostringstream out;
    out << "== Ratios\n";
    out << pad("set", 10) << pad("accepted", 10) << pad("tips", 8) << pad("rejected", 10) << pad("seen", 6)
        << pad("unsure", 8) << pad("evaluated", 11) << pad("acceptance", 12) << "appreciation\n";
    for (const auto& row : r.ratios) {
        const auto& c = row.counts;
        out << pad(row.name, 10) << pad(std::to_string(c.accepted), 10) << pad(std::to_string(c.valuable_tip), 8)
            << pad(std::to_string(c.other_rejected), 10) << pad(std::to_string(c.seen_only), 6)
            << pad(std::to_string(c.not_sure), 8) << pad(std::to_string(c.evaluated()), 11)
            << pad(ratio_or_dash(c, acceptance_ratio), 12) << ratio_or_dash(c, appreciation_ratio) << "\n";
    }

    if (!r.comparisons.empty()) {
        out << "\n== Comparisons (Fisher exact test, Cohen's d)\n";
        for (const auto& c : r.comparisons) {
            out << pad(c.what, 14) << c.left << " " << c.left_hits << "/" << c.left_n;
            if (c.left_n > 0) out << " (" << percent(static_cast<double>(c.left_hits) / c.left_n) << ")";
            out << " vs " << c.right << " " << c.right_hits << "/" << c.right_n;
            if (c.right_n > 0) out << " (" << percent(static_cast<double>(c.right_hits) / c.right_n) << ")";
            if (c.p_two_sided) out << "  p=" << fmt("%.3f", *c.p_two_sided) << " one-sided p=" << fmt("%.3f", *c.p_one_sided);
            if (c.effect) out << "  d=" << fmt("%.2f", c.effect->d) << " " << effect_label_name(c.effect->label);
            out << "\n";
        }
    }

    out << "\n== Edits of accepted comments\n";
    for (const auto& [e, n] : r.edits) out << pad(std::string(edit_class_name(e)), 12) << n << "\n";

    out << "\n== Evaluation durations\n";
    out << duration_line("accepted", r.durations.accepted);
    out << duration_line("others", r.durations.others);
    out << duration_line("per patch", r.durations.per_patch);

    if (!r.impact.empty()) {
        out << "\n== Impact\n";
        out << pad("group", 12) << pad("n", 6) << pad("line", 14) << pad("chunk", 14) << "thread\n";
        for (const auto& [group, recs] : r.impact) {
            int line = 0, chunk = 0, thread = 0;
            for (const auto& x : recs) {
                line += x.revised_line;
                chunk += x.revised_chunk;
                thread += x.thread;
            }
            const double n = static_cast<double>(recs.size());
            auto cell = [&](int k) { return std::to_string(k) + " (" + percent(k / n) + ")"; };
            out << pad(group, 12) << pad(std::to_string(recs.size()), 6) << pad(cell(line), 14) << pad(cell(chunk), 14)
                << cell(thread) << "\n";
        }
    }
    return out.str();
}

json report_json(const Report& r) {
    json ratios = json::array();
    for (const auto& row : r.ratios) {
        auto j = counts_json(row.counts);
        j["set"] = row.name;
        ratios.push_back(j);
    }
    json comparisons = json::array();
    for (const auto& c : r.comparisons) {
        json j{{"what", c.what},           {"left", c.left},           {"left_hits", c.left_hits},
               {"left_n", c.left_n},       {"right", c.right},         {"right_hits", c.right_hits},
               {"right_n", c.right_n},     {"p_two_sided", nullptr},   {"p_one_sided", nullptr},
               {"d", nullptr},             {"effect", nullptr}};
        if (c.p_two_sided) j["p_two_sided"] = *c.p_two_sided;
        if (c.p_one_sided) j["p_one_sided"] = *c.p_one_sided;
        if (c.effect) {
            j["d"] = c.effect->d;
            j["effect"] = effect_label_name(c.effect->label);
        }
        comparisons.push_back(j);
    }
    json edits = json::object();
    for (const auto& [e, n] : r.edits) edits[std::string(edit_class_name(e))] = n;
    json impact = json::array();
    for (const auto& [group, recs] : r.impact) {
        int line = 0, chunk = 0, thread = 0;
        for (const auto& x : recs) {
            line += x.revised_line;
            chunk += x.revised_chunk;
            thread += x.thread;
        }
        impact.push_back(json{{"group", group},
                              {"n", recs.size()},
                              {"revised_line", line},
                              {"revised_chunk", chunk},
                              {"thread", thread}});
    }
    return json{{"ratios", ratios},
                {"comparisons", comparisons},
                {"edits", edits},
                {"durations",
                 {{"accepted", duration_json(r.durations.accepted)},
                  {"others", duration_json(r.durations.others)},
                  {"per_patch", duration_json(r.durations.per_patch)}}},
                {"impact", impact}};
}

std::string categorization_text(const Categorization& c) {
    std::ostringstream out;
    out << "== Categories (" << c.comments.size() << " comments)\n";
    std::map<std::string, std::size_t> general;
    for (const auto& g : c.groups) {
        const auto name = g.label ? std::string(general_category_name(g.label->general)) : std::string("Unlabelled");
        general[name] += g.comment_ids.size();
    }
    const double total = static_cast<double>(c.comments.size());
    for (const auto& [name, n] : general) {
        out << pad(name, 16) << pad(std::to_string(n), 6) << percent(n / total) << "\n";
    }
    out << "\n== Labels (" << c.groups.size() << " after merging)\n";
    for (const auto& g : c.groups) {
        out << pad(g.label ? g.label->text() : std::string("(unlabelled)"), 44) << pad(std::to_string(g.comment_ids.size()), 6)
            << "clusters " << g.clusters.size() << "\n";
    }
    return out.str();
}

json categorization_json(const Categorization& c) {
    json comments = json::array();
    for (const auto& x : c.comments) {
        comments.push_back(json{{"comment_id", x.comment_id},
                                {"cluster", x.cluster},
                                {"label", x.label ? json(x.label->text()) : json(nullptr)}});
    }
    json groups = json::array();
    for (const auto& g : c.groups) {
        json j{{"label", nullptr}, {"general", nullptr}, {"specific", nullptr}, {"novel", false},
               {"clusters", g.clusters}, {"comment_ids", g.comment_ids}};
        if (g.label) {
            j["label"] = g.label->text();
            j["general"] = general_category_name(g.label->general);
            j["specific"] = g.label->specific;
            j["novel"] = g.label->novel;
        }
        groups.push_back(j);
    }
    return json{{"comments", comments}, {"groups", groups}};
}

}  // namespace revassist
