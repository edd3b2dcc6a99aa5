#include "revassist/cli.hpp"

#include <csignal>

#include "CLI11.hpp"
#include "revassist/analytics.hpp"
#include "revassist/config.hpp"
#include "revassist/context_retriever.hpp"
#include "revassist/errors.hpp"
#include "revassist/example_store.hpp"
#include "revassist/log.hpp"
#include "revassist/rest_server.hpp"
#include "revassist/text_util.hpp"

namespace fs = std::filesystem;

namespace revassist {

namespace {

// Raised for bad flag combinations found after parsing; maps to exit code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::string approach;
    std::string backend = "hosted";
    std::string gated;
    std::string store;
    std::string repo;
    std::string format = "text";

    std::string corpus;
    std::string diff;
    std::string patch_id;
    std::string status = "needs_review";
    std::string log;
    std::string impact;
    std::string db;
    std::string host;
    int port = -1;
    std::size_t k = 0;
    std::int64_t seed = -1;
    int runs = 0;
};

AppConfig resolve(const Options& o) {
    AppConfig c = o.config.empty() ? AppConfig{} : load_config(o.config);
    if (!o.approach.empty()) c.approach = *parse_approach(o.approach);
    if (!o.gated.empty()) c.publication = o.gated == "true" ? PublicationMode::Gated : PublicationMode::Ungated;
    if (!o.store.empty()) c.store = o.store;
    if (!o.repo.empty()) c.repo = o.repo;
    if (!o.db.empty()) c.service_db = o.db;
    if (!o.host.empty()) c.host = o.host;
    if (o.port >= 0) c.port = o.port;
    if (o.k > 0) c.clusters = o.k;
    if (o.seed >= 0) c.cluster_seed = static_cast<std::uint64_t>(o.seed);
    if (o.runs > 0) c.label_runs = o.runs;
    return c;
}

std::unique_ptr<ChatModel> make_model(const std::string& backend, const AppConfig& c) {
    if (backend == "hosted") return std::make_unique<HostedChat>(c.endpoint, c.model);
    if (backend.rfind("mock:", 0) == 0) return std::make_unique<ScriptedMock>(ScriptedMock::from_file(backend.substr(5)));
    throw UsageError("--backend must be hosted or mock:<path>");
}

PromptTemplates templates_for(const AppConfig& c) {
    return c.templates_dir ? PromptTemplates::load(*c.templates_dir) : PromptTemplates::defaults();
}

std::unique_ptr<ExampleStore> open_store(const AppConfig& c) {
    return c.store ? ExampleStore::open(*c.store) : std::make_unique<ExampleStore>();
}

// Everything run_review needs, kept alive together.
struct Pipeline {
    AppConfig config;
    std::unique_ptr<ChatModel> model;
    PromptTemplates templates;
    std::unique_ptr<ContextRetriever> retriever;
    std::unique_ptr<RepoContextSource> code;
    std::unique_ptr<ExampleStore> store;
    std::unique_ptr<StoreExampleSource> examples;
    std::vector<ExampleTuple> default_examples;
    std::vector<std::string> undesired;

    Pipeline(AppConfig c, const std::string& backend)
        : config(std::move(c)), model(make_model(backend, config)), templates(templates_for(config)) {
        if (config.repo) {
            retriever = std::make_unique<ContextRetriever>(*config.repo);
            code = std::make_unique<RepoContextSource>(*retriever);
        }
        store = open_store(config);
        examples = std::make_unique<StoreExampleSource>(*store, make_embedder(config), config.examples_per_chunk,
                                                        config.examples_top);
        if (config.default_examples) default_examples = load_default_examples(*config.default_examples);
        if (config.undesired_comments) undesired = load_undesired_comments(*config.undesired_comments);
    }

    PipelineDeps deps() {
        return {model.get(), &templates, code.get(), examples.get(), default_examples, undesired};
    }

    void require_repo_for(Approach a) const {
        if (a == Approach::Code && !code) throw UsageError("the code approach needs --repo or a repo in the config");
    }
};

int ingest_examples(const Options& o, std::ostream& out) {
    const auto c = resolve(o);
    if (!c.store) throw UsageError("ingest-examples needs --store or a store in the config");
    const auto tuples = load_corpus_jsonl(o.corpus);
    auto store = ExampleStore::open(*c.store);
    const auto stored = store->ingest(tuples, make_embedder(c));
    out << "ingested " << stored << " of " << tuples.size() << " examples; store holds " << store->size() << "\n";
    return 0;
}

int review(const Options& o, std::ostream& out, std::ostream& err) {
    Pipeline p(resolve(o), o.backend);
    p.require_repo_for(p.config.approach);
    const auto id = o.patch_id.empty() ? fs::path(o.diff).stem().string() : o.patch_id;
    auto patch = parse_unified_diff(text::read_file(o.diff), id);
    patch.status = o.status == "needs_review" ? PatchStatus::NeedsReview : PatchStatus::Other;
    try {
        const auto outcome = run_review(patch, p.config.approach, p.deps());
        out << comments_to_json(outcome.comments) << "\n";
    } catch (const NotNeedsReview& e) {
        err << "note: " << e.what() << "\n";
        out << "[]\n";
    }
    return 0;
}

RestServer* active_server = nullptr;

void stop_active_server(int) {
    if (active_server) active_server->stop();
}

int serve(const Options& o, std::ostream& err) {
    Pipeline p(resolve(o), o.backend);
    CommentGenerator generator = [&](const Patch& patch, Approach approach) {
        if (approach == Approach::Code && !p.code) throw InvalidInput("the code approach needs a repository");
        return run_review(patch, approach, p.deps()).comments;
    };
    ReviewService service(p.config.service_db, p.config.publication, generator);
    RestServer server(service, p.config.approach);
    int port = p.config.port;
    if (port == 0) {
        port = server.bind_to_any_port(p.config.host);
        if (port < 0) throw Error("cannot bind " + p.config.host);
    }
    err << "listening on http://" << p.config.host << ":" << port << "\n";
    err.flush();
    active_server = &server;
    std::signal(SIGINT, stop_active_server);
    std::signal(SIGTERM, stop_active_server);
    const bool ok = p.config.port == 0 ? server.listen_after_bind() : server.listen(p.config.host, port);
    active_server = nullptr;
    if (!ok) throw Error("cannot listen on " + p.config.host + ":" + std::to_string(port));
    return 0;
}

std::vector<StoredComment> read_log(const std::string& path) { return read_export(text::read_file(path)); }

int analyze(const Options& o, std::ostream& out) {
    const auto log = read_log(o.log);
    std::vector<ImpactObservation> impact;
    if (!o.impact.empty()) impact = read_impact(text::read_file(o.impact));
    const auto report = build_report(log, impact);
    if (o.format == "json") out << report_json(report).dump(2) << "\n";
    else out << report_text(report);
    return 0;
}

int categorize_verb(const Options& o, std::ostream& out) {
    const auto c = resolve(o);
    const auto model = make_model(o.backend, c);
    const auto log = read_log(o.log);
    const auto categories = c.categories ? load_categories(c.categories->string()) : std::vector<std::string>{};
    CategorizeOptions options;
    options.k = c.clusters;
    options.seed = c.cluster_seed;
    options.runs = c.label_runs;
    const auto result = categorize(log, make_embedder(c), *model, templates_for(c), categories, options);
    if (o.format == "json") out << categorization_json(result).dump(2) << "\n";
    else out << categorization_text(result);
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Review comment generation, evaluation service and analytics", "revassist"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    };
    auto with_backend = [&](CLI::App* sub) {
        sub->add_option("--backend", o.backend, "hosted or mock:<script>");
    };
    auto with_pipeline = [&](CLI::App* sub) {
        with_backend(sub);
        sub->add_option("--approach", o.approach, "code or example")->check(CLI::IsMember({"code", "example"}));
        sub->add_option("--store", o.store, "example store file");
        sub->add_option("--repo", o.repo, "repository checkout for the code approach")->check(CLI::ExistingDirectory);
    };
    auto with_format = [&](CLI::App* sub) {
        sub->add_option("--format", o.format, "text or json")->check(CLI::IsMember({"text", "json"}));
    };

    auto* ingest = app.add_subcommand("ingest-examples", "add a JSON Lines corpus to the example store");
    common(ingest);
    ingest->add_option("--corpus", o.corpus, "corpus file")->required()->check(CLI::ExistingFile);
    ingest->add_option("--store", o.store, "example store file");

    auto* rev = app.add_subcommand("review", "generate comments for one diff and print them as JSON");
    common(rev);
    with_pipeline(rev);
    rev->add_option("--diff", o.diff, "unified diff file")->required()->check(CLI::ExistingFile);
    rev->add_option("--id", o.patch_id, "patch id (default: diff file name)");
    rev->add_option("--status", o.status, "needs_review or other")->check(CLI::IsMember({"needs_review", "other"}));

    auto* srv = app.add_subcommand("serve", "run the review REST service");
    common(srv);
    with_pipeline(srv);
    srv->add_option("--gated", o.gated, "hold accepted comments until all are evaluated")
        ->check(CLI::IsMember({"true", "false"}));
    srv->add_option("--db", o.db, "SQLite database file");
    srv->add_option("--host", o.host, "bind address");
    srv->add_option("--port", o.port, "port, 0 for any free port")->check(CLI::Range(0, 65535));

    auto* ana = app.add_subcommand("analyze", "report ratios, tests, edits, durations and impact");
    common(ana);
    with_format(ana);
    ana->add_option("--log", o.log, "evaluation export (JSON Lines)")->required()->check(CLI::ExistingFile);
    ana->add_option("--impact", o.impact, "impact observations (JSON Lines)")->check(CLI::ExistingFile);

    auto* cat = app.add_subcommand("categorize", "cluster comments and label the clusters");
    common(cat);
    with_format(cat);
    with_backend(cat);
    cat->add_option("--log", o.log, "evaluation export (JSON Lines)")->required()->check(CLI::ExistingFile);
    cat->add_option("--k", o.k, "number of clusters")->check(CLI::PositiveNumber);
    cat->add_option("--seed", o.seed, "k-means seed")->check(CLI::NonNegativeNumber);
    cat->add_option("--runs", o.runs, "labelling runs per cluster")->check(CLI::PositiveNumber);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        if (!args.empty()) err << "error: " << e.what() << "\n";
        err << app.help();
        return 1;
    }

    const WarningSink previous = set_warning_sink([&err](std::string_view m) { err << "warning: " << m << "\n"; });
    struct Restore {
        WarningSink sink;
        ~Restore() { set_warning_sink(sink); }
    } restore{previous};

    try {
        if (ingest->parsed()) return ingest_examples(o, out);
        if (rev->parsed()) return review(o, out, err);
        if (srv->parsed()) return serve(o, err);
        if (ana->parsed()) return analyze(o, out);
        if (cat->parsed()) return categorize_verb(o, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace revassist
