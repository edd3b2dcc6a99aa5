#include "revassist/rest_server.hpp"

#include "httplib.h"
#include "json.hpp"
#include "revassist/errors.hpp"

using nlohmann::json;

namespace revassist {

namespace {

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
    reply(res, status, json{{"error", code}, {"message", message}});
}

json state_json(const PatchReviewState& s) {
    json comments = json::array();
    for (const auto& c : s.comments) comments.push_back(to_json(c));
    return json{{"patch_id", s.patch_id},
                {"approach", s.generation_done ? json(s.approach) : json(nullptr)},
                {"generation_done", s.generation_done},
                {"comments", comments}};
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
    if (req.body.empty()) return json::object();
    auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
        error(res, 400, "invalid_json", "request body must be a JSON object");
        return std::nullopt;
    }
    return body;
}

// Runs a handler and maps library errors to HTTP statuses.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const UnknownComment& e) {
            error(res, 404, "unknown_comment", e.what());
        } catch (const InvalidDecision& e) {
            error(res, 400, "invalid_decision", e.what());
        } catch (const MalformedDiff& e) {
            error(res, 400, "malformed_diff", e.what());
        } catch (const InvalidInput& e) {
            error(res, 400, "invalid_input", e.what());
        } catch (const json::exception& e) {
            error(res, 400, "invalid_json", e.what());
        } catch (const BackendError& e) {
            error(res, 502, "backend_error", e.what());
        } catch (const std::exception& e) {
            error(res, 500, "internal_error", e.what());
        }
    };
}

}  // namespace

RestServer::RestServer(ReviewService& service, Approach default_approach)
    : service_(service), default_approach_(default_approach), server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

RestServer::~RestServer() = default;

void RestServer::install_routes() {
    auto& s = *server_;
    s.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });

    s.Post(R"(/patches/([^/]+)/generate)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        auto approach = default_approach_;
        if (req.has_param("approach")) {
            const auto parsed = parse_approach(req.get_param_value("approach"));
            if (!parsed) return error(res, 400, "invalid_approach", "approach must be code or example");
            approach = *parsed;
        }
        if (const auto cached = service_.state(id); cached.generation_done) return reply(res, 200, state_json(cached));
        const auto body = parse_body(req, res);
        if (!body) return;
        if (!body->contains("diff") || !(*body)["diff"].is_string()) {
            return error(res, 400, "invalid_input", "body needs a \"diff\" string");
        }
        const auto status = body->value("status", std::string("needs_review"));
        if (status != "needs_review" && status != "other") {
            return error(res, 400, "invalid_input", "status must be needs_review or other");
        }
        auto patch = parse_unified_diff((*body)["diff"].get<std::string>(), id);
        patch.status = status == "needs_review" ? PatchStatus::NeedsReview : PatchStatus::Other;
        reply(res, 200, state_json(service_.maybe_generate(patch, approach)));
    }));

    s.Get(R"(/patches/([^/]+)/comments)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, state_json(service_.state(req.matches[1])));
    }));

    s.Post(R"(/comments/([^/]+)/opened)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, to_json(service_.mark_opened(req.matches[1], service_.now())));
    }));

    s.Post(R"(/comments/([^/]+)/evaluate)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto body = parse_body(req, res);
        if (!body) return;
        EvaluationDecision decision;
        const auto kind = body->value("decision", std::string{});
        if (kind == "accept") decision.kind = EvaluationDecision::Kind::Accept;
        else if (kind == "ignore") decision.kind = EvaluationDecision::Kind::Ignore;
        else return error(res, 400, "invalid_decision", "decision must be accept or ignore");
        if (body->contains("reason") && !(*body)["reason"].is_null()) {
            const auto name = (*body)["reason"].get<std::string>();
            decision.reason = parse_reason(name);
            if (!decision.reason) return error(res, 400, "invalid_decision", "unknown reason '" + name + "'");
        }
        std::optional<std::string> edited;
        if (body->contains("edited_text") && !(*body)["edited_text"].is_null()) {
            edited = (*body)["edited_text"].get<std::string>();
        }
        try {
            reply(res, 200, to_json(service_.evaluate(id, decision, edited, service_.now())));
        } catch (const AlreadyEvaluated& e) {
            reply(res, 409,
                  json{{"error", "already_evaluated"}, {"message", e.what()}, {"comment", to_json(service_.comment(id))}});
        }
    }));

    s.Get(R"(/patches/([^/]+)/publishable)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        json comments = json::array();
        for (const auto& c : service_.publishable(req.matches[1])) comments.push_back(to_json(c));
        reply(res, 200,
              json{{"patch_id", req.matches[1]},
                   {"mode", service_.mode() == PublicationMode::Gated ? "gated" : "ungated"},
                   {"comments", comments}});
    }));

    s.Get(R"(/patches/([^/]+)/summary)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto p = service_.pending_summary(req.matches[1]);
        reply(res, 200, json{{"patch_id", req.matches[1]}, {"generated", p.generated}, {"unevaluated", p.unevaluated}});
    }));

    s.Get("/analytics/export", guarded([this](const httplib::Request&, httplib::Response& res) {
        std::string out;
        for (const auto& c : service_.export_log()) out += to_json(c).dump() + "\n";
        res.set_content(out, "application/x-ndjson");
    }));
}

bool RestServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int RestServer::bind_to_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool RestServer::listen_after_bind() { return server_->listen_after_bind(); }

void RestServer::wait_until_ready() const { server_->wait_until_ready(); }

void RestServer::stop() { server_->stop(); }

}  // namespace revassist
