#include "euc/service.hpp"

#include <httplib.h>

#include <iostream>
#include <span>

#include "durable_file.hpp"
#include "euc/error.hpp"
#include "euc/ingest.hpp"

namespace euc::service {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

int http_status_for(const std::string& code) {
  static const std::map<std::string, int, std::less<>> table = {
      {"malformed-json", 400},         {"invalid-config", 400},       {"missing-principal", 401},
      {"self-review", 403},            {"not-found", 404},            {"conflict", 409},
      {"duplicate-file-key", 409},     {"record-immutable", 409},     {"not-pending", 409},
      {"invalid-transition", 409},     {"payload-too-large", 413},    {"validation-error", 422},
      {"missing-comment", 422},        {"missing-justification", 422}, {"not-a-spreadsheet", 422},
      {"corrupt-zip", 422},            {"missing-required-part", 422}, {"invariant-violation", 422},
      {"address-out-of-range", 422},   {"malformed-address", 422},    {"malformed-timestamp", 422},
      {"data-dir-locked", 423},        {"storage-failure", 500},
  };
  auto it = table.find(code);
  return it == table.end() ? 500 : it->second;
}

namespace {

void send_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  ordered_json body;
  body["code"] = e.code();
  body["message"] = e.what();
  if (e.field()) body["field"] = *e.field();
  send_json(res, http_status_for(e.code()), body);
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error("malformed-json", std::string("request body is not valid JSON: ") + e.what(), "body");
  }
}

std::string principal_of(const httplib::Request& req) {
  std::string p = req.get_header_value(kPrincipalHeader);
  const auto first = p.find_first_not_of(" \t");
  if (first == std::string::npos) {
    throw Error("missing-principal", std::string("the ") + kPrincipalHeader + " header is required", kPrincipalHeader);
  }
  p.erase(0, first);
  p.erase(p.find_last_not_of(" \t") + 1);
  return p;
}

std::optional<std::string> query(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  return req.get_param_value(key);
}

ordered_json list_body(ordered_json items) {
  ordered_json j;
  j["schema_version"] = standards::kSchemaVersion;
  j["count"] = items.size();
  j["items"] = std::move(items);
  return j;
}

ordered_json event_body(const changes::ChangeEvent& e) {
  ordered_json j = changes::event_to_json(e);
  j["schema_version"] = standards::kSchemaVersion;
  return j;
}

}  // namespace

struct Service::Impl {
  ServiceOptions options;
  std::unique_ptr<detail::DirLock> lock;
  std::unique_ptr<inventory::Inventory> inventory;
  std::unique_ptr<changes::ChangeStore> changes;
  standards::RuleConfig rules;
  changes::AlertRuleSet alert_rules = changes::default_alert_rules();
  httplib::Server server;

  std::chrono::sys_days today() const { return to_day(options.clock()); }

  const inventory::EucRecord require_record(const std::string& id) const {
    auto r = inventory->record(id);
    if (!r) throw Error("not-found", "no application " + id);
    return *r;
  }

  ordered_json record_body(const inventory::EucRecord& r) const {
    ordered_json j = inventory::record_view_json(r, today());
    if (auto report = inventory->latest_audit(r.record_id)) {
      j["compliance_score"] = report->compliance_score();
    } else {
      j["compliance_score"] = nullptr;
    }
    return j;
  }

  // Wraps a handler so every Error becomes a problem object.
  template <typename F>
  httplib::Server::Handler guarded(F fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const std::exception& e) {
        send_error(res, Error("internal-error", e.what()));
      }
    };
  }

  void routes();
};

void Service::Impl::routes() {
  server.Get("/api/health", guarded([](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}});
  }));

  server.Get("/api/applications", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto category = query(req, "category");
    const auto tier = query(req, "tier");
    const auto status = query(req, "status");
    const auto owner = query(req, "owner");
    const auto line_manager = query(req, "line_manager");
    if (category && !inventory::category_from_string(*category)) throw Error("validation-error", "unknown category", "category");
    if (tier && !inventory::tier_from_string(*tier)) throw Error("validation-error", "unknown tier", "tier");
    if (status && !inventory::record_status_from_string(*status)) throw Error("validation-error", "unknown status", "status");
    ordered_json items = ordered_json::array();
    for (const auto& r : inventory->records()) {
      if (category && inventory::to_string(r.category) != *category) continue;
      if (tier && inventory::to_string(r.tier) != *tier) continue;
      if (status && inventory::to_string(r.status) != *status) continue;
      if (owner && r.owner != *owner) continue;
      if (line_manager && r.line_manager != *line_manager) continue;
      items.push_back(record_body(r));
    }
    send_json(res, 200, list_body(std::move(items)));
  }));

  server.Post("/api/applications", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string who = principal_of(req);
    const auto r = inventory->register_record(parse_body(req), who);
    send_json(res, 201, record_body(r));
  }));

  server.Get(R"(/api/applications/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, record_body(require_record(req.matches[1])));
  }));

  server.Patch(R"(/api/applications/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string who = principal_of(req);
    send_json(res, 200, record_body(inventory->update_record(req.matches[1], parse_body(req), who)));
  }));

  server.Get(R"(/api/applications/([^/]+)/audit)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    require_record(id);
    const auto report = inventory->latest_audit(id);
    if (!report) throw Error("not-found", "application " + id + " has not been audited");
    send_json(res, 200, ordered_json::parse(standards::serialize_report(*report)));
  }));

  server.Post(R"(/api/applications/([^/]+)/audit)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    principal_of(req);
    const std::string id = req.matches[1];
    const auto record = require_record(id);
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(req.body.data());
    const auto ingest = load_workbook(std::span<const std::uint8_t>(bytes, req.body.size()), record.name);
    auto report = inventory->run_audit(id, ingest.workbook, rules, query(req, "location"));
    ordered_json body = ordered_json::parse(standards::serialize_report(report));
    body["ingest_warnings"] = ordered_json::array();
    for (const auto& w : ingest.warnings) {
      body["ingest_warnings"].push_back({{"code", w.code}, {"location", w.location}, {"message", w.message}});
    }
    send_json(res, 201, body);
  }));

  server.Get(R"(/api/applications/([^/]+)/plan)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    require_record(id);
    const auto plan = inventory->plan(id);
    if (!plan) throw Error("not-found", "application " + id + " has no remediation plan");
    send_json(res, 200, ordered_json::parse(standards::serialize_plan(*plan)));
  }));

  server.Post(R"(/api/applications/([^/]+)/versions)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                const std::string who = principal_of(req);
                const auto record = require_record(req.matches[1]);
                if (!record.file_key) {
                  throw Error("validation-error", "application " + record.record_id + " has no file_key", "file_key");
                }
                const auto* bytes = reinterpret_cast<const std::uint8_t*>(req.body.data());
                const auto wb = load_workbook(std::span<const std::uint8_t>(bytes, req.body.size()), record.name).workbook;
                const auto sub = changes->submit(*record.file_key, wb, who, alert_rules, options.clock());
                ordered_json body;
                body["schema_version"] = standards::kSchemaVersion;
                body["file_key"] = *record.file_key;
                body["snapshot_id"] = sub.snapshot.snapshot_id;
                body["content_hash"] = sub.snapshot.content_hash;
                body["event"] = sub.event ? changes::event_to_json(*sub.event) : ordered_json();
                if (sub.event && sub.event->state == changes::EventState::pending_review) {
                  // Notification hook: logged, not delivered.
                  std::clog << "notify: change event " << sub.event->event_id << " on " << *record.file_key
                            << " awaits review\n";
                }
                send_json(res, 201, body);
              }));

  server.Patch(R"(/api/plan-items/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string who = principal_of(req);
    const auto item = inventory->update_plan_item(req.matches[1], parse_body(req), who);
    ordered_json j;
    j["item_id"] = item.item_id;
    j["finding"] = finding_to_json(item.finding);
    j["action_text"] = item.action_text;
    j["status"] = standards::to_string(item.status);
    j["owner"] = item.owner;
    send_json(res, 200, j);
  }));

  server.Get("/api/changes", guarded([this](const httplib::Request& req, httplib::Response& res) {
    std::optional<changes::EventState> state;
    if (const auto s = query(req, "state")) {
      state = changes::event_state_from_string(*s);
      if (!state) throw Error("validation-error", "unknown state '" + *s + "'", "state");
    }
    ordered_json items = ordered_json::array();
    for (const auto& e : changes->events(state, query(req, "file_key"))) items.push_back(changes::event_to_json(e));
    send_json(res, 200, list_body(std::move(items)));
  }));

  server.Get(R"(/api/changes/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto e = changes->event(req.matches[1]);
    if (!e) throw Error("not-found", "no change event " + std::string(req.matches[1]));
    send_json(res, 200, event_body(*e));
  }));

  server.Post(R"(/api/changes/([^/]+)/decision)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string who = principal_of(req);
    const json body = parse_body(req);
    if (!body.is_object()) throw Error("validation-error", "expected a JSON object", "body");
    const json verdict_field = body.value("verdict", json());
    const auto verdict =
        verdict_field.is_string() ? changes::verdict_from_string(verdict_field.get<std::string>()) : std::nullopt;
    if (!verdict) throw Error("validation-error", "verdict must be approved or rejected", "verdict");
    const json comment = body.value("comment", json(""));
    if (!comment.is_string()) throw Error("validation-error", "comment must be a string", "comment");
    const json rebaseline = body.value("rebaseline", json(true));
    if (!rebaseline.is_boolean()) throw Error("validation-error", "rebaseline must be true or false", "rebaseline");
    const changes::ReviewDecision decision{who, options.clock(), *verdict, comment.get<std::string>()};
    send_json(res, 200, event_body(changes->decide(req.matches[1], decision, rebaseline.get<bool>())));
  }));

  server.Get("/api/summary", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto day = today();
    if (const auto t = query(req, "today")) day = to_day(parse_timestamp(*t));
    ordered_json j = inventory->summary(day);
    j["pending_review"] = changes->events(changes::EventState::pending_review).size();
    send_json(res, 200, j);
  }));

  // Browser clients served from another origin.
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", std::string("Content-Type, ") + kPrincipalHeader},
                              {"Access-Control-Allow-Methods", "GET, POST, PATCH, OPTIONS"}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404) {
      send_error(res, Error("not-found", "no route for " + req.method + " " + req.path));
    } else if (res.status == 413) {
      send_error(res, Error("payload-too-large", "request body exceeds the upload limit"));
    }
  });
  if (options.log_requests) {
    server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
      std::clog << req.method << ' ' << req.path << ' ' << res.status << '\n';
    });
  }
}

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>()) {
  Impl& s = *impl_;
  s.options = std::move(options);
  std::error_code ec;
  fs::create_directories(s.options.data_dir, ec);
  if (ec) throw Error("storage-failure", "cannot create " + s.options.data_dir.string() + ": " + ec.message());
  s.lock = std::make_unique<detail::DirLock>(s.options.data_dir / "eucctl.lock");
  s.inventory = std::make_unique<inventory::Inventory>(s.options.data_dir, s.options.clock);
  s.changes = std::make_unique<changes::ChangeStore>(s.options.data_dir / "changes");
  if (fs::exists(s.options.data_dir / "rules.json")) {
    s.rules = standards::load_rule_config_file((s.options.data_dir / "rules.json").string());
  }
  if (fs::exists(s.options.data_dir / "alert_rules.json")) {
    s.alert_rules = changes::parse_alert_rules_text(detail::read_text_file(s.options.data_dir / "alert_rules.json"));
  }
  s.server.set_payload_max_length(s.options.max_upload_bytes);
  // SO_REUSEADDR only: the library default also sets SO_REUSEPORT, which
  // would let a second server share a port already in use.
  s.server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
  });
  s.routes();
}

Service::~Service() { stop(); }

inventory::Inventory& Service::inventory() { return *impl_->inventory; }
changes::ChangeStore& Service::changes() { return *impl_->changes; }

int Service::bind(int port) {
  if (port == 0) {
    const int got = impl_->server.bind_to_any_port(impl_->options.host);
    if (got <= 0) throw Error("port-in-use", "cannot bind any port on " + impl_->options.host);
    return got;
  }
  if (!impl_->server.bind_to_port(impl_->options.host, port)) {
    throw Error("port-in-use", "port " + std::to_string(port) + " on " + impl_->options.host + " is unavailable");
  }
  return port;
}

void Service::run() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace euc::service
