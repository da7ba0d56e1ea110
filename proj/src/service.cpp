// Copyright 2026 The orpipe Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "orpipe/service.hpp"

#include <httplib.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <random>

#include "orpipe/common.hpp"
#include "orpipe/json_io.hpp"
#include "orpipe/validator.hpp"

namespace orpipe {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

ApiResponse fail(int status, std::string_view kind, std::string_view message, json extra = json::object()) {
  extra["kind"] = kind;
  extra["message"] = message;
  return {status, std::move(extra)};
}

int status_for(const std::string& kind) {
  if (kind == "BadRequest" || kind == "BadDataSet" || kind == "InvalidLimits" || kind == "InvalidConfig") return 400;
  if (kind == "BackendUnavailable" || kind == "FixtureMiss" || kind == "FixtureExhausted") return 502;
  if (kind == "StoreUnavailable") return 503;
  return 500;
}

std::string now_iso() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fresh_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

// Empty bodies count as {}.
json parse_body(const std::string& body) {
  if (trim(body).empty()) return json::object();
  try {
    json j = json::parse(body);
    if (!j.is_object()) throw Error("BadRequest", "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error("BadRequest", std::string("invalid JSON: ") + e.what());
  }
}

std::string required_string(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string() || trim(j[field].get<std::string>()).empty()) {
    throw Error("BadRequest", std::string("missing string field '") + field + "'");
  }
  return j[field].get<std::string>();
}

json attempts_to_json(const GenerationResult& result) {
  json out = json::array();
  for (std::size_t i = 0; i < result.attempts.size(); ++i) {
    const Attempt& a = result.attempts[i];
    json j = {{"attempt", i + 1},
              {"valid", a.valid()},
              {"latency_seconds", a.latency()},
              {"completion_seconds", a.completion_seconds},
              {"validation_seconds", a.validation_seconds},
              {"execution_seconds", a.execution_seconds},
              {"report", report_to_json(a.report)}};
    if (a.runtime_error) j["runtime_error"] = *a.runtime_error;
    out.push_back(std::move(j));
  }
  return out;
}

std::string_view policy_name(MissingPairPolicy p) { return p == MissingPairPolicy::kZero ? "zero" : "error"; }

MissingPairPolicy parse_policy(const std::string& text) {
  if (text == "error") return MissingPairPolicy::kError;
  if (text == "zero") return MissingPairPolicy::kZero;
  throw Error("BadRequest", "missing_pair must be 'error' or 'zero'");
}

json session_to_snapshot(const Session& s) {
  json history = json::array();
  for (const auto& h : s.history) history.push_back({{"query", h.query}, {"yaml", h.yaml}});
  json j = {{"id", s.id},
            {"created", s.created},
            {"updated", s.updated},
            {"history", history},
            {"missing_pair", policy_name(s.missing_pair)}};
  if (s.data) j["data"] = dataset_to_json(*s.data);
  if (s.report_schema) j["report_schema"] = *s.report_schema;
  return j;
}

Session session_from_snapshot(const json& j) {
  Session s;
  s.id = j.at("id").get<std::string>();
  s.created = j.at("created").get<std::string>();
  s.updated = j.at("updated").get<std::string>();
  for (const auto& h : j.at("history")) {
    std::string yaml = h.at("yaml").get<std::string>();
    ValidationReport report = validate_pipeline(yaml);
    if (!report.document) throw Error("BadSnapshot", "session " + s.id + ": stored document does not validate");
    s.history.push_back({*report.document, h.at("query").get<std::string>(), yaml});
  }
  s.missing_pair = parse_policy(j.value("missing_pair", "error"));
  if (j.contains("data")) s.data = dataset_from_json(j["data"]);
  if (j.contains("report_schema")) s.report_schema = j["report_schema"].get<std::string>();
  return s;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t end = path.find('/', start);
    if (end == std::string::npos) end = path.size();
    if (end > start) parts.push_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

}  // namespace

Service::Service(ServiceConfig config, std::unique_ptr<CompletionClient> client)
    : config_(std::move(config)), client_(std::move(client)) {
  config_.llm.validate();
  if (!client_) throw Error("InvalidConfig", "service needs a completion client");
  if (!config_.create_shots_dir.empty()) create_shots_ = load_shots(config_.create_shots_dir);
  if (!config_.edit_shots_dir.empty()) edit_shots_ = load_shots(config_.edit_shots_dir);
  if (config_.session_dir) {
    fs::create_directories(*config_.session_dir);
    load_snapshots();
  }
}

std::size_t Service::session_count() const {
  std::shared_lock lock(store_mu_);
  return sessions_.size();
}

std::shared_ptr<Service::Slot> Service::find(const std::string& id) const {
  std::shared_lock lock(store_mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void Service::snapshot(const Session& s) const {
  if (!config_.session_dir) return;
  fs::path target = fs::path(*config_.session_dir) / (s.id + ".json");
  fs::path tmp = target;
  tmp += ".tmp";
  write_file(tmp.string(), session_to_snapshot(s).dump(2) + "\n");
  fs::rename(tmp, target);
}

void Service::load_snapshots() {
  for (const auto& entry : fs::directory_iterator(*config_.session_dir)) {
    if (entry.path().extension() != ".json") continue;
    json j;
    try {
      j = json::parse(read_file(entry.path().string()));
    } catch (const json::exception& e) {
      throw Error("BadSnapshot", entry.path().string() + ": " + e.what());
    }
    auto slot = std::make_shared<Slot>();
    slot->session = session_from_snapshot(j);
    sessions_[slot->session.id] = slot;
  }
}

ApiResponse Service::handle(const std::string& method, const std::string& path, const std::string& body,
                            const std::map<std::string, std::string>& params) {
  std::vector<std::string> parts = split_path(path);
  if (parts.empty() || parts[0] != "sessions" || parts.size() > 3) {
    return fail(404, "NotFound", "no such route: " + path);
  }
  try {
    if (parts.size() == 1) {
      if (method != "POST") return fail(405, "MethodNotAllowed", method + " " + path);
      return create_session();
    }
    std::shared_ptr<Slot> slot = find(parts[1]);
    if (!slot) return fail(404, "UnknownSession", "no session " + parts[1]);
    std::string action = parts.size() == 3 ? parts[2] : "";
    std::string route = method + " " + action;
    if (route == "GET ") return get_session(*slot);
    if (route == "GET history") return get_history(*slot);
    if (route == "POST create") return generate_version(*slot, body, false);
    if (route == "POST edit") return generate_version(*slot, body, true);
    if (route == "PUT data") return put_data(*slot, body, params);
    if (route == "POST solve") return solve(*slot, body);
    if (route == "GET report") return get_report(*slot);
    if (route == "PUT report-schema") return put_report_schema(*slot, body);
    if (action.empty() || action == "history" || action == "create" || action == "edit" || action == "data" ||
        action == "solve" || action == "report" || action == "report-schema") {
      return fail(405, "MethodNotAllowed", method + " " + path);
    }
    return fail(404, "NotFound", "no such route: " + path);
  } catch (const Error& e) {
    return fail(status_for(e.kind()), e.kind(), e.what());
  }
}

ApiResponse Service::create_session() {
  auto slot = std::make_shared<Slot>();
  slot->session.created = slot->session.updated = now_iso();
  {
    std::unique_lock lock(store_mu_);
    do {
      slot->session.id = fresh_id();
    } while (sessions_.count(slot->session.id));
    sessions_[slot->session.id] = slot;
  }
  snapshot(slot->session);
  return {200, {{"id", slot->session.id}}};
}

ApiResponse Service::get_session(Slot& slot) {
  std::shared_lock lock(slot.mu);
  const Session& s = slot.session;
  json j = {{"id", s.id},
            {"created", s.created},
            {"updated", s.updated},
            {"versions", s.history.size()},
            {"has_data", s.data.has_value()},
            {"missing_pair", policy_name(s.missing_pair)},
            {"has_report_schema", s.report_schema.has_value()}};
  j["yaml"] = s.current() ? json(s.history.back().yaml) : json(nullptr);
  if (s.last) {
    j["last_outcome"] = outcome_to_json(s.last->outcome, s.last->model);
    j["last_outcome"]["version"] = s.last->version;
  } else {
    j["last_outcome"] = nullptr;
  }
  return {200, j};
}

ApiResponse Service::get_history(Slot& slot) {
  std::shared_lock lock(slot.mu);
  json versions = json::array();
  for (std::size_t i = 0; i < slot.session.history.size(); ++i) {
    const HistoryEntry& h = slot.session.history[i];
    versions.push_back({{"version", i + 1}, {"query", h.query}, {"yaml", h.yaml}});
  }
  return {200, {{"id", slot.session.id}, {"versions", versions}}};
}

ApiResponse Service::generate_version(Slot& slot, const std::string& body, bool edit) {
  json req = parse_body(body);
  std::string query = required_string(req, "query");
  std::unique_lock lock(slot.mu);
  Session& s = slot.session;
  if (edit && !s.current()) return fail(409, "NoDocument", "create a model before editing it");

  GenerateRequest g;
  g.query = query;
  g.shots = edit ? edit_shots_ : create_shots_;
  g.problem_id = s.id;
  if (edit) g.original = *s.current();
  GenerationResult result = orpipe::generate(g, config_.llm, *client_);

  json attempts = attempts_to_json(result);
  if (!result.final_document) {
    return fail(422, "GenerationFailed", "no valid model after " + std::to_string(result.attempts.size()) + " attempts",
                {{"attempts", attempts}});
  }
  const std::string& yaml = result.attempts.back().report.corrected_text;
  json out = {{"yaml", yaml},
              {"report", report_to_json(result.attempts.back().report)},
              {"attempts", attempts},
              {"succeeded_at", *result.succeeded_at}};
  if (edit) out["diff"] = diff_to_json(diff_documents(*s.current(), *result.final_document));
  s.history.push_back({*result.final_document, query, yaml});
  s.updated = now_iso();
  out["version"] = s.history.size();
  snapshot(s);
  return {200, out};
}

ApiResponse Service::put_data(Slot& slot, const std::string& body, const std::map<std::string, std::string>& params) {
  DataSet data = parse_dataset_json(body);
  MissingPairPolicy policy = MissingPairPolicy::kError;
  if (auto it = params.find("missing_pair"); it != params.end()) policy = parse_policy(it->second);
  std::unique_lock lock(slot.mu);
  Session& s = slot.session;
  if (!s.current()) return fail(409, "NoDocument", "create a model before uploading data");
  std::vector<BindingError> errors = check_contract(build_abstract(*s.current()), data);
  bool stored = true;
  for (const auto& e : errors) stored = stored && !e.fatal();
  if (stored) {
    s.data = std::move(data);
    s.missing_pair = policy;
    s.updated = now_iso();
    snapshot(s);
  }
  return {200, {{"errors", binding_errors_to_json(errors)}, {"stored", stored}}};
}

ApiResponse Service::solve(Slot& slot, const std::string& body) {
  json req = parse_body(body);
  SolverLimits limits;
  if (req.contains("limits")) {
    const json& l = req["limits"];
    try {
      limits.max_iterations = l.value("max_iterations", limits.max_iterations);
      limits.max_nodes = l.value("max_nodes", limits.max_nodes);
      limits.time_limit_seconds = l.value("time_limit_seconds", limits.time_limit_seconds);
    } catch (const json::exception& e) {
      throw Error("BadRequest", std::string("bad limits: ") + e.what());
    }
    limits.validate();
  }
  std::unique_lock lock(slot.mu);
  Session& s = slot.session;
  if (!s.current()) return fail(409, "NoDocument", "create a model before solving");
  if (!s.data) return fail(409, "NoData", "upload data before solving");
  std::size_t version = s.history.size();
  if (req.contains("version")) {
    if (!req["version"].is_number_unsigned() || req["version"] == 0 || req["version"].get<std::size_t>() > version) {
      throw Error("BadRequest", "version must be between 1 and " + std::to_string(version));
    }
    version = req["version"].get<std::size_t>();
  }
  const ModelDocument& doc = s.history[version - 1].document;
  AbstractModel abstract = build_abstract(doc);
  std::vector<BindingError> errors = check_contract(abstract, *s.data);
  for (const auto& e : errors) {
    if (e.fatal()) {
      return fail(422, "BindingFailure", "data does not satisfy the model's contract",
                  {{"errors", binding_errors_to_json(errors)}});
    }
  }
  ConcreteModel model;
  SolveOutcome outcome;
  try {
    // Anything the data can trigger while binding is the client's to fix.
    model = bind_data(abstract, *s.data, {s.missing_pair});
  } catch (const Error& e) {
    return fail(422, e.kind(), e.what(), {{"errors", binding_errors_to_json(errors)}});
  }
  try {
    outcome = orpipe::solve(model, limits);
  } catch (const Error& e) {
    if (e.kind() != "IncompatibleHint") throw;
    return fail(422, e.kind(), e.what());
  }
  json out = outcome_to_json(outcome, model);
  out["version"] = version;
  s.last = SolvedVersion{version, std::move(model), std::move(outcome)};
  s.updated = now_iso();
  return {200, out};
}

ApiResponse Service::get_report(Slot& slot) {
  std::shared_lock lock(slot.mu);
  const Session& s = slot.session;
  if (!s.last || !s.last->outcome.has_assignment()) {
    return fail(409, "NoSolution", "solve the model to a feasible point first");
  }
  const ModelDocument& doc = s.history[s.last->version - 1].document;
  ReportSchema schema = fallback_report_schema(doc);
  std::string source = "fallback";
  json warnings = json::array();
  if (s.report_schema) {
    ParsedReportSchema parsed = parse_report_schema(*s.report_schema, doc);
    if (parsed.schema) {
      schema = *parsed.schema;
      source = "attached";
    } else {
      warnings.push_back("attached report schema does not fit the solved version; using the fallback");
    }
  }
  std::vector<SolutionRow> rows = emit_rows(schema, s.last->model, s.last->outcome);
  json out = rows_to_json(schema, rows);
  out["schema_source"] = source;
  out["schema_yaml"] = serialize_report_schema(schema);
  out["version"] = s.last->version;
  out["warnings"] = warnings;
  if (config_.report_persist.db_path || config_.report_persist.csv_dir) {
    PersistSummary p = persist(schema, rows, config_.report_persist);
    out["persisted"] = {{"tables_created", p.tables_created}, {"rows_written", p.rows_written}, {"csv_files", p.csv_files}};
  }
  return {200, out};
}

ApiResponse Service::put_report_schema(Slot& slot, const std::string& body) {
  json req = parse_body(body);
  bool generate = req.value("generate", false);
  std::string yaml;
  if (!generate) yaml = required_string(req, "yaml");
  std::unique_lock lock(slot.mu);
  Session& s = slot.session;
  if (!s.current()) return fail(409, "NoDocument", "create a model before attaching a report schema");

  ParsedReportSchema parsed;
  json attempts = json::array();
  if (!generate) {
    parsed = parse_report_schema(yaml, *s.current());
  } else {
    std::string summary = "not solved yet";
    if (s.last) summary = std::string(status_name(s.last->outcome.status));
    Prompt prompt = build_report_prompt(*s.current(), summary);
    for (std::size_t k = 1; k <= config_.llm.max_attempts; ++k) {
      Completion c = client_->complete({config_.llm.model, config_.llm.temperature, prompt, s.id, k});
      yaml = c.text;
      parsed = parse_report_schema(yaml, *s.current());
      attempts.push_back({{"attempt", k}, {"valid", parsed.schema.has_value()},
                          {"violations", violations_to_json(parsed.violations)}});
      if (parsed.schema) break;
    }
  }
  if (!parsed.schema) {
    return fail(422, "InvalidReportSchema", "report schema does not fit the current model",
                {{"violations", violations_to_json(parsed.violations)}, {"attempts", attempts}});
  }
  s.report_schema = serialize_report_schema(*parsed.schema);
  s.updated = now_iso();
  snapshot(s);
  return {200, {{"yaml", *s.report_schema}, {"tables", parsed.schema->tables.size()}, {"attempts", attempts}}};
}

void mount(httplib::Server& server, Service& service) {
  auto route = [&service](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> params;
    for (const auto& [k, v] : req.params) params[k] = v;
    ApiResponse r = service.handle(req.method, req.path, req.body, params);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"}});
  server.Get(R"(/sessions.*)", route);
  server.Post(R"(/sessions.*)", route);
  server.Put(R"(/sessions.*)", route);
  server.Options(R"(/sessions.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
}

}  // namespace orpipe
