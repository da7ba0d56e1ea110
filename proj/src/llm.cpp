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

#include "orpipe/llm.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace orpipe {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::string strip_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

std::vector<fs::path> sorted_entries(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

void require_query(std::string_view query) {
  if (trim(query).empty()) throw Error("PreconditionFailed", "the query is empty");
}

std::string fields_text(const std::vector<FieldDecl>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ", ";
    out += fields[i].name + " (" + std::string(scalar_type_name(fields[i].type)) + ")";
  }
  return out;
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

}  // namespace

std::vector<Shot> load_shots(const std::string& dir) {
  std::vector<Shot> shots;
  for (const auto& entry : sorted_entries(dir)) {
    if (!fs::is_directory(entry)) continue;
    Shot s;
    s.problem = strip_trailing_newlines(read_file((entry / "problem.txt").string()));
    s.answer_yaml = strip_trailing_newlines(read_file((entry / "answer.yaml").string()));
    if (fs::exists(entry / "original.yaml")) {
      s.original_yaml = strip_trailing_newlines(read_file((entry / "original.yaml").string()));
    }
    shots.push_back(std::move(s));
  }
  return shots;
}

std::string Prompt::text() const { return "System:\n" + system + "\n\nUser:\n" + user; }

std::vector<Message> Prompt::messages() const { return {{"system", system}, {"user", user}}; }

std::string_view schema_description() {
  return R"(A model file is a YAML mapping with these top-level keys, in this order:

InputData: a mapping from input name to its declaration. Each declaration has
  desc: one line of text
  key: list of single-entry mappings "- <field>: <type>" naming the key fields
  value: list of single-entry mappings "- <field>: <type>" naming the value fields
  Types are str, int, integer, float or bool.
VariableBatch: a list of decision-variable batches. Each entry has
  desc, name, key, value (as above)
  indices: an expression listing the keys, e.g. list(self.<input>.keys())
  vtype: C (continuous), I (integer) or B (binary)
  lower_bound, upper_bound: numbers, inf or -inf
Objective: a mapping with
  desc
  constructor: an expression for the objective, e.g. sum(self.c[i] * self.x[i] for i in self.c)
  sense: min or max
ConstraintBatch: a list of constraint batches. Each entry has
  desc, name
  generator: one comparison (<=, >= or ==), or a parenthesised generator of
  comparisons such as (<lhs> <= <rhs> for j in self.<input>)
Solver: optional; lp, milp or auto.

Expressions refer to inputs and variable batches as self.<name>. Subscripts
use one key or a comma-separated tuple of keys. Iterating over an input
yields its keys. Allowed calls are sum, min, max, abs, len and list, plus the
methods keys(), values() and items(). A trailing backslash continues a line.)";
}

Prompt build_creation_prompt(std::string_view query, const std::vector<Shot>& shots) {
  require_query(query);
  Prompt p;
  p.few_shots = shots;
  p.system = "You write YAML model files that describe optimization problems.\n\n" +
             std::string(schema_description()) +
             "\n\nUse the worked examples in the user message as the reference for style and structure. "
             "Reply with the YAML file only.";
  std::string user = "Write a YAML model file for the problem at the end.";
  if (!shots.empty()) user += " Worked examples come first.";
  for (const auto& s : shots) {
    user += "\n\nProblem:\n" + s.problem + "\n\nYAML file:\n" + s.answer_yaml;
  }
  user += "\n\nProblem:\n" + trim(query) + "\n\nYAML file:";
  p.user = std::move(user);
  return p;
}

Prompt build_edit_prompt(std::string_view query, const ModelDocument& original, const std::vector<Shot>& shots) {
  require_query(query);
  Prompt p;
  p.few_shots = shots;
  p.system = "You revise YAML model files that describe optimization problems.\n\n" +
             std::string(schema_description()) +
             "\n\nUse the worked examples in the user message as the reference for how to apply a change. "
             "Reply with the complete updated YAML file only.";
  std::string user = "Apply the requested change to the original YAML and reply with the updated YAML.";
  if (!shots.empty()) user += " Worked examples come first.";
  for (const auto& s : shots) {
    user += "\n\nProblem:\n" + s.problem + "\n\nOriginal YAML:\n" + s.original_yaml.value_or("") +
            "\n\nUpdated YAML:\n" + s.answer_yaml;
  }
  user += "\n\nProblem:\n" + trim(query) + "\n\nOriginal YAML:\n" +
          strip_trailing_newlines(serialize_model_yaml(original)) + "\n\nUpdated YAML:";
  p.user = std::move(user);
  return p;
}

Prompt build_report_prompt(const ModelDocument& doc, std::string_view outcome_summary) {
  Prompt p;
  p.system =
      "You design report tables for the solution of an optimization model. Reply with YAML only, shaped as:\n\n"
      "tables:\n"
      "  - name: <table title>\n"
      "    desc: <one line>\n"
      "    variable: <variable batch name>\n"
      "    columns:\n"
      "      - name: <column title>\n"
      "        type: <str | int | float | bool>\n"
      "        desc: <one line>\n"
      "        primary_key: true   # on at least one column per table\n"
      "        value: <key or value field of the batch>";
  std::string user = "Model objective: " + doc.objective.desc + " (" +
                     (doc.objective.sense == Sense::kMin ? "min" : "max") + ")\n";
  if (!trim(outcome_summary).empty()) user += "Solution status: " + trim(outcome_summary) + "\n";
  user += "\nDecision variable batches:";
  for (const auto& b : doc.variable_batches) {
    user += "\n- " + b.name + ": " + b.desc + "\n  key fields: " + fields_text(b.key) +
            "\n  value fields: " + fields_text(b.value);
  }
  user += "\n\nDescribe one table per batch. Report schema:";
  p.user = std::move(user);
  return p;
}

// ---------------------------------------------------------------------------

RemoteOptions RemoteOptions::from_environment() {
  RemoteOptions o;
  const char* endpoint = std::getenv("NL2OR_LLM_ENDPOINT");
  if (endpoint == nullptr || *endpoint == '\0') {
    throw Error("BackendUnavailable", "NL2OR_LLM_ENDPOINT is not set");
  }
  o.endpoint = endpoint;
  if (const char* key = std::getenv("NL2OR_LLM_KEY")) o.api_key = key;
  return o;
}

RemoteClient::RemoteClient(RemoteOptions options) : options_(std::move(options)) {}

Completion RemoteClient::complete(const CompletionRequest& request) {
  auto scheme_end = options_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Error("BackendUnavailable", "endpoint must be an http(s) URL: " + options_.endpoint);
  }
  auto path_start = options_.endpoint.find('/', scheme_end + 3);
  std::string origin = options_.endpoint.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : options_.endpoint.substr(path_start);

  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.prompt.messages()) messages.push_back({{"role", m.role}, {"content", m.content}});
  nlohmann::json body = {{"model", request.model}, {"temperature", request.temperature}, {"messages", messages}};

  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0 && options_.backoff_seconds > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(options_.backoff_seconds * attempt));
    }
    httplib::Client client(origin);
    auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(options_.timeout_seconds));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error("BackendUnavailable", "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    try {
      auto j = nlohmann::json::parse(res->body);
      return {j.at("choices").at(0).at("message").at("content").get<std::string>(), std::nullopt};
    } catch (const nlohmann::json::exception& e) {
      throw Error("BackendUnavailable", std::string("malformed completion response: ") + e.what());
    }
  }
  throw Error("BackendUnavailable", options_.endpoint + " after " + std::to_string(options_.retries + 1) +
                                        " tries: " + last_error);
}

// ---------------------------------------------------------------------------

ScriptedClient::ScriptedClient(std::string dir) : dir_(std::move(dir)) {
  if (!fs::is_directory(dir_)) throw Error("InvalidConfig", "fixture directory not found: " + dir_);
}

Completion ScriptedClient::complete(const CompletionRequest& request) {
  std::string key;
  if (!request.problem_id.empty() && fs::is_directory(fs::path(dir_) / request.problem_id / "responses")) {
    key = request.problem_id;
  }
  fs::path script = key.empty() ? fs::path(dir_) / "responses" : fs::path(dir_) / key / "responses";
  std::vector<fs::path> files;
  for (const auto& f : sorted_entries(script)) {
    if (fs::is_regular_file(f)) files.push_back(f);
  }
  std::size_t index;
  {
    std::lock_guard lock(mu_);
    index = cursor_[key]++;
  }
  if (index >= files.size()) {
    throw Error("FixtureExhausted", script.string() + " has " + std::to_string(files.size()) +
                                        " responses; response " + std::to_string(index + 1) + " was requested");
  }
  return {read_file(files[index].string()), std::nullopt};
}

// ---------------------------------------------------------------------------

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

CorpusClient::CorpusClient(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error("InvalidConfig", "fixture directory not found: " + dir);
  for (const auto& entry : sorted_entries(dir)) {
    if (!fs::exists(entry / "prompt.txt") || !fs::exists(entry / "response.yaml")) continue;
    Entry e{read_file((entry / "prompt.txt").string()), read_file((entry / "response.yaml").string())};
    entries_.emplace(fnv1a(e.prompt), std::move(e));
  }
}

Completion CorpusClient::complete(const CompletionRequest& request) {
  std::string text = request.prompt.text();
  auto [lo, hi] = entries_.equal_range(fnv1a(text));
  for (auto it = lo; it != hi; ++it) {
    if (it->second.prompt == text) return {it->second.response, std::nullopt};
  }
  throw Error("FixtureMiss", "no corpus entry for this prompt (hash " + std::to_string(fnv1a(text)) + ")");
}

// ---------------------------------------------------------------------------

BernoulliClient::BernoulliClient(double p, std::uint64_t seed, std::string valid_text, std::string invalid_text)
    : p_(p), seed_(seed), valid_(std::move(valid_text)), invalid_(std::move(invalid_text)) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("InvalidConfig", "success probability must be in [0, 1]");
}

Completion BernoulliClient::complete(const CompletionRequest& request) {
  std::ostringstream key;
  key << seed_ << '|' << request.model << '|' << format_number(request.temperature) << '|' << request.problem_id
      << '|' << request.attempt;
  std::mt19937_64 rng(fnv1a(key.str()));
  bool ok = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p_;
  // Synthetic latency in whole milliseconds keeps summaries byte-stable.
  double latency = 0.5 + std::exponential_distribution<double>(0.5)(rng);
  latency = std::round(latency * 1000.0) / 1000.0;
  return {ok ? valid_ : invalid_, latency};
}

// ---------------------------------------------------------------------------

void LlmConfig::validate() const {
  if (backend != "remote" && backend != "fixture") throw Error("InvalidConfig", "unknown backend '" + backend + "'");
  if (backend == "fixture" && fixture_dir.empty()) {
    throw Error("InvalidConfig", "the fixture backend needs a fixture directory");
  }
  if (fixture_mode != "auto" && fixture_mode != "scripted" && fixture_mode != "corpus" &&
      fixture_mode != "bernoulli") {
    throw Error("InvalidConfig", "unknown fixture mode '" + fixture_mode + "'");
  }
  if (!(temperature >= 0.0 && temperature <= 2.0)) throw Error("InvalidConfig", "temperature must be in [0, 2]");
  if (max_attempts == 0) throw Error("InvalidConfig", "max attempts must be positive");
  if (fixed_latency && *fixed_latency < 0) throw Error("InvalidConfig", "fixed latency must be non-negative");
}

std::unique_ptr<CompletionClient> make_client(const LlmConfig& config) {
  config.validate();
  if (config.backend == "remote") return std::make_unique<RemoteClient>(RemoteOptions::from_environment());
  std::string mode = config.fixture_mode;
  fs::path dir(config.fixture_dir);
  if (mode == "auto") {
    if (fs::exists(dir / "bernoulli.json")) {
      mode = "bernoulli";
    } else if (fs::is_directory(dir / "responses")) {
      mode = "scripted";
    } else {
      mode = "corpus";
      for (const auto& e : sorted_entries(dir)) {
        if (fs::is_directory(e / "responses")) mode = "scripted";
      }
    }
  }
  if (mode == "scripted") return std::make_unique<ScriptedClient>(config.fixture_dir);
  if (mode == "corpus") return std::make_unique<CorpusClient>(config.fixture_dir);

  // bernoulli.json: {"p": 0.5, "seed": 1, "valid": "<file>", "invalid": "<file>"}; the
  // config's p and seed apply when the file does not set them.
  double p = config.bernoulli_p;
  std::uint64_t seed = config.seed;
  std::string valid_file = "valid.yaml";
  std::string invalid_file = "invalid.yaml";
  if (fs::exists(dir / "bernoulli.json")) {
    auto j = nlohmann::json::parse(read_file((dir / "bernoulli.json").string()));
    p = j.value("p", p);
    seed = j.value("seed", seed);
    valid_file = j.value("valid", valid_file);
    invalid_file = j.value("invalid", invalid_file);
  }
  return std::make_unique<BernoulliClient>(p, seed, read_file((dir / valid_file).string()),
                                           read_file((dir / invalid_file).string()));
}

// ---------------------------------------------------------------------------

Prompt prompt_for(const GenerateRequest& request) {
  return request.original ? build_edit_prompt(request.query, *request.original, request.shots)
                          : build_creation_prompt(request.query, request.shots);
}

Attempt run_attempt(const Prompt& prompt, const GenerateRequest& request, const LlmConfig& config,
                    CompletionClient& client, std::size_t index) {
  Attempt attempt;
  auto t0 = Clock::now();
  Completion c = client.complete({config.model, config.temperature, prompt, request.problem_id, index});
  attempt.completion_seconds = c.simulated_latency ? *c.simulated_latency : seconds_since(t0);
  attempt.raw = std::move(c.text);

  auto t1 = Clock::now();
  attempt.report = validate_pipeline(attempt.raw);
  attempt.validation_seconds = seconds_since(t1);

  if (attempt.report.document && request.data) {
    auto t2 = Clock::now();
    try {
      bind_data(build_abstract(*attempt.report.document), *request.data);
    } catch (const Error& e) {
      attempt.runtime_error = std::string(e.kind()) + ": " + e.what();
    }
    attempt.execution_seconds = seconds_since(t2);
  }
  if (config.fixed_latency) {
    attempt.completion_seconds = *config.fixed_latency;
    attempt.validation_seconds = 0.0;
    attempt.execution_seconds = 0.0;
    attempt.synthetic_latency = true;
  } else if (c.simulated_latency) {
    // Mock latencies stand for the whole attempt so reruns agree.
    attempt.validation_seconds = 0.0;
    attempt.execution_seconds = 0.0;
    attempt.synthetic_latency = true;
  }
  return attempt;
}

GenerationResult generate(const GenerateRequest& request, const LlmConfig& config, CompletionClient& client) {
  config.validate();
  Prompt prompt = prompt_for(request);
  GenerationResult result;
  for (std::size_t i = 1; i <= config.max_attempts; ++i) {
    Attempt attempt = run_attempt(prompt, request, config, client, i);
    bool ok = attempt.valid();
    result.attempts.push_back(std::move(attempt));
    if (ok) {
      result.final_document = result.attempts.back().report.document;
      result.succeeded_at = i;
      break;
    }
  }
  return result;
}

}  // namespace orpipe
