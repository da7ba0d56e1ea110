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

// Prompt builders, completion clients and the generate-validate loop.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orpipe/dsl_schema.hpp"
#include "orpipe/model.hpp"
#include "orpipe/validator.hpp"

namespace orpipe {

// One worked example. Edit shots carry the original document.
struct Shot {
  std::string problem;
  std::optional<std::string> original_yaml;
  std::string answer_yaml;
};

// Reads every subdirectory of `dir` in name order. Each holds problem.txt,
// answer.yaml and, for edit shots, original.yaml.
std::vector<Shot> load_shots(const std::string& dir);

struct Message {
  std::string role;
  std::string content;
};

struct Prompt {
  std::string system;
  std::string user;
  std::vector<Shot> few_shots;

  // "System:\n<system>\n\nUser:\n<user>"; the corpus mock keys on this.
  std::string text() const;
  std::vector<Message> messages() const;
};

// Grammar summary embedded in the system section of model prompts.
std::string_view schema_description();

// Throws Error("PreconditionFailed") when the query is blank.
Prompt build_creation_prompt(std::string_view query, const std::vector<Shot>& shots);
Prompt build_edit_prompt(std::string_view query, const ModelDocument& original,
                         const std::vector<Shot>& shots);

// Only document metadata reaches this prompt; it never sees a DataSet.
Prompt build_report_prompt(const ModelDocument& doc, std::string_view outcome_summary);

struct CompletionRequest {
  std::string model;
  double temperature = 0.0;
  Prompt prompt;
  std::string problem_id;  // lets mocks keep per-problem state
  std::size_t attempt = 1;  // 1-based
};

struct Completion {
  std::string text;
  std::optional<double> simulated_latency;  // mocks may report a synthetic latency
};

class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual Completion complete(const CompletionRequest& request) = 0;
};

struct RemoteOptions {
  std::string endpoint;  // full URL of a chat-completions endpoint
  std::string api_key;
  int retries = 2;
  double timeout_seconds = 120.0;
  double backoff_seconds = 1.0;

  // NL2OR_LLM_ENDPOINT and NL2OR_LLM_KEY; throws BackendUnavailable when the
  // endpoint variable is unset.
  static RemoteOptions from_environment();
};

// Chat-completion JSON over HTTP(S). Throws Error("BackendUnavailable") after
// the configured retries.
class RemoteClient : public CompletionClient {
 public:
  explicit RemoteClient(RemoteOptions options);
  Completion complete(const CompletionRequest& request) override;

 private:
  RemoteOptions options_;
};

// Ordered responses from <dir>/responses/001.yaml, 002.yaml, ... or, when the
// request names a problem that has its own script, <dir>/<problem>/responses.
// Each script has its own cursor. Throws Error("FixtureExhausted").
class ScriptedClient : public CompletionClient {
 public:
  explicit ScriptedClient(std::string dir);
  Completion complete(const CompletionRequest& request) override;

 private:
  std::string dir_;
  std::mutex mu_;
  std::map<std::string, std::size_t> cursor_;
};

// Looks the prompt up in <dir>/<name>/{prompt.txt,response.yaml} by exact
// text. Throws Error("FixtureMiss") for an unknown prompt.
class CorpusClient : public CompletionClient {
 public:
  explicit CorpusClient(const std::string& dir);
  Completion complete(const CompletionRequest& request) override;
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::string prompt;
    std::string response;
  };
  std::multimap<std::uint64_t, Entry> entries_;
};

std::uint64_t fnv1a(std::string_view text);

// Each attempt succeeds independently with probability p. The draw depends
// only on (seed, model, temperature, problem, attempt), so results do not
// depend on call order. Latencies are synthetic and equally reproducible.
class BernoulliClient : public CompletionClient {
 public:
  BernoulliClient(double p, std::uint64_t seed, std::string valid_text, std::string invalid_text);
  Completion complete(const CompletionRequest& request) override;

 private:
  double p_;
  std::uint64_t seed_;
  std::string valid_;
  std::string invalid_;
};

struct LlmConfig {
  std::string backend = "fixture";        // remote | fixture
  std::string fixture_mode = "auto";      // auto | scripted | corpus | bernoulli
  std::string fixture_dir;
  std::string model = "fixture";
  double temperature = 0.0;
  std::size_t max_attempts = 3;
  std::optional<double> fixed_latency;    // seconds charged per attempt
  double bernoulli_p = 0.5;
  std::uint64_t seed = 0;

  // Throws Error("InvalidConfig").
  void validate() const;
};

// Builds the client named by the config. In auto mode a fixture directory
// with responses/ is scripted, one with bernoulli.json is a Bernoulli mock
// and anything else is a corpus.
std::unique_ptr<CompletionClient> make_client(const LlmConfig& config);

struct Attempt {
  std::string raw;
  ValidationReport report;
  std::optional<std::string> runtime_error;  // binding failure against supplied data
  double completion_seconds = 0.0;
  double validation_seconds = 0.0;
  double execution_seconds = 0.0;
  bool synthetic_latency = false;  // fixed or mock-supplied, not measured

  double latency() const { return completion_seconds + validation_seconds + execution_seconds; }
  bool valid() const { return report.verdict != Verdict::kIrreparable && !runtime_error; }
};

struct GenerationResult {
  std::vector<Attempt> attempts;
  std::optional<ModelDocument> final_document;
  std::optional<std::size_t> succeeded_at;  // 1-based
};

struct GenerateRequest {
  std::string query;
  std::optional<ModelDocument> original;  // present for edits
  std::vector<Shot> shots;
  std::string problem_id;
  // When present, each accepted document is also bound to this data and a
  // binding failure counts as a failed attempt.
  std::optional<DataSet> data;
};

// Creation prompt, or edit prompt when an original is present.
Prompt prompt_for(const GenerateRequest& request);

// One completion plus validation (and binding when data is supplied).
// `index` is the 1-based attempt number passed to the client.
Attempt run_attempt(const Prompt& prompt, const GenerateRequest& request, const LlmConfig& config,
                    CompletionClient& client, std::size_t index);

// Up to config.max_attempts rounds of prompt, completion and validation,
// stopping at the first accepted document.
GenerationResult generate(const GenerateRequest& request, const LlmConfig& config,
                          CompletionClient& client);

}  // namespace orpipe
