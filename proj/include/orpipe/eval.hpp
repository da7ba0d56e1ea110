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


// Evaluation harness: runs a problem corpus through the generator under a
// grid of model names and temperatures and summarizes Valid@k and latency.
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orpipe/llm.hpp"

namespace orpipe {

struct AttemptRecord {
  bool valid = false;
  double latency = 0.0;
};

struct EvalRecord {
  std::string problem_id;
  std::string mode;  // create | edit
  std::vector<AttemptRecord> attempts;
  std::string model;
  double temperature = 0.0;
};

// Share of records with at least one valid attempt among the first k.
// Throws Error("InsufficientAttempts") if a record has fewer than k.
double valid_at_k(const std::vector<EvalRecord>& records, std::size_t k);

// Mean validity of the first k attempts, pooled over records.
double mean_validity_at_k(const std::vector<EvalRecord>& records, std::size_t k);

struct LatencyStats {
  double mean = 0.0;
  double std = 0.0;  // population
  double p50 = 0.0;
  double p75 = 0.0;
  double p90 = 0.0;
  std::size_t n = 0;
};

// Nearest-rank percentiles. Throws Error("EmptySample").
LatencyStats latency_percentiles(std::vector<double> samples);

struct EvalSummary {
  std::string model;
  double temperature = 0.0;
  std::size_t problems = 0;
  std::map<std::size_t, double> valid_at;
  std::map<std::size_t, double> mean_validity;
  std::optional<LatencyStats> latency;
  std::optional<std::string> error;  // set when the cell was aborted
};

EvalSummary summarize(const std::vector<EvalRecord>& records, const std::vector<std::size_t>& ks);

struct CorpusProblem {
  std::string id;
  std::string query;
  std::optional<ModelDocument> original;
  std::optional<DataSet> data;
  std::optional<double> expected_objective;
};

// Reads corpus/<id>/{query.txt, original.yaml?, data.json?, expect.txt?},
// sorted by id. Edit mode requires original.yaml. Throws Error("InvalidCorpus").
std::vector<CorpusProblem> load_corpus(const std::string& dir, const std::string& mode);

struct EvalOptions {
  std::string corpus_dir;
  std::string mode = "create";
  std::vector<std::string> models = {"fixture"};
  std::vector<double> temperatures = {0.0};
  std::size_t k = 5;
  std::vector<std::size_t> report_ks = {1, 3, 5};
  std::uint64_t seed = 0;
  std::size_t parallel = 1;
  LlmConfig llm;  // model, temperature and max_attempts are set per cell
  std::string shots_dir;
};

struct EvalRun {
  std::string mode;
  std::size_t k = 0;
  std::vector<std::size_t> report_ks;
  std::vector<EvalRecord> records;  // ordered by cell, then problem id
  std::vector<EvalSummary> cells;   // ordered by model, then temperature
};

// Every problem gets exactly k independent attempts. A backend error aborts
// its cell only.
EvalRun run_eval(const EvalOptions& options);

// Aligned text table with one row per model and temperature.
std::string format_eval_table(const EvalRun& run);

nlohmann::json eval_to_json(const EvalRun& run);

}  // namespace orpipe
