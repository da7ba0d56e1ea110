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


#include "orpipe/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <thread>

#include "orpipe/common.hpp"
#include "orpipe/json_io.hpp"
#include "orpipe/solver.hpp"

namespace orpipe {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void require_attempts(const std::vector<EvalRecord>& records, std::size_t k) {
  if (k == 0) throw Error("InsufficientAttempts", "k must be at least 1");
  for (const auto& r : records) {
    if (r.attempts.size() < k) {
      throw Error("InsufficientAttempts", r.problem_id + " has " + std::to_string(r.attempts.size()) +
                                              " attempts, fewer than k = " + std::to_string(k));
    }
  }
}

// 1-based rank ceil(percent * n / 100) in exact integer arithmetic.
double nearest_rank(const std::vector<double>& sorted, std::size_t percent) {
  std::size_t rank = (percent * sorted.size() + 99) / 100;
  return sorted[std::max<std::size_t>(rank, 1) - 1];
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

double valid_at_k(const std::vector<EvalRecord>& records, std::size_t k) {
  require_attempts(records, k);
  if (records.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : records) {
    hits += std::any_of(r.attempts.begin(), r.attempts.begin() + static_cast<std::ptrdiff_t>(k),
                        [](const AttemptRecord& a) { return a.valid; });
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double mean_validity_at_k(const std::vector<EvalRecord>& records, std::size_t k) {
  require_attempts(records, k);
  if (records.empty()) return 0.0;
  std::size_t valid = 0;
  for (const auto& r : records) {
    for (std::size_t i = 0; i < k; ++i) valid += r.attempts[i].valid;
  }
  return static_cast<double>(valid) / static_cast<double>(records.size() * k);
}

LatencyStats latency_percentiles(std::vector<double> samples) {
  if (samples.empty()) throw Error("EmptySample", "latency statistics need at least one sample");
  std::sort(samples.begin(), samples.end());
  LatencyStats s;
  s.n = samples.size();
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  double sq = 0.0;
  for (double v : samples) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(s.n));
  s.p50 = nearest_rank(samples, 50);
  s.p75 = nearest_rank(samples, 75);
  s.p90 = nearest_rank(samples, 90);
  return s;
}

EvalSummary summarize(const std::vector<EvalRecord>& records, const std::vector<std::size_t>& ks) {
  EvalSummary s;
  s.problems = records.size();
  if (!records.empty()) {
    s.model = records.front().model;
    s.temperature = records.front().temperature;
  }
  std::size_t available = records.empty() ? 0 : records.front().attempts.size();
  for (const auto& r : records) available = std::min(available, r.attempts.size());
  for (std::size_t k : ks) {
    if (k == 0 || k > available) continue;
    s.valid_at[k] = valid_at_k(records, k);
    s.mean_validity[k] = mean_validity_at_k(records, k);
  }
  std::vector<double> samples;
  for (const auto& r : records) {
    for (const auto& a : r.attempts) samples.push_back(a.latency);
  }
  if (!samples.empty()) s.latency = latency_percentiles(std::move(samples));
  return s;
}

std::vector<CorpusProblem> load_corpus(const std::string& dir, const std::string& mode) {
  if (mode != "create" && mode != "edit") throw Error("InvalidCorpus", "mode must be create or edit");
  if (!fs::is_directory(dir)) throw Error("InvalidCorpus", "no corpus directory " + dir);
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<CorpusProblem> out;
  for (const auto& d : dirs) {
    CorpusProblem p;
    p.id = d.filename().string();
    if (!fs::exists(d / "query.txt")) throw Error("InvalidCorpus", p.id + ": missing query.txt");
    p.query = trim(read_file((d / "query.txt").string()));
    if (fs::exists(d / "original.yaml")) {
      ParsedDocument parsed = parse_model_yaml(read_file((d / "original.yaml").string()));
      if (!parsed.ok()) throw Error("InvalidCorpus", p.id + ": original.yaml is not a valid model");
      p.original = *parsed.document;
    } else if (mode == "edit") {
      throw Error("InvalidCorpus", p.id + ": edit mode needs original.yaml");
    }
    if (mode == "create") p.original.reset();
    if (fs::exists(d / "data.json")) p.data = parse_dataset_json(read_file((d / "data.json").string()));
    if (fs::exists(d / "expect.txt")) {
      auto v = parse_extended_real(trim(read_file((d / "expect.txt").string())));
      if (!v) throw Error("InvalidCorpus", p.id + ": expect.txt must hold an objective value");
      p.expected_objective = *v;
    }
    out.push_back(std::move(p));
  }
  if (out.empty()) throw Error("InvalidCorpus", dir + " holds no problems");
  return out;
}

EvalRun run_eval(const EvalOptions& options) {
  if (options.k == 0) throw Error("InvalidConfig", "k must be at least 1");
  if (options.models.empty() || options.temperatures.empty()) {
    throw Error("InvalidConfig", "need at least one model and one temperature");
  }
  std::vector<CorpusProblem> problems = load_corpus(options.corpus_dir, options.mode);
  std::vector<Shot> shots = options.shots_dir.empty() ? std::vector<Shot>{} : load_shots(options.shots_dir);

  struct Cell {
    LlmConfig config;
    std::unique_ptr<CompletionClient> client;
    std::atomic<bool> aborted{false};
    std::mutex mu;
    std::optional<std::string> error;
  };
  std::vector<std::unique_ptr<Cell>> cells;
  for (const auto& model : options.models) {
    for (double t : options.temperatures) {
      auto cell = std::make_unique<Cell>();
      cell->config = options.llm;
      cell->config.model = model;
      cell->config.temperature = t;
      cell->config.max_attempts = options.k;
      cell->config.seed = options.seed;
      cell->config.validate();
      cell->client = make_client(cell->config);
      cells.push_back(std::move(cell));
    }
  }

  EvalRun run;
  run.mode = options.mode;
  run.k = options.k;
  run.report_ks = options.report_ks;
  run.records.resize(cells.size() * problems.size());

  auto work = [&](std::size_t task) {
    Cell& cell = *cells[task / problems.size()];
    const CorpusProblem& p = problems[task % problems.size()];
    EvalRecord& rec = run.records[task];
    rec.problem_id = p.id;
    rec.mode = options.mode;
    rec.model = cell.config.model;
    rec.temperature = cell.config.temperature;
    if (cell.aborted) return;
    GenerateRequest req{p.query, p.original, shots, p.id, p.data};
    Prompt prompt = prompt_for(req);
    try {
      for (std::size_t i = 1; i <= options.k; ++i) {
        Attempt a = run_attempt(prompt, req, cell.config, *cell.client, i);
        bool valid = a.valid();
        double latency = a.latency();
        if (valid && p.data) {
          // Executability includes solving; the expected objective, when
          // given, must be reproduced.
          auto t0 = std::chrono::steady_clock::now();
          try {
            SolveOutcome out = solve(bind_data(build_abstract(*a.report.document), *p.data));
            if (p.expected_objective) {
              valid = out.has_assignment() && std::abs(out.objective - *p.expected_objective) <=
                                                  1e-6 * std::max(1.0, std::abs(*p.expected_objective));
            }
          } catch (const Error&) {
            valid = false;
          }
          if (!a.synthetic_latency) {
            latency += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          }
        }
        rec.attempts.push_back({valid, latency});
      }
    } catch (const Error& e) {
      std::lock_guard lock(cell.mu);
      cell.aborted = true;
      if (!cell.error) cell.error = std::string(e.kind()) + ": " + e.what();
    }
  };

  std::size_t tasks = run.records.size();
  std::size_t threads = std::max<std::size_t>(1, std::min(options.parallel, tasks));
  if (threads == 1) {
    for (std::size_t t = 0; t < tasks; ++t) work(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < tasks; t = next++) work(t);
      });
    }
    for (auto& th : pool) th.join();
  }

  for (std::size_t c = 0; c < cells.size(); ++c) {
    EvalSummary s;
    if (cells[c]->error) {
      s.error = cells[c]->error;
    } else {
      std::vector<EvalRecord> slice(run.records.begin() + static_cast<std::ptrdiff_t>(c * problems.size()),
                                    run.records.begin() + static_cast<std::ptrdiff_t>((c + 1) * problems.size()));
      s = summarize(slice, options.report_ks);
    }
    s.model = cells[c]->config.model;
    s.temperature = cells[c]->config.temperature;
    s.problems = problems.size();
    run.cells.push_back(std::move(s));
  }
  return run;
}

std::string format_eval_table(const EvalRun& run) {
  std::vector<std::string> header = {"Model", "Temp", "N"};
  for (std::size_t k : run.report_ks) header.push_back("Valid@" + std::to_string(k));
  for (const char* h : {"Ave", "Std", "P50", "P75", "P90"}) header.push_back(h);

  auto valid_cells = [&](const EvalSummary& s, const std::map<std::size_t, double>& m) {
    std::vector<std::string> row = {s.model, format_number(s.temperature), std::to_string(s.problems)};
    for (std::size_t k : run.report_ks) {
      auto it = m.find(k);
      row.push_back(s.error ? "x" : it == m.end() ? "-" : fixed(it->second, 2));
    }
    return row;
  };
  std::vector<std::vector<std::string>> primary = {header};
  std::vector<std::vector<std::string>> secondary = {
      std::vector<std::string>(header.begin(), header.begin() + 3 + static_cast<std::ptrdiff_t>(run.report_ks.size()))};
  for (const auto& s : run.cells) {
    std::vector<std::string> row = valid_cells(s, s.valid_at);
    if (s.latency && !s.error) {
      for (double v : {s.latency->mean, s.latency->std, s.latency->p50, s.latency->p75, s.latency->p90}) {
        row.push_back(fixed(v, 2));
      }
    } else {
      for (int i = 0; i < 5; ++i) row.push_back(s.error ? "x" : "-");
    }
    primary.push_back(std::move(row));
    secondary.push_back(valid_cells(s, s.mean_validity));
  }

  auto render = [](const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    std::string out;
    for (const auto& r : rows) {
      std::string line;
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) line += "  ";
        // Text columns left aligned, numbers right aligned.
        std::string pad(width[i] - r[i].size(), ' ');
        line += i == 0 ? r[i] + pad : pad + r[i];
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out += line + "\n";
    }
    return out;
  };

  std::string out = "Mode: " + run.mode + ", k = " + std::to_string(run.k) + "\n";
  out += "Valid@k: share of problems with a valid model within the first k attempts. Latency in seconds per attempt.\n\n";
  out += render(primary);
  out += "\nPer-attempt validity (mean over the first k attempts):\n\n";
  out += render(secondary);
  bool any_error = false;
  for (const auto& s : run.cells) {
    if (s.error) {
      if (!any_error) out += "\nAborted cells (x):\n";
      any_error = true;
      out += "  " + s.model + " @ " + format_number(s.temperature) + ": " + *s.error + "\n";
    }
  }
  return out;
}

json eval_to_json(const EvalRun& run) {
  json cells = json::array();
  for (const auto& s : run.cells) {
    json c = {{"model", s.model}, {"temperature", s.temperature}, {"problems", s.problems}};
    json va = json::object();
    json mv = json::object();
    for (const auto& [k, v] : s.valid_at) va[std::to_string(k)] = v;
    for (const auto& [k, v] : s.mean_validity) mv[std::to_string(k)] = v;
    c["valid_at"] = va;
    c["mean_validity"] = mv;
    if (s.latency) {
      c["latency"] = {{"mean", s.latency->mean}, {"std", s.latency->std}, {"p50", s.latency->p50},
                      {"p75", s.latency->p75},   {"p90", s.latency->p90}, {"n", s.latency->n}};
    } else {
      c["latency"] = nullptr;
    }
    c["error"] = s.error ? json(*s.error) : json(nullptr);
    cells.push_back(std::move(c));
  }
  json records = json::array();
  for (const auto& r : run.records) {
    json attempts = json::array();
    for (const auto& a : r.attempts) attempts.push_back({{"valid", a.valid}, {"latency", a.latency}});
    records.push_back({{"problem", r.problem_id},
                       {"mode", r.mode},
                       {"model", r.model},
                       {"temperature", r.temperature},
                       {"attempts", attempts}});
  }
  return {{"mode", run.mode}, {"k", run.k}, {"report_ks", run.report_ks}, {"cells", cells}, {"records", records}};
}

}  // namespace orpipe
