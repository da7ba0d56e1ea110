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


// orpipe: headless entry points for the model pipeline and the evaluation
// harness, plus the HTTP service.

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <filesystem>
#include <iostream>
#include <memory>

#include "orpipe/common.hpp"
#include "orpipe/dsl_schema.hpp"
#include "orpipe/eval.hpp"
#include "orpipe/json_io.hpp"
#include "orpipe/llm.hpp"
#include "orpipe/model.hpp"
#include "orpipe/report.hpp"
#include "orpipe/service.hpp"
#include "orpipe/solver.hpp"
#include "orpipe/validator.hpp"

#ifndef ORPIPE_SOURCE_DIR
#define ORPIPE_SOURCE_DIR "."
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace orpipe;

namespace {

const std::string kSource = ORPIPE_SOURCE_DIR;

struct LlmFlags {
  std::string backend = "fixture";
  std::string fixture_mode = "auto";
  std::string fixture_dir = kSource + "/fixtures/llm/corpus";
  std::string model = "fixture";
  double temperature = 0.0;
  std::size_t k = 3;
  std::optional<double> fixed_latency;
  std::uint64_t seed = 0;
  std::string shots_root = kSource + "/fixtures/shots";
  bool no_shots = false;

  void add(CLI::App* app) {
    app->add_option("--llm-backend", backend, "remote or fixture")->check(CLI::IsMember({"remote", "fixture"}));
    app->add_option("--fixture-mode", fixture_mode)->check(CLI::IsMember({"auto", "scripted", "corpus", "bernoulli"}));
    app->add_option("--fixture-dir", fixture_dir, "fixture responses");
    app->add_option("--llm-model", model, "model name sent to the backend");
    app->add_option("--temperature", temperature);
    app->add_option("--k", k, "maximum generation attempts")->check(CLI::PositiveNumber);
    app->add_option("--fixed-latency", fixed_latency, "seconds charged per attempt");
    app->add_option("--seed", seed);
    app->add_option("--shots", shots_root, "directory with create/ and edit/ shot banks");
    app->add_flag("--no-shots", no_shots);
  }

  LlmConfig config() const {
    LlmConfig c;
    c.backend = backend;
    c.fixture_mode = fixture_mode;
    c.fixture_dir = fixture_dir;
    c.model = model;
    c.temperature = temperature;
    c.max_attempts = k;
    c.fixed_latency = fixed_latency;
    c.seed = seed;
    return c;
  }

  std::string shots_dir(const std::string& mode) const {
    if (no_shots) return "";
    fs::path p = fs::path(shots_root) / mode;
    return fs::is_directory(p) ? p.string() : "";
  }

  std::vector<Shot> shots(const std::string& mode) const {
    std::string dir = shots_dir(mode);
    return dir.empty() ? std::vector<Shot>{} : load_shots(dir);
  }
};

std::string query_text(const std::string& query, const std::string& query_file) {
  if (!query.empty() && !query_file.empty()) throw Error("BadRequest", "give --query or --query-file, not both");
  std::string q = query_file.empty() ? query : read_file(query_file);
  if (trim(q).empty()) throw Error("BadRequest", "a query is required (--query or --query-file)");
  return q;
}

ModelDocument load_document(const std::string& path) {
  ValidationReport report = validate_pipeline(read_file(path));
  if (!report.document) {
    std::cerr << report_to_json(report).dump(2) << "\n";
    throw Error("InvalidModel", path + " is not a valid model");
  }
  return *report.document;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file(out, text);
  }
}

int finish_generation(const GenerationResult& result, const std::string& out, const std::string& report_out,
                      const std::optional<ModelDocument>& original) {
  json attempts = json::array();
  for (const auto& a : result.attempts) {
    json j = {{"valid", a.valid()}, {"latency_seconds", a.latency()}, {"report", report_to_json(a.report)}};
    if (a.runtime_error) j["runtime_error"] = *a.runtime_error;
    attempts.push_back(std::move(j));
  }
  json summary = {{"attempts", attempts}};
  if (result.final_document && original) summary["diff"] = diff_to_json(diff_documents(*original, *result.final_document));
  if (!report_out.empty()) write_file(report_out, summary.dump(2) + "\n");
  if (!result.final_document) {
    std::cerr << summary.dump(2) << "\n";
    std::cerr << "error: GenerationFailed: no valid model after " << result.attempts.size() << " attempts\n";
    return 1;
  }
  std::string yaml = result.attempts.back().report.corrected_text;
  if (!yaml.empty() && yaml.back() != '\n') yaml += '\n';
  emit(out, yaml);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orpipe: natural-language to optimization model pipeline"};
  app.require_subcommand(1);
  int code = 0;

  // create ------------------------------------------------------------------
  LlmFlags create_llm;
  std::string create_query, create_query_file, create_out, create_report;
  auto* create = app.add_subcommand("create", "generate a model from a problem statement");
  create_llm.add(create);
  create->add_option("--query", create_query);
  create->add_option("--query-file", create_query_file)->check(CLI::ExistingFile);
  create->add_option("--out", create_out, "model YAML (default stdout)");
  create->add_option("--report-json", create_report, "per-attempt validation reports");
  create->callback([&] {
    LlmConfig config = create_llm.config();
    auto client = make_client(config);
    GenerateRequest req{query_text(create_query, create_query_file), std::nullopt, create_llm.shots("create"), "",
                        std::nullopt};
    code = finish_generation(generate(req, config, *client), create_out, create_report, std::nullopt);
  });

  // edit --------------------------------------------------------------------
  LlmFlags edit_llm;
  std::string edit_model, edit_query, edit_query_file, edit_out, edit_report;
  auto* edit = app.add_subcommand("edit", "apply a what-if query to an existing model");
  edit_llm.add(edit);
  edit->add_option("--model", edit_model, "original model YAML")->required()->check(CLI::ExistingFile);
  edit->add_option("--query", edit_query);
  edit->add_option("--query-file", edit_query_file)->check(CLI::ExistingFile);
  edit->add_option("--out", edit_out, "updated model YAML (default stdout)");
  edit->add_option("--report-json", edit_report, "per-attempt reports and the structural diff");
  edit->callback([&] {
    LlmConfig config = edit_llm.config();
    auto client = make_client(config);
    ModelDocument original = load_document(edit_model);
    GenerateRequest req{query_text(edit_query, edit_query_file), original, edit_llm.shots("edit"), "", std::nullopt};
    code = finish_generation(generate(req, config, *client), edit_out, edit_report, original);
  });

  // solve -------------------------------------------------------------------
  std::string solve_model, solve_data, solve_dump, solve_out, solve_missing = "error";
  SolverLimits limits;
  auto* solve_cmd = app.add_subcommand("solve", "bind data and solve a model");
  solve_cmd->add_option("--model", solve_model)->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--data", solve_data, "dataset JSON")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--dump-lp", solve_dump, "write the standard form here");
  solve_cmd->add_option("--missing-pair", solve_missing)->check(CLI::IsMember({"error", "zero"}));
  solve_cmd->add_option("--max-nodes", limits.max_nodes);
  solve_cmd->add_option("--max-iterations", limits.max_iterations);
  solve_cmd->add_option("--time-limit", limits.time_limit_seconds);
  solve_cmd->add_option("--out", solve_out, "outcome JSON (default stdout)");

  // report ------------------------------------------------------------------
  std::string report_model, report_data, report_schema, report_db, report_dir, report_out;
  std::string report_missing = "error";
  bool report_strict = false;
  auto* report_cmd = app.add_subcommand("report", "solve and write the solution tables");
  report_cmd->add_option("--model", report_model)->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--data", report_data)->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--schema", report_schema, "report schema YAML (default: one table per batch)")
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--missing-pair", report_missing)->check(CLI::IsMember({"error", "zero"}));
  report_cmd->add_option("--report-db", report_db, "SQLite database file");
  report_cmd->add_option("--report-dir", report_dir, "directory for CSV files");
  report_cmd->add_flag("--strict", report_strict, "refuse to overwrite differing rows");
  report_cmd->add_option("--out", report_out, "tables JSON (default stdout)");

  auto solve_model_file = [](const std::string& model_path, const std::string& data_path, const std::string& missing,
                             const SolverLimits& lim, ModelDocument& doc, ConcreteModel& model) {
    doc = load_document(model_path);
    DataSet data = parse_dataset_json(read_file(data_path));
    BindOptions opts;
    opts.missing_pair = missing == "zero" ? MissingPairPolicy::kZero : MissingPairPolicy::kError;
    AbstractModel abstract = build_abstract(doc);
    auto errors = check_contract(abstract, data);
    for (const auto& e : errors) {
      if (e.fatal()) {
        std::cerr << binding_errors_to_json(errors).dump(2) << "\n";
        break;
      }
    }
    model = bind_data(abstract, data, opts);
    return orpipe::solve(model, lim);
  };

  solve_cmd->callback([&] {
    limits.validate();
    ModelDocument doc;
    ConcreteModel model;
    SolveOutcome outcome = solve_model_file(solve_model, solve_data, solve_missing, limits, doc, model);
    if (!solve_dump.empty()) write_file(solve_dump, dump_lp(to_standard_form(model)));
    emit(solve_out, outcome_to_json(outcome, model).dump(2) + "\n");
  });

  report_cmd->callback([&] {
    ModelDocument doc;
    ConcreteModel model;
    SolveOutcome outcome = solve_model_file(report_model, report_data, report_missing, SolverLimits{}, doc, model);
    ReportSchema schema = fallback_report_schema(doc);
    if (!report_schema.empty()) {
      ParsedReportSchema parsed = parse_report_schema(read_file(report_schema), doc);
      if (!parsed.schema) {
        std::cerr << violations_to_json(parsed.violations).dump(2) << "\n";
        throw Error("InvalidReportSchema", report_schema + " does not fit the model");
      }
      schema = *parsed.schema;
    }
    std::vector<SolutionRow> rows = emit_rows(schema, model, outcome);
    PersistOptions opts;
    if (!report_db.empty()) opts.db_path = report_db;
    if (!report_dir.empty()) opts.csv_dir = report_dir;
    opts.strict = report_strict;
    json out = rows_to_json(schema, rows);
    if (opts.db_path || opts.csv_dir) {
      PersistSummary p = persist(schema, rows, opts);
      out["persisted"] = {{"tables_created", p.tables_created}, {"rows_written", p.rows_written}, {"csv_files", p.csv_files}};
    }
    emit(report_out, out.dump(2) + "\n");
  });

  // validate ----------------------------------------------------------------
  std::string validate_file, validate_out;
  auto* validate = app.add_subcommand("validate", "run the validation pipeline on a model file");
  validate->add_option("file", validate_file)->required()->check(CLI::ExistingFile);
  validate->add_option("--out", validate_out, "write the corrected YAML here");
  validate->callback([&] {
    ValidationReport report = validate_pipeline(read_file(validate_file));
    std::cout << report_to_json(report).dump(2) << "\n";
    if (!validate_out.empty() && report.document) write_file(validate_out, serialize_model_yaml(*report.document));
    code = report.verdict == Verdict::kIrreparable ? 1 : 0;
  });

  // prompt ------------------------------------------------------------------
  LlmFlags prompt_llm;
  std::string prompt_mode = "create", prompt_query, prompt_query_file, prompt_original, prompt_out;
  auto* prompt = app.add_subcommand("prompt", "print the prompt text sent to the backend");
  prompt_llm.add(prompt);
  prompt->add_option("--mode", prompt_mode)->check(CLI::IsMember({"create", "edit"}));
  prompt->add_option("--query", prompt_query);
  prompt->add_option("--query-file", prompt_query_file)->check(CLI::ExistingFile);
  prompt->add_option("--original", prompt_original, "original model for edit mode")->check(CLI::ExistingFile);
  prompt->add_option("--out", prompt_out, "write the exact prompt text here");
  prompt->callback([&] {
    std::string q = query_text(prompt_query, prompt_query_file);
    Prompt p;
    if (prompt_mode == "edit") {
      if (prompt_original.empty()) throw Error("BadRequest", "edit mode needs --original");
      p = build_edit_prompt(q, load_document(prompt_original), prompt_llm.shots("edit"));
    } else {
      p = build_creation_prompt(q, prompt_llm.shots("create"));
    }
    if (prompt_out.empty()) {
      std::cout << p.text() << "\n";
    } else {
      write_file(prompt_out, p.text());
    }
  });

  // eval --------------------------------------------------------------------
  LlmFlags eval_llm;
  EvalOptions eval_opts;
  std::string eval_out_dir;
  auto* eval = app.add_subcommand("eval", "Valid@k and latency over a problem corpus");
  eval_llm.add(eval);
  eval->add_option("--corpus", eval_opts.corpus_dir)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--models", eval_opts.models, "model names, one row group each")->delimiter(',');
  eval->add_option("--temperatures", eval_opts.temperatures)->delimiter(',');
  eval->add_option("--mode", eval_opts.mode)->check(CLI::IsMember({"create", "edit"}));
  eval->add_option("--parallel", eval_opts.parallel)->check(CLI::PositiveNumber);
  eval->add_option("--out-dir", eval_out_dir, "write eval.json and eval.txt here");
  eval->callback([&] {
    eval_opts.llm = eval_llm.config();
    eval_opts.k = eval_llm.k;
    eval_opts.seed = eval_llm.seed;
    eval_opts.shots_dir = eval_llm.shots_dir(eval_opts.mode);
    EvalRun run = run_eval(eval_opts);
    std::string table = format_eval_table(run);
    std::cout << table;
    if (!eval_out_dir.empty()) {
      fs::create_directories(eval_out_dir);
      write_file((fs::path(eval_out_dir) / "eval.json").string(), eval_to_json(run).dump(2) + "\n");
      write_file((fs::path(eval_out_dir) / "eval.txt").string(), table);
    }
  });
  // Eval reports up to Valid@5, so it draws five attempts by default.
  eval_llm.k = 5;

  // serve -------------------------------------------------------------------
  LlmFlags serve_llm;
  std::string host = "127.0.0.1", session_dir, serve_db, serve_dir;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "run the session HTTP service");
  serve_llm.add(serve);
  serve->add_option("--host", host);
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve->add_option("--session-dir", session_dir, "snapshot sessions here");
  serve->add_option("--report-db", serve_db);
  serve->add_option("--report-dir", serve_dir);
  serve->callback([&] {
    ServiceConfig cfg;
    cfg.llm = serve_llm.config();
    cfg.create_shots_dir = serve_llm.shots_dir("create");
    cfg.edit_shots_dir = serve_llm.shots_dir("edit");
    if (!session_dir.empty()) cfg.session_dir = session_dir;
    if (!serve_db.empty()) cfg.report_persist.db_path = serve_db;
    if (!serve_dir.empty()) cfg.report_persist.csv_dir = serve_dir;
    Service service(cfg, make_client(cfg.llm));
    httplib::Server server;
    mount(server, service);
    int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error("BackendUnavailable", "cannot bind " + host + ":" + std::to_string(port));
    std::cerr << "listening on http://" << host << ":" << bound << "\n";
    server.listen_after_bind();
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 2;
  }
  return code;
}
