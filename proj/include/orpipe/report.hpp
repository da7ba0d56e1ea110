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

// Solution reports: a YAML table schema over variable batches, rows derived
// from a solve outcome, and persistence to SQLite and CSV.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "orpipe/dsl_schema.hpp"
#include "orpipe/model.hpp"
#include "orpipe/solver.hpp"

namespace orpipe {

struct ColumnDecl {
  std::string name;
  ScalarType type = ScalarType::kStr;
  std::string desc;
  bool primary_key = false;
  std::string binding;  // key or value field of the batch

  // Resolved against the batch: the key position, or none for a value field.
  std::optional<std::size_t> key_index;
};

struct TableDecl {
  std::string name;
  std::string desc;
  std::string variable;
  std::vector<ColumnDecl> columns;
};

struct ReportSchema {
  std::vector<TableDecl> tables;
};

struct ParsedReportSchema {
  std::optional<ReportSchema> schema;
  std::vector<SchemaViolation> violations;
};

// Accepts the table list at the top level, under a "Database Schema" key, or
// next to a bare "Database Schema:" caption line. Bindings are resolved
// against `doc`.
ParsedReportSchema parse_report_schema(std::string_view text, const ModelDocument& doc);

std::string serialize_report_schema(const ReportSchema& schema);

// One table per batch: every key field as a primary-key column plus one
// column for the solved value.
ReportSchema fallback_report_schema(const ModelDocument& doc);

struct SolutionRow {
  std::string table;
  std::vector<Scalar> cells;
};

// Throws Error("NoAssignment") when the outcome has no assignment.
std::vector<SolutionRow> emit_rows(const ReportSchema& schema, const ConcreteModel& model,
                                   const SolveOutcome& outcome);

struct PersistOptions {
  std::optional<std::string> db_path;
  std::optional<std::string> csv_dir;
  // Reject an upsert that would change a non-key cell of an existing row.
  bool strict = false;
};

struct PersistSummary {
  std::size_t tables_created = 0;
  std::size_t rows_written = 0;
  std::vector<std::string> csv_files;
};

// Upserts by primary key. Throws Error("StoreUnavailable") and, under strict
// mode, Error("PrimaryKeyConflict").
PersistSummary persist(const ReportSchema& schema, const std::vector<SolutionRow>& rows,
                       const PersistOptions& options);

std::string csv_file_name(const std::string& table);

// {"tables": [{"name", "variable", "columns": [..], "rows": [[..], ..]}]}
nlohmann::json rows_to_json(const ReportSchema& schema, const std::vector<SolutionRow>& rows);

}  // namespace orpipe
