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

#include "orpipe/report.hpp"

#include <sqlite3.h>
#include <yaml-cpp/yaml.h>

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>

#include "orpipe/json_io.hpp"

namespace orpipe {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kWrapper = "Database Schema";
constexpr std::string_view kTableKeys[] = {"name", "desc", "variable", "columns"};
constexpr std::string_view kColumnKeys[] = {"name", "type", "desc", "primary_key", "value"};

template <std::size_t N>
bool allowed(const std::string_view (&set)[N], std::string_view key) {
  for (auto k : set) {
    if (k == key) return true;
  }
  return false;
}

class SchemaParser {
 public:
  explicit SchemaParser(const ModelDocument& doc) : doc_(doc) {}

  std::vector<SchemaViolation> violations;

  void add(std::string path, ViolationKind kind, std::string message) {
    violations.push_back({std::move(path), kind, std::move(message)});
  }

  template <std::size_t N>
  void check_keys(const YAML::Node& map, const std::string& path, const std::string_view (&keys)[N],
                  std::initializer_list<const char*> required) {
    for (const auto& kv : map) {
      std::string key = kv.first.IsScalar() ? kv.first.Scalar() : "?";
      if (!allowed(keys, key)) add(path + "." + key, ViolationKind::kUnknownProperty, "unknown property '" + key + "'");
    }
    for (const char* r : required) {
      if (!map[r]) add(path + "." + r, ViolationKind::kMissingProperty, std::string("missing required property '") + r + "'");
    }
  }

  std::string text(const YAML::Node& map, const std::string& path, const char* key) {
    YAML::Node n = map[key];
    if (!n || n.IsNull()) return "";
    if (!n.IsScalar()) {
      add(path + "." + key, ViolationKind::kWrongType, "expected a scalar");
      return "";
    }
    return n.Scalar();
  }

  ReportSchema schema(const YAML::Node& tables) {
    ReportSchema out;
    if (!tables.IsSequence()) {
      add("tables", ViolationKind::kWrongType, "expected a list of tables");
      return out;
    }
    for (std::size_t t = 0; t < tables.size(); ++t) {
      out.tables.push_back(table(tables[t], "tables[" + std::to_string(t) + "]"));
    }
    return out;
  }

 private:
  TableDecl table(const YAML::Node& node, const std::string& path) {
    TableDecl d;
    if (!node.IsMap()) {
      add(path, ViolationKind::kWrongType, "expected a mapping");
      return d;
    }
    check_keys(node, path, kTableKeys, {"name", "variable", "columns"});
    d.name = text(node, path, "name");
    d.desc = text(node, path, "desc");
    d.variable = text(node, path, "variable");
    const VariableBatchDecl* batch = nullptr;
    if (node["variable"]) {
      batch = doc_.find_batch(d.variable);
      if (batch == nullptr) {
        add(path + ".variable", ViolationKind::kUnknownVariable, "'" + d.variable + "' is not a variable batch");
      }
    }
    YAML::Node cols = node["columns"];
    if (cols && !cols.IsSequence()) {
      add(path + ".columns", ViolationKind::kWrongType, "expected a list of columns");
    } else if (cols) {
      for (std::size_t c = 0; c < cols.size(); ++c) {
        d.columns.push_back(column(cols[c], path + ".columns[" + std::to_string(c) + "]", batch));
      }
    }
    bool has_key = false;
    for (const auto& c : d.columns) has_key |= c.primary_key;
    if (cols && cols.IsSequence() && !has_key) {
      add(path, ViolationKind::kMissingPrimaryKey, "table '" + d.name + "' has no primary-key column");
    }
    return d;
  }

  ColumnDecl column(const YAML::Node& node, const std::string& path, const VariableBatchDecl* batch) {
    ColumnDecl c;
    if (!node.IsMap()) {
      add(path, ViolationKind::kWrongType, "expected a mapping");
      return c;
    }
    check_keys(node, path, kColumnKeys, {"name", "type", "value"});
    c.name = text(node, path, "name");
    c.desc = text(node, path, "desc");
    if (node["type"]) {
      std::string type = text(node, path, "type");
      if (auto t = parse_scalar_type(type)) {
        c.type = *t;
      } else {
        add(path + ".type", ViolationKind::kBadEnumValue, "'" + type + "' is not one of str, int, integer, float, bool");
      }
    }
    if (YAML::Node pk = node["primary_key"]; pk && !pk.IsNull()) {
      try {
        c.primary_key = pk.as<bool>();
      } catch (const YAML::Exception&) {
        add(path + ".primary_key", ViolationKind::kWrongType, "expected true or false");
      }
    }
    c.binding = text(node, path, "value");
    if (batch != nullptr && node["value"]) {
      bool found = false;
      for (std::size_t i = 0; i < batch->key.size(); ++i) {
        if (batch->key[i].name == c.binding) {
          c.key_index = i;
          found = true;
        }
      }
      for (const auto& f : batch->value) found |= f.name == c.binding;
      if (!found) {
        add(path + ".value", ViolationKind::kUnknownBinding,
            "'" + c.binding + "' is neither a key nor a value field of '" + batch->name + "'");
      }
    }
    return c;
  }

  const ModelDocument& doc_;
};

std::string_view sql_type(ScalarType t) {
  switch (t) {
    case ScalarType::kStr: return "TEXT";
    case ScalarType::kInt: return "INTEGER";
    case ScalarType::kFloat: return "REAL";
    case ScalarType::kBool: return "INTEGER";
  }
  return "TEXT";
}

std::string quote_ident(const std::string& name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_cell(const Scalar& s) {
  std::string text = format_scalar(s);
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

Scalar convert_cell(const Scalar& raw, ScalarType type) {
  switch (type) {
    case ScalarType::kStr:
      if (const auto* s = std::get_if<std::string>(&raw)) return *s;
      return format_scalar(raw);
    case ScalarType::kInt:
      if (const auto* d = std::get_if<double>(&raw)) return std::round(*d) + 0.0;
      if (const auto* b = std::get_if<bool>(&raw)) return *b ? 1.0 : 0.0;
      return raw;
    case ScalarType::kFloat:
      if (const auto* b = std::get_if<bool>(&raw)) return *b ? 1.0 : 0.0;
      return raw;
    case ScalarType::kBool:
      if (const auto* d = std::get_if<double>(&raw)) return std::fabs(*d) > 0.5;
      return raw;
  }
  return raw;
}

// One writer per destination at a time.
std::mutex& destination_lock(const std::string& key) {
  static std::mutex registry_mu;
  static std::map<std::string, std::unique_ptr<std::mutex>> locks;
  std::lock_guard lock(registry_mu);
  auto& m = locks[key];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

struct Db {
  sqlite3* handle = nullptr;
  ~Db() {
    if (handle) sqlite3_close(handle);
  }
  void exec(const std::string& sql) {
    char* err = nullptr;
    if (sqlite3_exec(handle, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : "unknown error";
      sqlite3_free(err);
      throw Error("StoreUnavailable", msg + " in: " + sql);
    }
  }
};

struct Stmt {
  sqlite3_stmt* handle = nullptr;
  Stmt(sqlite3* db, const std::string& sql) {
    if (sqlite3_prepare_v2(db, sql.c_str(), -1, &handle, nullptr) != SQLITE_OK) {
      throw Error("StoreUnavailable", std::string(sqlite3_errmsg(db)) + " in: " + sql);
    }
  }
  ~Stmt() { sqlite3_finalize(handle); }
  void bind(int index, const Scalar& s, ScalarType type) {
    if (const auto* str = std::get_if<std::string>(&s)) {
      sqlite3_bind_text(handle, index, str->c_str(), -1, SQLITE_TRANSIENT);
    } else if (const auto* b = std::get_if<bool>(&s)) {
      sqlite3_bind_int64(handle, index, *b ? 1 : 0);
    } else {
      double d = std::get<double>(s);
      if (type == ScalarType::kInt || type == ScalarType::kBool) {
        sqlite3_bind_int64(handle, index, static_cast<sqlite3_int64>(std::llround(d)));
      } else {
        sqlite3_bind_double(handle, index, d);
      }
    }
  }
};

// Compares a stored cell with a new one using the column's affinity.
bool same_cell(sqlite3_stmt* stmt, int col, const Scalar& s, ScalarType type) {
  if (const auto* str = std::get_if<std::string>(&s)) {
    const unsigned char* t = sqlite3_column_text(stmt, col);
    return t != nullptr && *str == reinterpret_cast<const char*>(t);
  }
  double v = std::holds_alternative<bool>(s) ? (std::get<bool>(s) ? 1.0 : 0.0) : std::get<double>(s);
  if (type == ScalarType::kInt || type == ScalarType::kBool) v = std::round(v);
  return sqlite3_column_double(stmt, col) == v;
}

void persist_sqlite(const ReportSchema& schema, const std::vector<SolutionRow>& rows, const PersistOptions& options,
                    PersistSummary& summary) {
  const std::string& path = *options.db_path;
  std::lock_guard lock(destination_lock("db:" + fs::absolute(path).string()));
  if (fs::path parent = fs::path(path).parent_path(); !parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
  }
  Db db;
  if (sqlite3_open_v2(path.c_str(), &db.handle, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr) != SQLITE_OK) {
    throw Error("StoreUnavailable", "cannot open " + path + ": " +
                                        (db.handle ? sqlite3_errmsg(db.handle) : std::string("out of memory")));
  }
  sqlite3_busy_timeout(db.handle, 5000);
  db.exec("BEGIN IMMEDIATE");
  try {
    for (const auto& table : schema.tables) {
      {
        Stmt exists(db.handle, "SELECT 1 FROM sqlite_master WHERE type='table' AND name=?");
        sqlite3_bind_text(exists.handle, 1, table.name.c_str(), -1, SQLITE_TRANSIENT);
        if (sqlite3_step(exists.handle) != SQLITE_ROW) ++summary.tables_created;
      }
      std::string cols;
      std::string keys;
      std::string placeholders;
      std::string updates;
      std::string where;
      std::vector<std::size_t> key_cols;
      std::vector<std::size_t> other_cols;
      for (std::size_t c = 0; c < table.columns.size(); ++c) {
        const auto& col = table.columns[c];
        std::string q = quote_ident(col.name);
        cols += (c ? ", " : "") + q + " " + std::string(sql_type(col.type));
        placeholders += c ? ", ?" : "?";
        if (col.primary_key) {
          keys += (keys.empty() ? "" : ", ") + q;
          where += (where.empty() ? "" : " AND ") + q + " = ?";
          key_cols.push_back(c);
        } else {
          updates += (updates.empty() ? "" : ", ") + q + " = excluded." + q;
          other_cols.push_back(c);
        }
      }
      db.exec("CREATE TABLE IF NOT EXISTS " + quote_ident(table.name) + " (" + cols + ", PRIMARY KEY (" + keys + "))");

      std::string names;
      for (std::size_t c = 0; c < table.columns.size(); ++c) names += (c ? ", " : "") + quote_ident(table.columns[c].name);
      Stmt insert(db.handle, "INSERT INTO " + quote_ident(table.name) + " (" + names + ") VALUES (" + placeholders +
                                 ") ON CONFLICT (" + keys + ") DO " +
                                 (updates.empty() ? std::string("NOTHING") : "UPDATE SET " + updates));
      std::string select_cols;
      for (std::size_t i = 0; i < other_cols.size(); ++i) {
        select_cols += (i ? ", " : "") + quote_ident(table.columns[other_cols[i]].name);
      }
      std::unique_ptr<Stmt> lookup;
      if (options.strict && !other_cols.empty()) {
        lookup = std::make_unique<Stmt>(db.handle, "SELECT " + select_cols + " FROM " + quote_ident(table.name) +
                                                       " WHERE " + where);
      }
      for (const auto& row : rows) {
        if (row.table != table.name) continue;
        if (lookup) {
          sqlite3_reset(lookup->handle);
          for (std::size_t i = 0; i < key_cols.size(); ++i) {
            lookup->bind(static_cast<int>(i + 1), row.cells[key_cols[i]], table.columns[key_cols[i]].type);
          }
          if (sqlite3_step(lookup->handle) == SQLITE_ROW) {
            for (std::size_t i = 0; i < other_cols.size(); ++i) {
              std::size_t c = other_cols[i];
              if (!same_cell(lookup->handle, static_cast<int>(i), row.cells[c], table.columns[c].type)) {
                throw Error("PrimaryKeyConflict", "table '" + table.name + "': stored '" + table.columns[c].name +
                                                      "' differs for an existing key");
              }
            }
          }
        }
        sqlite3_reset(insert.handle);
        sqlite3_clear_bindings(insert.handle);
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
          insert.bind(static_cast<int>(c + 1), row.cells[c], table.columns[c].type);
        }
        if (sqlite3_step(insert.handle) != SQLITE_DONE) {
          throw Error("StoreUnavailable", sqlite3_errmsg(db.handle));
        }
        ++summary.rows_written;
      }
    }
    db.exec("COMMIT");
  } catch (...) {
    sqlite3_exec(db.handle, "ROLLBACK", nullptr, nullptr, nullptr);
    throw;
  }
}

void persist_csv(const ReportSchema& schema, const std::vector<SolutionRow>& rows, const PersistOptions& options,
                 PersistSummary& summary) {
  const fs::path dir(*options.csv_dir);
  std::lock_guard lock(destination_lock("csv:" + fs::absolute(dir).string()));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw Error("StoreUnavailable", "cannot create " + dir.string());
  for (const auto& table : schema.tables) {
    // Rows are keyed like the database so repeated rows collapse.
    std::map<std::vector<std::string>, const SolutionRow*> by_key;
    std::vector<std::vector<std::string>> order;
    for (const auto& row : rows) {
      if (row.table != table.name) continue;
      std::vector<std::string> key;
      for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (table.columns[c].primary_key) key.push_back(format_scalar(row.cells[c]));
      }
      if (by_key.emplace(key, &row).second) {
        order.push_back(key);
      } else {
        by_key[key] = &row;
      }
    }
    fs::path file = dir / csv_file_name(table.name);
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("StoreUnavailable", "cannot write " + file.string());
    for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << csv_cell(table.columns[c].name);
    out << "\n";
    for (const auto& key : order) {
      const SolutionRow& row = *by_key[key];
      for (std::size_t c = 0; c < row.cells.size(); ++c) out << (c ? "," : "") << csv_cell(row.cells[c]);
      out << "\n";
    }
    if (!out) throw Error("StoreUnavailable", "cannot write " + file.string());
    summary.csv_files.push_back(file.string());
  }
}

}  // namespace

ParsedReportSchema parse_report_schema(std::string_view text, const ModelDocument& doc) {
  ParsedReportSchema result;
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    result.violations.push_back({"", ViolationKind::kInvalidYaml, e.what()});
    return result;
  }
  SchemaParser parser(doc);
  YAML::Node tables;
  if (!root.IsMap()) {
    parser.add("", ViolationKind::kWrongType, "expected a mapping with a 'tables' list");
  } else {
    YAML::Node wrapper = root[std::string(kWrapper)];
    if (wrapper && wrapper.IsMap()) {
      for (const auto& kv : root) {
        if (kv.first.Scalar() != kWrapper) {
          parser.add(kv.first.Scalar(), ViolationKind::kUnknownProperty, "unknown property '" + kv.first.Scalar() + "'");
        }
      }
      root = wrapper;
    }
    for (const auto& kv : root) {
      std::string key = kv.first.IsScalar() ? kv.first.Scalar() : "?";
      if (key == "tables") continue;
      // A bare caption line loads as a key with a null value.
      if (key == kWrapper && kv.second.IsNull()) continue;
      parser.add(key, ViolationKind::kUnknownProperty, "unknown property '" + key + "'");
    }
    tables = root["tables"];
    if (!tables) parser.add("tables", ViolationKind::kMissingProperty, "missing required property 'tables'");
  }
  ReportSchema schema;
  if (tables) schema = parser.schema(tables);
  result.violations = std::move(parser.violations);
  if (result.violations.empty()) result.schema = std::move(schema);
  return result;
}

std::string serialize_report_schema(const ReportSchema& schema) {
  YAML::Emitter out;
  out << YAML::BeginMap << YAML::Key << "tables" << YAML::Value << YAML::BeginSeq;
  for (const auto& t : schema.tables) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << t.name;
    out << YAML::Key << "desc" << YAML::Value << t.desc;
    out << YAML::Key << "variable" << YAML::Value << t.variable;
    out << YAML::Key << "columns" << YAML::Value << YAML::BeginSeq;
    for (const auto& c : t.columns) {
      out << YAML::BeginMap;
      out << YAML::Key << "name" << YAML::Value << c.name;
      out << YAML::Key << "type" << YAML::Value << std::string(scalar_type_name(c.type));
      out << YAML::Key << "desc" << YAML::Value << c.desc;
      if (c.primary_key) out << YAML::Key << "primary_key" << YAML::Value << true;
      out << YAML::Key << "value" << YAML::Value << c.binding;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

ReportSchema fallback_report_schema(const ModelDocument& doc) {
  ReportSchema schema;
  for (const auto& b : doc.variable_batches) {
    TableDecl t;
    t.name = b.name + "_solution";
    t.desc = b.desc;
    t.variable = b.name;
    for (std::size_t i = 0; i < b.key.size(); ++i) {
      t.columns.push_back({b.key[i].name, b.key[i].type, "key field " + b.key[i].name, true, b.key[i].name, i});
    }
    if (!b.value.empty()) {
      const FieldDecl& v = b.value.front();
      t.columns.push_back({v.name, v.type, b.desc, false, v.name, std::nullopt});
    } else {
      ScalarType type = b.vtype == VarType::kContinuous ? ScalarType::kFloat : ScalarType::kInt;
      t.columns.push_back({"value", type, b.desc, false, "value", std::nullopt});
    }
    schema.tables.push_back(std::move(t));
  }
  return schema;
}

std::vector<SolutionRow> emit_rows(const ReportSchema& schema, const ConcreteModel& model, const SolveOutcome& outcome) {
  if (!outcome.has_assignment()) {
    throw Error("NoAssignment", std::string("outcome ") + std::string(status_name(outcome.status)) +
                                    " carries no assignment");
  }
  std::vector<SolutionRow> rows;
  for (const auto& table : schema.tables) {
    for (const auto& v : model.variables) {
      if (v.batch != table.variable) continue;
      SolutionRow row{table.name, {}};
      for (const auto& col : table.columns) {
        Scalar raw;
        if (col.key_index) {
          if (*col.key_index >= v.key.size()) {
            throw Error("KeyArityError", v.display() + " has no key component " + std::to_string(*col.key_index));
          }
          raw = v.key[*col.key_index];
        } else {
          raw = outcome.assignment.at(v.id);
        }
        row.cells.push_back(convert_cell(raw, col.type));
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string csv_file_name(const std::string& table) {
  std::string out;
  for (char c : table) {
    out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  }
  return (out.empty() ? "table" : out) + ".csv";
}

PersistSummary persist(const ReportSchema& schema, const std::vector<SolutionRow>& rows, const PersistOptions& options) {
  for (const auto& row : rows) {
    const TableDecl* t = nullptr;
    for (const auto& table : schema.tables) {
      if (table.name == row.table) t = &table;
    }
    if (t == nullptr || t->columns.size() != row.cells.size()) {
      throw Error("PreconditionFailed", "row for '" + row.table + "' does not match the schema");
    }
  }
  PersistSummary summary;
  if (options.db_path) persist_sqlite(schema, rows, options, summary);
  if (options.csv_dir) persist_csv(schema, rows, options, summary);
  return summary;
}

nlohmann::json rows_to_json(const ReportSchema& schema, const std::vector<SolutionRow>& rows) {
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& t : schema.tables) {
    nlohmann::json columns = nlohmann::json::array();
    for (const auto& c : t.columns) {
      columns.push_back({{"name", c.name},
                         {"type", scalar_type_name(c.type)},
                         {"primary_key", c.primary_key},
                         {"value", c.binding}});
    }
    nlohmann::json data = nlohmann::json::array();
    for (const auto& r : rows) {
      if (r.table != t.name) continue;
      nlohmann::json cells = nlohmann::json::array();
      for (const auto& c : r.cells) cells.push_back(scalar_to_json(c));
      data.push_back(cells);
    }
    tables.push_back({{"name", t.name}, {"variable", t.variable}, {"columns", columns}, {"rows", data}});
  }
  return {{"tables", tables}};
}

}  // namespace orpipe
