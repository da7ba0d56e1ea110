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


// Session-oriented HTTP facade over the pipeline. `Service::handle` is the
// whole API and can be driven without a socket; `serve` binds it to httplib.
#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orpipe/dsl_schema.hpp"
#include "orpipe/llm.hpp"
#include "orpipe/model.hpp"
#include "orpipe/report.hpp"
#include "orpipe/solver.hpp"

namespace httplib {
class Server;
}

namespace orpipe {

struct ServiceConfig {
  LlmConfig llm;
  std::string create_shots_dir;  // empty: zero-shot
  std::string edit_shots_dir;
  std::optional<std::string> session_dir;  // snapshot each session here
  PersistOptions report_persist;           // applied on every GET report
};

struct HistoryEntry {
  ModelDocument document;
  std::string query;
  std::string yaml;  // accepted text as generated, after autocorrection
};

struct SolvedVersion {
  std::size_t version = 0;  // 1-based history index
  ConcreteModel model;
  SolveOutcome outcome;
};

struct Session {
  std::string id;
  std::vector<HistoryEntry> history;  // append-only
  std::optional<DataSet> data;
  MissingPairPolicy missing_pair = MissingPairPolicy::kError;
  std::optional<SolvedVersion> last;
  std::optional<std::string> report_schema;  // YAML text
  std::string created;
  std::string updated;

  const ModelDocument* current() const { return history.empty() ? nullptr : &history.back().document; }
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

class Service {
 public:
  // Takes ownership of the completion client; loads snapshots when a session
  // directory is configured.
  Service(ServiceConfig config, std::unique_ptr<CompletionClient> client);

  ApiResponse handle(const std::string& method, const std::string& path, const std::string& body,
                     const std::map<std::string, std::string>& params = {});

  std::size_t session_count() const;

 private:
  struct Slot {
    std::shared_mutex mu;
    Session session;
  };

  std::shared_ptr<Slot> find(const std::string& id) const;
  void snapshot(const Session& s) const;
  void load_snapshots();

  ApiResponse create_session();
  ApiResponse get_session(Slot& slot);
  ApiResponse get_history(Slot& slot);
  ApiResponse generate_version(Slot& slot, const std::string& body, bool edit);
  ApiResponse put_data(Slot& slot, const std::string& body, const std::map<std::string, std::string>& params);
  ApiResponse solve(Slot& slot, const std::string& body);
  ApiResponse get_report(Slot& slot);
  ApiResponse put_report_schema(Slot& slot, const std::string& body);

  ServiceConfig config_;
  std::unique_ptr<CompletionClient> client_;
  std::vector<Shot> create_shots_;
  std::vector<Shot> edit_shots_;
  mutable std::shared_mutex store_mu_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
};

// Routes every request under /sessions to the service. CORS is open so a
// browser console on another origin can call it.
void mount(httplib::Server& server, Service& service);

}  // namespace orpipe
