// Copyright 2026 The Econet Authors.
//
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

// Shared plumbing for the econet subcommands.

#ifndef ECONET_TOOLS_CLI_H_
#define ECONET_TOOLS_CLI_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "econet/pipeline.h"
#include "econet/store.h"
#include "econet/tagger.h"
#include "json.hpp"

namespace econet::cli {

struct Globals {
  uint64_t seed = 1;
  std::string manifest;
};

// Per-invocation bookkeeping: inputs and outputs land in the manifest.
class Run {
 public:
  Run(const Globals &g, const CLI::App &sub);
  uint64_t seed() const { return seed_; }
  const std::string &input(const std::string &path);
  const std::string &output(const std::string &path);
  // Writes the manifest next to the first output, or to --manifest.
  void finish();

 private:
  uint64_t seed_;
  std::string manifest_path_;
  Manifest manifest_;
  std::string first_output_;
};

std::vector<std::string> read_lines(const std::string &path);
void write_text(const std::string &path, const std::string &text);
nlohmann::json read_json(const std::string &path);
void write_json(const std::string &path, const nlohmann::json &j);
std::vector<nlohmann::json> read_jsonl(const std::string &path);
void write_jsonl(const std::string &path, const std::vector<nlohmann::json> &rows);
// phrase<TAB>0|1 map for simulated oracles.
std::map<std::string, int> read_phrase_labels(const std::string &path);
std::vector<std::string> split_list(const std::string &csv);

ConceptStore load_store(Run &run, const std::string &path);
void save_store(Run &run, const ConceptStore &store, const std::string &path);

std::vector<LabeledSentence> read_labeled_sentences(Run &run, const std::string &tokens, const std::string &tags);

void add_data_commands(CLI::App &app, Globals &g);
void add_model_commands(CLI::App &app, Globals &g);

}  // namespace econet::cli

#endif  // ECONET_TOOLS_CLI_H_
