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

#include "cli.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "econet/tensor.h"

namespace econet::cli {

using json = nlohmann::json;

Run::Run(const Globals &g, const CLI::App &sub) : seed_(g.seed), manifest_path_(g.manifest) {
  manifest_.command = sub.get_name();
  manifest_.seed = g.seed;
  json cfg = json::object();
  for (const CLI::Option *opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    if (opt->count() > 0) {
      const auto &r = opt->results();
      cfg[name] = r.size() == 1 ? json(r[0]) : json(r);
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  cfg["seed"] = g.seed;
  manifest_.config = cfg;
}

const std::string &Run::input(const std::string &path) {
  manifest_.add_input(path);
  return path;
}

const std::string &Run::output(const std::string &path) {
  manifest_.add_output(path);
  if (first_output_.empty()) first_output_ = path;
  return path;
}

void Run::finish() {
  std::string path = manifest_path_;
  if (path.empty() && !first_output_.empty()) path = first_output_ + ".manifest.json";
  if (!path.empty()) manifest_.write(path);
}

std::vector<std::string> read_lines(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(line);
  }
  return out;
}

void write_text(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

json read_json(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    throw ParseError(0, path + ": " + e.what());
  }
}

void write_json(const std::string &path, const json &j) { write_text(path, j.dump(1) + "\n"); }

std::vector<json> read_jsonl(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<json> out;
  size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception &e) {
      throw ParseError(lineno, path + ": " + e.what());
    }
  }
  return out;
}

void write_jsonl(const std::string &path, const std::vector<json> &rows) {
  std::ostringstream ss;
  for (const auto &r : rows) ss << r.dump() << '\n';
  write_text(path, ss.str());
}

std::map<std::string, int> read_phrase_labels(const std::string &path) {
  std::map<std::string, int> out;
  for (const auto &c : read_labeled_candidates(path)) out[join_tokens(c.tokens, 0, c.tokens.size())] = c.label;
  return out;
}

std::vector<std::string> split_list(const std::string &csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ConceptStore load_store(Run &run, const std::string &path) {
  return ConceptStore::import_jsonl(run.input(path));
}

void save_store(Run &run, const ConceptStore &store, const std::string &path) {
  store.export_jsonl(path);
  run.output(path);
}

}  // namespace econet::cli
