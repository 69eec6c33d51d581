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

// econet: one binary, one subcommand per pipeline stage.
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage error, 3 bad input data.
// Failures print {"error": {"type", "message"}} on stderr.

#include <iostream>

#include "cli.h"
#include "econet/active_learning.h"
#include "econet/tensor.h"

namespace {

using json = nlohmann::json;

// {"seed": 3, "train-tagger": {"epochs": 4}}: nested objects address
// subcommands, flags on the command line win.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App *, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream &in) const override {
    json j;
    try {
      in >> j;
    } catch (const json::exception &e) {
      throw CLI::ConversionError(std::string("config is not JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::vector<CLI::ConfigItem> out;
    flatten(j, {}, out);
    return out;
  }

 private:
  static void flatten(const json &j, const std::vector<std::string> &parents, std::vector<CLI::ConfigItem> &out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_object()) {
        auto p = parents;
        p.push_back(it.key());
        flatten(*it, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      auto scalar = [](const json &v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
      if (it->is_array()) {
        for (const auto &v : *it) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(*it));
      }
      out.push_back(std::move(item));
    }
  }
};

int fail(const std::string &type, const std::string &message, int code) {
  std::cerr << json{{"error", {{"type", type}, {"message", message}}}}.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char **argv) {
  using namespace econet;
  CLI::App app{"econet: e-commerce concept net toolkit"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config; nested objects per subcommand");

  cli::Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice");
  app.add_option("--manifest", g.manifest, "Manifest path (default: <first output>.manifest.json)");

  cli::add_data_commands(app, g);
  cli::add_model_commands(app, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    return fail("usage", e.what(), 2);
  } catch (const ParseError &e) {
    return fail("parse", e.what(), 3);
  } catch (const StoreError &e) {
    return fail("store", e.what(), 3);
  } catch (const ConfigError &e) {
    return fail("config", e.what(), 2);
  } catch (const OracleError &e) {
    return fail("oracle", e.what(), 1);
  } catch (const ContractError &e) {
    return fail("contract", e.what(), 1);
  } catch (const std::exception &e) {
    return fail("runtime", e.what(), 1);
  }
  return 0;
}
