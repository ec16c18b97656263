/*
 * Copyright 2026 The freqdyn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// freqdyn <subcommand> <config> [--override section.key=value ...]
//
// Exit status: 0 when every verdict passed, 1 when any failed, 2 on bad
// configuration or arguments.

#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "freqdyn/freqdyn.hpp"

namespace {

using Command = std::function<freqdyn::CommandResult(const freqdyn::Config&)>;

const std::map<std::string, std::pair<Command, std::string>>& commands() {
  static const std::map<std::string, std::pair<Command, std::string>> table = {
      {"sigma", {freqdyn::cmd_sigma, "infimum sigma and constant C of the slit-plane example"}},
      {"example1", {freqdyn::cmd_example1, "slit-plane root shifts: runaway, disc inequality, pipeline"}},
      {"example2", {freqdyn::cmd_example2, "conformal conjugation onto the unit disc"}},
      {"example3", {freqdyn::cmd_example3, "parabolic disc automorphisms via the Cayley map"}},
      {"example4", {freqdyn::cmd_example4, "similarity and translation criteria"}},
      {"example5", {freqdyn::cmd_example5, "iterate convergence of a parabolic automorphism"}},
      {"build-fhc", {freqdyn::cmd_build_fhc, "fit a candidate (existence, spaceable or dense)"}},
      {"scan", {freqdyn::cmd_scan, "orbit scan of a stored candidate"}},
      {"density", {freqdyn::cmd_density, "prefix-density report of an index set"}},
      {"split", {freqdyn::cmd_split, "dyadic split of an index set"}},
      {"sepfamily", {freqdyn::cmd_sepfamily, "separated family and its verifier"}},
      {"runaway", {freqdyn::cmd_runaway, "strong runaway check"}},
  };
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"freqdyn: frequent hypercyclicity laboratory"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  for (const auto& [name, entry] : commands()) {
    auto* sub = app.add_subcommand(name, entry.second);
    sub->add_option("config", config_path, "experiment config (INI)")->required()->check(CLI::ExistingFile);
    sub->add_option("--override", overrides, "section.key=value, repeatable");
  }
  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    freqdyn::Config cfg = freqdyn::Config::from_file(config_path);
    for (const auto& o : overrides) cfg.apply_override(o);
    const freqdyn::CommandResult r = commands().at(name).first(cfg);
    for (const auto& line : r.summary) std::cout << line << '\n';
    std::cout << "verdict=" << (r.pass ? "PASS" : "FAIL") << '\n';
    return r.pass ? 0 : 1;
  } catch (const freqdyn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
