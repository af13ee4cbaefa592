/*
 * Copyright 2026 The hrm Authors.
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
// Command-line driver: simulate, compare, sweep, train.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hrm/config.hpp"
#include "hrm/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;

std::vector<hrm::Override> parse_overrides(const std::vector<std::string>& sets) {
  std::vector<hrm::Override> out;
  for (const auto& s : sets) out.push_back(hrm::parse_override(s));
  return out;
}

std::vector<double> parse_w_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw hrm::ConfigError("--w: '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw hrm::ConfigError("--w needs at least one value");
  return out;
}

void write_to(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw hrm::Error("cannot write " + path.string());
  body(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical cluster allocation and power management simulator"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  std::vector<std::string> sets, config_paths;
  std::string w_text = "0.1,0.3,0.5,0.7,0.9";

  auto* simulate = app.add_subcommand("simulate", "Train if needed, then evaluate one configuration");
  simulate->add_option("--config", config_path, "Config file")->required();
  simulate->add_option("--set", sets, "Override key=value (repeatable)");
  simulate->add_option("--out", out_path, "Output directory (default: output.dir)");

  auto* compare = app.add_subcommand("compare", "Evaluate several configurations side by side");
  compare->add_option("--configs", config_paths, "Config files, one per arm")->required();
  compare->add_option("--set", sets, "Override applied to every arm");
  compare->add_option("--out", out_path, "Also write comparison.csv here");

  auto* sweep = app.add_subcommand("sweep", "Sweep the local power weight w");
  sweep->add_option("--config", config_path, "Base config file")->required();
  sweep->add_option("--w", w_text, "Comma-separated w values");
  sweep->add_option("--set", sets, "Override key=value (repeatable)");
  sweep->add_option("--out", out_path, "Output directory (default: output.dir)");

  auto* train = app.add_subcommand("train", "Train the learned tiers and write a checkpoint");
  train->add_option("--config", config_path, "Config file")->required();
  train->add_option("--set", sets, "Override key=value (repeatable)");
  train->add_option("--out", out_path, "Checkpoint path")->required();

  auto* keys = app.add_subcommand("defaults", "Print every config key with its default value");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto overrides = parse_overrides(sets);
    if (*simulate) {
      const auto cfg = hrm::load_config(config_path, overrides);
      const auto result = hrm::run_experiment(cfg);
      const std::string dir = out_path.empty() ? cfg.output_dir : out_path;
      hrm::write_experiment(result, cfg, dir);
      hrm::write_summary_csv(std::cout, result);
    } else if (*compare) {
      std::vector<hrm::ExperimentConfig> cfgs;
      for (const auto& p : config_paths) cfgs.push_back(hrm::load_config(p, overrides));
      const auto comparison = hrm::compare_policies(cfgs);
      hrm::write_comparison(std::cout, comparison);
      if (!out_path.empty()) {
        std::filesystem::create_directories(out_path);
        write_to(std::filesystem::path(out_path) / "comparison.csv",
                 [&](std::ostream& o) { hrm::write_comparison(o, comparison); });
      }
    } else if (*sweep) {
      const auto cfg = hrm::load_config(config_path, overrides);
      const auto result = hrm::sweep_tradeoff(cfg, parse_w_list(w_text));
      const std::filesystem::path dir = out_path.empty() ? cfg.output_dir : out_path;
      std::filesystem::create_directories(dir);
      write_to(dir / "frontier.csv", [&](std::ostream& o) { hrm::write_frontier_csv(o, result.points); });
      write_to(dir / "fixed_timeouts.csv", [&](std::ostream& o) { hrm::write_fixed_arms_csv(o, result.fixed); });
      hrm::write_frontier_csv(std::cout, result.points);
      hrm::write_fixed_arms_csv(std::cout, result.fixed);
      std::cout << "spearman_power " << hrm::format_double(result.rho_power) << "\n"
                << "spearman_latency " << hrm::format_double(result.rho_latency) << "\n"
                << "dominates_fixed " << (result.dominates_fixed ? "yes" : "no") << "\n";
    } else if (*train) {
      const auto cfg = hrm::load_config(config_path, overrides);
      const auto traces = hrm::build_traces(cfg);
      const auto models = hrm::train_models(cfg, traces);
      hrm::save_models(models, cfg, out_path);
      std::cout << "wrote " << out_path << "\n";
    } else if (*keys) {
      hrm::write_config(std::cout, hrm::ExperimentConfig{});
    }
  } catch (const hrm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const hrm::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const hrm::InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
