// Copyright 2026 The mpipu Authors.
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

// mpipu --config exp.json [--seed N] [--out PATH] [--workflow NAME] [--threads N]
//
// Exit codes: 0 ok, 2 config error, 3 numeric-domain error, 4 I/O error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mpipu/errors.hpp"
#include "mpipu/experiment.hpp"
#include "mpipu/tensor_file.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mpipu: multi-precision inner product unit models"};
  app.set_version_flag("--version", std::string(mpipu::kToolVersion));
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> workflow;
  std::optional<int> threads;
  app.add_option("--config", config_path, "experiment JSON file")->required();
  app.add_option("--seed", seed, "override the experiment seed");
  app.add_option("--out", out, "artifact path (CSV or JSON); stdout when omitted");
  app.add_option("--workflow", workflow, "trace-ipu | analyze-error | simulate-tile | sweep");
  app.add_option("--threads", threads, "worker threads");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    const std::filesystem::path cfg_file(config_path);
    const std::string text = mpipu::read_file(cfg_file);
    mpipu::Overrides ov;
    ov.seed = seed;
    ov.workflow = workflow;
    if (out) ov.output = *out;
    ov.threads = threads;
    const mpipu::ExperimentConfig cfg =
        mpipu::parse_experiment(text, ov, cfg_file.parent_path());
    const mpipu::RunOutput res = mpipu::run_experiment(cfg);
    if (cfg.output) {
      mpipu::write_file_atomic(*cfg.output, res.artifact);
      std::cout << res.console;
    } else if (cfg.workflow == mpipu::Workflow::kTraceIpu) {
      std::cout << res.console;
    } else {
      std::cout << res.artifact;
    }
    std::cout.flush();
    return 0;
  } catch (const mpipu::ConfigError& e) {
    std::cerr << "mpipu: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mpipu::NumericError& e) {
    std::cerr << "mpipu: numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const mpipu::IoError& e) {
    std::cerr << "mpipu: I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "mpipu: " << e.what() << "\n";
    return 1;
  }
}
