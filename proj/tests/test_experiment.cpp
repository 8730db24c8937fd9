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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "mpipu/errors.hpp"
#include "mpipu/experiment.hpp"
#include "mpipu/tensor_file.hpp"

namespace mpipu {
namespace {

namespace fs = std::filesystem;

const fs::path kGolden = MPIPU_GOLDEN_DIR;

fs::path scratch_dir() {
  const fs::path p = fs::temp_directory_path() / ("mpipu_test_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MPIPU_CLI) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

TEST(TensorFile, RoundTrip) {
  Tensor t;
  t.dims = {2, 3};
  t.data = {0x3c00, 0x0001, 0xfbff, 0x8000, 0x7bff, 0x1234};
  const std::string bytes = encode_tensor(t);
  ASSERT_EQ(bytes.size(), 4u + 4 + 4 + 16 + 12);
  EXPECT_EQ(bytes.substr(0, 4), "MPT1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 2);
  EXPECT_EQ(static_cast<unsigned char>(bytes[28]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(bytes[29]), 0x3c);
  const Tensor back = decode_tensor(bytes);
  EXPECT_EQ(back.dims, t.dims);
  EXPECT_EQ(back.data, t.data);
}

TEST(TensorFile, RejectsMalformedInput) {
  Tensor t;
  t.dims = {3};
  t.data = {1, 2, 3};
  const std::string good = encode_tensor(t);
  EXPECT_THROW(decode_tensor("MPT2" + good.substr(4)), IoError);
  EXPECT_THROW(decode_tensor(good.substr(0, good.size() - 1)), IoError);
  EXPECT_THROW(decode_tensor(good + "x"), IoError);
  std::string bad_dtype = good;
  bad_dtype[4] = 2;
  EXPECT_THROW(decode_tensor(bad_dtype), IoError);
  EXPECT_THROW(read_tensor_file("/nonexistent/file.mpt"), IoError);
  t.data.pop_back();
  EXPECT_THROW(encode_tensor(t), IoError);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_experiment(R"({"workflow":"sweep","bogus":1})"), ConfigError);
  EXPECT_THROW(parse_experiment(R"({"workflow":"sweep","ipu":{"lanes":16,"widht":3}})"), ConfigError);
  EXPECT_THROW(parse_experiment(R"({"workflow":"nope"})"), ConfigError);
  EXPECT_THROW(parse_experiment(R"({"seed":1})"), ConfigError);
  EXPECT_THROW(parse_experiment(R"({"workflow":"sweep","ipu":{"lanes":"8"}})"), ConfigError);
  EXPECT_THROW(parse_experiment(R"({"workflow":"sweep","ipu":{"lanes":12}})"), ConfigError);
  EXPECT_THROW(parse_experiment(R"({"workflow":"sweep","tile":{"cluster_size":5}})"), ConfigError);
  EXPECT_THROW(parse_experiment(R"({"workflow":"trace-ipu"})"), ConfigError);
  EXPECT_THROW(parse_experiment(R"({"workflow":"analyze-error","error":{"dists":["cauchy"]}})"), ConfigError);
  EXPECT_THROW(parse_experiment("{not json"), ConfigError);
  EXPECT_THROW(parse_experiment(R"({"workflow":"sweep","seed":-3})"), ConfigError);
}

TEST(Config, OverridesAndHash) {
  const std::string text = R"({"workflow":"analyze-error","seed":4,"threads":2})";
  const ExperimentConfig a = parse_experiment(text);
  EXPECT_EQ(a.seed, 4u);
  EXPECT_EQ(a.threads, 2);
  Overrides ov;
  ov.seed = 9;
  ov.workflow = "sweep";
  ov.threads = 5;
  const ExperimentConfig b = parse_experiment(text, ov);
  EXPECT_EQ(b.seed, 9u);
  EXPECT_EQ(b.workflow, Workflow::kSweep);
  EXPECT_NE(a.config_hash, b.config_hash);
  // Thread count and output path never enter the hash.
  const ExperimentConfig c = parse_experiment(R"({"workflow":"analyze-error","seed":4,"output":"x.csv"})");
  EXPECT_EQ(a.config_hash, c.config_hash);
  EXPECT_EQ(meta_line(a).rfind("# mpipu 0.1.0 config_hash=", 0), 0u);
  EXPECT_NE(meta_line(a).find(" seed=4"), std::string::npos);
}

TEST(Config, Fnv1a64) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(TraceIpu, MatchesGoldenFiles) {
  const std::string cfg_text = read_file(kGolden / "walkthrough.json");
  const RunOutput out = run_experiment(parse_experiment(cfg_text));
  EXPECT_EQ(out.console, read_file(kGolden / "walkthrough_trace.txt"));
  EXPECT_EQ(out.artifact, read_file(kGolden / "walkthrough_trace.json"));
  EXPECT_NE(out.console.find("cycle 0: served {A,D} local_shifts (0,2) extra_shift 0"), std::string::npos);
  EXPECT_NE(out.console.find("cycle 1: served {B,C} local_shifts (3,2) extra_shift 5"), std::string::npos);
}

TEST(TraceIpu, SingleLaneAndWideWindow) {
  const RunOutput one = run_experiment(parse_experiment(
      R"({"workflow":"trace-ipu","ipu":{"lanes":1,"precision":12},"trace":{"a":[1.5],"b":[-3.25]}})"));
  EXPECT_NE(one.console.find("1 cycle(s) per nibble iteration"), std::string::npos);
  EXPECT_NE(one.console.find("   0 -\n"), std::string::npos);
  EXPECT_NE(one.console.find("= -4.875"), std::string::npos);

  const RunOutput wide = run_experiment(parse_experiment(
      R"({"workflow":"trace-ipu","ipu":{"lanes":4,"precision":38,"sw_precision":27},
          "trace":{"a":[60000, 0.001, 3, "0x0001"],"b":[2, 0.5, 1e-3, 1]}})"));
  EXPECT_NE(wide.console.find("1 cycle(s) per nibble iteration"), std::string::npos);
  EXPECT_EQ(wide.console.find("cycle 1:"), std::string::npos);
}

TEST(TraceIpu, NonFiniteOperandIsNumericError) {
  EXPECT_THROW(run_experiment(parse_experiment(
                   R"({"workflow":"trace-ipu","ipu":{"lanes":2},"trace":{"a":["0x7c00",1],"b":[1,1]}})")),
               NumericError);
}

TEST(Workflows, ByteIdenticalReruns) {
  const std::string err = R"({"workflow":"analyze-error","seed":3,
      "error":{"dists":["laplace","uniform"],"acc_formats":["fp16","fp32"],"samples":500,"w_min":12,"w_max":20}})";
  const RunOutput e1 = run_experiment(parse_experiment(err));
  Overrides threads;
  threads.threads = 3;
  const RunOutput e2 = run_experiment(parse_experiment(err, threads));
  EXPECT_EQ(e1.artifact, e2.artifact);
  EXPECT_EQ(std::count(e1.artifact.begin(), e1.artifact.end(), '\n'), 2 + 4 * 9);

  const std::string sim = R"({"workflow":"sweep","seed":3,
      "tile":{"preset":"small","num_tiles":2},
      "layers":[{"name":"a","c":12,"h":6,"w":6,"k":10,"r":3,"s":3,"padding":1,"synthetic":{"dist":"laplace"}},
                {"name":"b","c":20,"h":4,"w":4,"k":8}],
      "sweep":{"precisions":[12,16,38],"cluster_sizes":[1,8,32],"buffer_depths":[2,4]}})";
  const RunOutput s1 = run_experiment(parse_experiment(sim));
  const RunOutput s2 = run_experiment(parse_experiment(sim, threads));
  EXPECT_EQ(s1.artifact, s2.artifact);
  EXPECT_EQ(std::count(s1.artifact.begin(), s1.artifact.end(), '\n'), 2 + 2 * 3 * 3 * 2);
  Overrides other_seed;
  other_seed.seed = 4;
  EXPECT_NE(run_experiment(parse_experiment(sim, other_seed)).artifact, s1.artifact);
}

TEST(Workflows, SimulateTileReadsAndWritesTensors) {
  const fs::path dir = scratch_dir();
  Tensor ifm;
  ifm.dims = {3, 4, 4};
  for (int k = 0; k < 48; ++k) ifm.data.push_back(static_cast<std::uint16_t>(0x3c00 + 37 * k));
  Tensor wt;
  wt.dims = {2, 3, 3, 3};
  for (int k = 0; k < 54; ++k) wt.data.push_back(static_cast<std::uint16_t>(0x2c00 + 53 * k));
  write_tensor_file(dir / "ifm.mpt", ifm);
  write_tensor_file(dir / "w.mpt", wt);
  const std::string cfg = R"({"workflow":"simulate-tile","tile":{"precision":38},
      "layers":[{"name":"t","c":3,"h":4,"w":4,"k":2,"r":3,"s":3,"padding":1,
                 "ifm":"ifm.mpt","weights":"w.mpt","ofm":"out.mpt"}]})";
  const RunOutput out = run_experiment(parse_experiment(cfg, {}, dir));
  EXPECT_NE(out.artifact.find("\nlayer,w,cluster_size,buffer_depth,total_cycles,baseline_cycles,normalized_time,pct_diffs_gt8\n"),
            std::string::npos);
  EXPECT_NE(out.artifact.find("\nt,38,32,4,"), std::string::npos);
  const Tensor ofm = read_tensor_file(dir / "out.mpt");
  EXPECT_EQ(ofm.dims, (std::vector<std::uint64_t>{2, 4, 4}));

  const std::string mismatched = R"({"workflow":"simulate-tile",
      "layers":[{"c":3,"h":4,"w":5,"k":2,"ifm":"ifm.mpt","weights":"w.mpt"}]})";
  EXPECT_THROW(run_experiment(parse_experiment(mismatched, {}, dir)), ConfigError);
  const std::string missing = R"({"workflow":"simulate-tile",
      "layers":[{"c":3,"h":4,"w":4,"k":2,"ifm":"nope.mpt","weights":"w.mpt"}]})";
  EXPECT_THROW(run_experiment(parse_experiment(missing, {}, dir)), IoError);
  fs::remove_all(dir);
}

TEST(Cli, ExitCodesAndAtomicOutput) {
  const fs::path dir = scratch_dir();
  write(dir / "bad.json", R"({"workflow":"sweep","bogus":true})");
  write(dir / "nan.json", R"({"workflow":"trace-ipu","ipu":{"lanes":1},"trace":{"a":["0x7e00"],"b":[1]}})");
  write(dir / "io.json", R"({"workflow":"simulate-tile","layers":[{"c":1,"ifm":"x.mpt","weights":"y.mpt"}]})");
  write(dir / "ok.json", R"({"workflow":"analyze-error","error":{"samples":200,"w_min":14,"w_max":16}})");
  EXPECT_EQ(run_cli("--config " + (dir / "bad.json").string()), 2);
  EXPECT_EQ(run_cli("--config " + (dir / "nan.json").string()), 3);
  EXPECT_EQ(run_cli("--config " + (dir / "io.json").string()), 4);
  EXPECT_EQ(run_cli("--config " + (dir / "missing.json").string()), 4);
  EXPECT_EQ(run_cli("--nonsense"), 2);
  EXPECT_EQ(run_cli("--config " + (dir / "ok.json").string() + " --workflow nope"), 2);
  const fs::path out = dir / "sweep.csv";
  EXPECT_EQ(run_cli("--config " + (dir / "ok.json").string() + " --seed 5 --threads 2 --out " + out.string()), 0);
  const std::string first = read_file(out);
  EXPECT_EQ(first.rfind("# mpipu 0.1.0 config_hash=", 0), 0u);
  EXPECT_NE(first.find(" seed=5\n"), std::string::npos);
  EXPECT_EQ(run_cli("--config " + (dir / "ok.json").string() + " --seed 5 --out " + out.string()), 0);
  EXPECT_EQ(read_file(out), first);
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 5u);  // no temp files left behind
  fs::remove_all(dir);
}

}  // namespace
}  // namespace mpipu
