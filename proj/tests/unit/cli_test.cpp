// Copyright 2026 The dctrf Authors. All Rights Reserved.
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


// Drives the dctrf binary end to end and checks exit codes.

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "dctrf/checkpoint.hpp"
#include "dctrf/codec.hpp"
#include "dctrf/scenes.hpp"

#ifndef DCTRF_CLI_PATH
#error "DCTRF_CLI_PATH must name the dctrf binary"
#endif

namespace dctrf {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "dctrf_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    SceneSpec s = ScenePreset("blobs3");
    s.cameras.count = 8;
    s.cameras.width = s.cameras.height = 8;
    s.cameras.focal = 8.0;
    SaveScene(s, Path("tiny.json"));
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string Path(const std::string& name) {
    return (dir_ / name).string();
  }

  // Exit status of the CLI; stdout goes to `stdout_file` when given.
  static int Run(const std::string& args, const std::string& stdout_file = "") {
    const std::string out = stdout_file.empty() ? "/dev/null" : stdout_file;
    const std::string cmd = std::string(DCTRF_CLI_PATH) + " " + args + " >" +
                            out + " 2>>" + Path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string Slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // Trains a tiny model once and returns its bitstream path.
  static std::string Bitstream() {
    const std::string ecrf = Path("run/model.ecrf");
    if (fs::exists(ecrf)) return ecrf;
    const std::string train =
        "train --scene " + Path("tiny.json") +
        " --iters 12 --resolution 8 --channels 4 --plane-block 4x4x4"
        " --line-block 4x4 --batch 16 --samples 16 --hidden 8"
        " --lambda-e 1e-6 --alpha 1 --log-every 4 -o " + Path("run");
    EXPECT_EQ(Run(train), 0);
    EXPECT_EQ(Run("compress " + Path("run/model.ckpt") + " -o " + ecrf +
                  " --report " + Path("run/report.json")),
              0);
    return ecrf;
  }

  static inline fs::path dir_;
};

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(Run(""), 2);
  EXPECT_EQ(Run("frobnicate"), 2);
  EXPECT_EQ(Run("train --iters notanumber"), 2);
  EXPECT_EQ(Run("train --scene " + Path("missing.json") + " -o " + Path("x")), 2);
  EXPECT_EQ(Run("train --scene nosuchpreset -o " + Path("x")), 2);
  EXPECT_EQ(Run("train --scene " + Path("tiny.json") +
                " --resolution 8 --plane-block 3x3x3 -o " + Path("x")),
            2);
  EXPECT_EQ(Run("scene gen nosuchpreset"), 2);
}

TEST_F(Cli, SceneListAndGen) {
  ASSERT_EQ(Run("scene list", Path("list.txt")), 0);
  EXPECT_EQ(Slurp(Path("list.txt")), "blobs3\nempty\nsphere\n");
  ASSERT_EQ(Run("scene gen blobs3 -o " + Path("gen.json")), 0);
  EXPECT_EQ(SceneToJson(LoadScene(Path("gen.json"))),
            SceneToJson(ScenePreset("blobs3")));
}

TEST_F(Cli, OracleEvalIsCapped) {
  ASSERT_EQ(Run("eval oracle --scene " + Path("tiny.json") + " -o " +
                Path("oracle.csv")),
            0);
  const std::string csv = Slurp(Path("oracle.csv"));
  EXPECT_NE(csv.find("99"), std::string::npos) << csv;
}

TEST_F(Cli, TrainCompressDecompressEval) {
  const std::string ecrf = Bitstream();
  ASSERT_TRUE(fs::exists(ecrf));
  EXPECT_TRUE(fs::exists(Path("run/train_log.csv")));
  EXPECT_TRUE(fs::exists(Path("run/run_config.json")));
  EXPECT_EQ(Slurp(Path("run/train_log.csv")).rfind(
                "iteration,L_MSE,L_e_bits,L_r,psnr,seconds\n", 0),
            0u);
  EXPECT_NE(Slurp(Path("run/report.json")).find("payload_bytes"),
            std::string::npos);

  ASSERT_EQ(Run("decompress " + ecrf + " -o " + Path("run/decoded.ckpt")), 0);
  // The decoded grid is exactly the dequantized checkpoint grid.
  const Model orig = LoadCheckpoint(Path("run/model.ckpt"));
  const Model dec = LoadCheckpoint(Path("run/decoded.ckpt"));
  const auto deq = Dequantize(QuantizeCoeffs(GridCoefficients(orig.grid)));
  const auto got = GridCoefficients(dec.grid);
  ASSERT_EQ(got.size(), deq.size());
  for (std::size_t k = 0; k < got.size(); ++k) {
    double worst = 0.0;
    for (std::size_t i = 0; i < got[k].values.data.size(); ++i)
      worst = std::max(worst, std::fabs(got[k].values.data[i] -
                                        deq[k].values.data[i]));
    EXPECT_LT(worst, 1e-4) << "component " << k;
  }
  EXPECT_EQ(dec.mlp.params, orig.mlp.params);

  EXPECT_EQ(Run("eval " + ecrf + " --scene " + Path("tiny.json") +
                " --samples 16 -o " + Path("eval_a.csv")),
            0);
  EXPECT_EQ(Run("eval " + Path("run/model.ckpt") + " --quantize --scene " +
                Path("tiny.json") + " --samples 16 -o " + Path("eval_b.csv")),
            0);
  EXPECT_EQ(Slurp(Path("eval_a.csv")), Slurp(Path("eval_b.csv")));
  EXPECT_EQ(Run("render " + ecrf + " --scene " + Path("tiny.json") +
                " --samples 16 -o " + Path("renders")),
            0);
  EXPECT_TRUE(fs::exists(Path("renders/view_000.png")));
}

TEST_F(Cli, CorruptBitstreamsMapToDistinctCodes) {
  const auto bytes = ReadFileBytes(Bitstream());
  const auto check = [&](std::vector<std::uint8_t> b, int code,
                         const char* what) {
    WriteFileBytes(Path("bad.ecrf"), b);
    EXPECT_EQ(Run("decompress " + Path("bad.ecrf") + " -o " + Path("bad.ckpt")),
              code)
        << what;
  };
  auto b = bytes;
  b[0] ^= 0x5a;
  check(b, 3, "magic");
  b = bytes;
  b[4] = 200;
  check(b, 4, "version");
  b = bytes;
  b[b.size() / 2] ^= 0x01;
  check(b, 5, "checksum");
  check({bytes.begin(), bytes.begin() + bytes.size() / 3}, 6, "truncated");
  b = bytes;
  b.insert(b.end(), {1, 2, 3});
  check(b, 7, "trailing");
  EXPECT_EQ(Run("decompress " + Path("nonexistent.ecrf")), 1);
}

TEST_F(Cli, GradCheckPasses) {
  ASSERT_EQ(Run("gradcheck --scene " + Path("tiny.json") + " --per-family 8",
                Path("grad.csv")),
            0);
  EXPECT_EQ(Slurp(Path("grad.csv")).find("FAIL"), std::string::npos);
}

}  // namespace
}  // namespace dctrf
