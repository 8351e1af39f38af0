// Copyright 2026 The MIHash Authors.
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

// End-to-end checks that run the built `mihash` executable.

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "mihash/dataset.hpp"
#include "mihash/embedding.hpp"
#include "mihash/retrieval.hpp"

namespace mihash {
namespace {

namespace fs = std::filesystem;

struct CommandResult {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mihash_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CommandResult run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string("'") + MIHASH_CLI + "' " + args + " >'" + out.string() + "' 2>'" +
                            err.string() + "'";
    const int raw = std::system(cmd.c_str());
    CommandResult r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  // Synthetic data plus a short training config in dir_/data.
  fs::path make_dataset(const std::string& extra = "") {
    const CommandResult r = run("synth -o '" + (dir_ / "data").string() +
                      "' --classes 4 --per-class 60 --dim 8 --separation 5 --seed 2");
    EXPECT_EQ(r.status, 0) << r.err;
    std::ofstream cfg(dir_ / "data" / "config.txt", std::ios::app);
    cfg << "code_length = 12\nbatch_size = 50\nepochs = 3\nseed = 4\n" << extra;
    return dir_ / "data" / "config.txt";
  }

  std::string path(const std::string& name) const { return "'" + (dir_ / name).string() + "'"; }

  fs::path dir_;
};

TEST_F(Cli, TrainWritesLoadableModelAndLog) {
  const fs::path cfg = make_dataset();
  const CommandResult r = run("train -c '" + cfg.string() + "' --model-out " + path("m.mih") + " --log-out " + path("log.csv"));
  ASSERT_EQ(r.status, 0) << r.err;
  const HashModel m = load_model(dir_ / "m.mih");
  EXPECT_EQ(m.code_length(), 12);
  EXPECT_EQ(m.input_dim(), 8);
  const std::string log = slurp(dir_ / "log.csv");
  EXPECT_EQ(log.rfind("epoch,mean_objective,lr\n1,", 0), 0u) << log;
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 4);
}

TEST_F(Cli, UnknownConfigKeyFailsWithItsName) {
  const fs::path cfg = make_dataset("learning_rate = 0.3\n");
  const CommandResult r = run("train -c '" + cfg.string() + "'");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("learning_rate"), std::string::npos) << r.err;
}

TEST_F(Cli, MissingFileFails) {
  const CommandResult r = run("train -c " + path("nope.txt"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("nope.txt"), std::string::npos) << r.err;
}

TEST_F(Cli, FixedSeedGivesIdenticalModelFiles) {
  const fs::path cfg = make_dataset("validate = true\n");
  ASSERT_EQ(run("train -q -c '" + cfg.string() + "' --model-out " + path("a.mih") + " --log-out " + path("a.csv")).status, 0);
  ASSERT_EQ(run("train -q -c '" + cfg.string() + "' --model-out " + path("b.mih") + " --log-out " + path("b.csv")).status, 0);
  EXPECT_EQ(slurp(dir_ / "a.mih"), slurp(dir_ / "b.mih"));
  EXPECT_EQ(slurp(dir_ / "a.csv"), slurp(dir_ / "b.csv"));
  EXPECT_NE(slurp(dir_ / "a.csv").find("val_map"), std::string::npos);
}

TEST_F(Cli, EvalReportsFiniteMapAndPlots) {
  const fs::path cfg = make_dataset();
  const CommandResult r = run("eval -c '" + cfg.string() + "' --lsh-bits 12 --lsh-seed 1 -o " + path("r1.csv") +
                    " --map-at 20 --precision-at 5,10 --plot-dists " + path("dists"));
  ASSERT_EQ(r.status, 0) << r.err;
  std::istringstream report(slurp(dir_ / "r1.csv"));
  std::string line;
  double map = -1;
  while (std::getline(report, line)) {
    if (line.rfind("map,,", 0) == 0) map = std::stod(line.substr(5));
  }
  EXPECT_TRUE(std::isfinite(map));
  EXPECT_GE(map, 0.0);
  EXPECT_LE(map, 1.0);
  const std::string dists = slurp(dir_ / "dists.csv");
  // Header plus b + 1 = 13 rows.
  EXPECT_EQ(std::count(dists.begin(), dists.end(), '\n'), 14);
  EXPECT_NE(slurp(dir_ / "dists.svg").find("<svg"), std::string::npos);

  ASSERT_EQ(run("eval -c '" + cfg.string() + "' --lsh-bits 12 --lsh-seed 1 -o " + path("r2.csv") +
                " --map-at 20 --precision-at 5,10")
                .status,
            0);
  EXPECT_EQ(slurp(dir_ / "r1.csv"), slurp(dir_ / "r2.csv"));
}

TEST_F(Cli, EvalRejectsDimensionMismatch) {
  const fs::path cfg = make_dataset();
  save_model(HashModel::gaussian(5, 8, 1.0, 0), dir_ / "wrong.mih");
  const CommandResult r = run("eval -c '" + cfg.string() + "' -m " + path("wrong.mih") + " -o " + path("r.csv"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("5-d"), std::string::npos) << r.err;
}

TEST_F(Cli, QueryMatchesRankDatabase) {
  const fs::path cfg = make_dataset();
  ASSERT_EQ(run("train -q -c '" + cfg.string() + "' --model-out " + path("m.mih") + " --log-out " + path("l.csv")).status, 0);
  const fs::path features = dir_ / "data" / "features.mif";
  ASSERT_EQ(run("export-codes -m " + path("m.mih") + " --features '" + features.string() + "' -o " + path("db.mic") +
                " --csv " + path("db.csv"))
                .status,
            0);
  // Queries are the first three database items.
  FeatureMatrix all = load_features(features, FeatureFormat::kBinary);
  FeatureMatrix first;
  first.values = all.values.leftCols(3);
  save_features(first, dir_ / "q.csv", FeatureFormat::kCsv);

  const CommandResult r = run("query -m " + path("m.mih") + " --db " + path("db.mic") + " --queries " + path("q.csv") + " -k 5");
  ASSERT_EQ(r.status, 0) << r.err;
  const HashModel model = load_model(dir_ / "m.mih");
  const BinaryCodeSet db = load_codes(dir_ / "db.mic");
  const BinaryCodeSet qs = encode(model, first.values);
  std::ostringstream expected;
  expected << "query,rank,index,distance\n";
  for (std::size_t q = 0; q < 3; ++q) {
    const auto ranked = rank_database(qs.code(q), db);
    EXPECT_EQ(ranked.distances[0], 0);
    for (int k = 0; k < 5; ++k) {
      expected << q << ',' << k + 1 << ',' << ranked.ordering[k] << ',' << ranked.distances[k] << '\n';
    }
  }
  EXPECT_EQ(r.out, expected.str());
  // The query's own item is at distance 0 and, with index ties, first.
  EXPECT_EQ(r.out.substr(0, 34), "query,rank,index,distance\n0,1,0,0\n");
}

TEST_F(Cli, QueryClampsKToDatabaseSize) {
  const fs::path cfg = make_dataset();
  ASSERT_EQ(run("train -q -c '" + cfg.string() + "' --model-out " + path("m.mih") + " --log-out " + path("l.csv")).status, 0);
  FeatureMatrix one;
  one.values = Matrix::Ones(8, 1);
  save_features(one, dir_ / "one.csv", FeatureFormat::kCsv);
  ASSERT_EQ(run("export-codes -m " + path("m.mih") + " --features " + path("one.csv") + " -o " + path("db.mic")).status, 0);

  CommandResult r = run("query -m " + path("m.mih") + " --db " + path("db.mic") + " --queries " + path("one.csv") + " -k 1");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, "query,rank,index,distance\n0,1,0,0\n");
  r = run("query -m " + path("m.mih") + " --db " + path("db.mic") + " --queries " + path("one.csv") + " -k 7");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, "query,rank,index,distance\n0,1,0,0\n");
  EXPECT_NE(r.err.find("warning"), std::string::npos);
}

TEST_F(Cli, StandardizationTravelsWithTheModel) {
  const fs::path cfg = make_dataset("standardize = true\n");
  ASSERT_EQ(run("train -q -c '" + cfg.string() + "' --model-out " + path("m.mih") + " --log-out " + path("l.csv")).status, 0);
  EXPECT_TRUE(fs::exists(dir_ / "m.mih.norm"));
  const CommandResult r = run("eval -c '" + cfg.string() + "' -m " + path("m.mih") + " -o " + path("r.csv"));
  ASSERT_EQ(r.status, 0) << r.err;
}

TEST_F(Cli, PlotDistsRendersCsv) {
  {
    std::ofstream out(dir_ / "h.csv");
    out << "bin,p_plus,p_minus\n0,0.5,0\n1,0.5,0.2\n2,0,0.8\n";
  }
  const CommandResult r = run("plot-dists --hist " + path("h.csv") + " -o " + path("h.svg") + " --title demo");
  ASSERT_EQ(r.status, 0) << r.err;
  const std::string svg = slurp(dir_ / "h.svg");
  EXPECT_NE(svg.find(">demo<"), std::string::npos);
}

TEST_F(Cli, SynthIsDeterministic) {
  ASSERT_EQ(run("synth -o " + path("a") + " --seed 9 --classes 3 --per-class 20").status, 0);
  ASSERT_EQ(run("synth -o " + path("b") + " --seed 9 --classes 3 --per-class 20").status, 0);
  for (const char* f : {"features.mif", "labels.txt", "splits.txt"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
}

}  // namespace
}  // namespace mihash
