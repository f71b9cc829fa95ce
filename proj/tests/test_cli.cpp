// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "deepnorm/corpus.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("deepnorm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args, std::string* out = nullptr) const {
    std::string cmd = std::string(DEEPNORM_CLI) + " " + args + " >" + path("stdout.txt") + " 2>" + path("stderr.txt");
    int status = std::system(cmd.c_str());
    if (out) *out = read(path("stdout.txt"));
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string read(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SynthThenOracleEvaluateIsPerfect) {
  ASSERT_EQ(run("--seed 1 synth --spec DATE=100,CARDINAL=100 -o " + path("c.csv")), 0);
  ASSERT_EQ(run("evaluate --gold " + path("c.csv") + " --backend verbalizer --gold-classes --kv " + path("r.kv")), 0);
  EXPECT_NE(read(path("r.kv")).find("\naccuracy=1\n"), std::string::npos) << read(path("r.kv"));
}

TEST_F(Cli, StatsReport) {
  ASSERT_EQ(run("--seed 2 synth --spec DATE=20,DIGIT=30 -o " + path("c.csv")), 0);
  std::string out;
  ASSERT_EQ(run("stats " + path("c.csv") + " --kv " + path("s.kv"), &out), 0);
  std::string kv = read(path("s.kv"));
  EXPECT_NE(kv.find("class.DATE=20\n"), std::string::npos) << kv;
  EXPECT_NE(kv.find("class.DIGIT=30\n"), std::string::npos) << kv;
  EXPECT_FALSE(out.empty());
}

TEST_F(Cli, SynthIsDeterministic) {
  ASSERT_EQ(run("--seed 3 synth --spec MONEY=40 -o " + path("a.csv")), 0);
  ASSERT_EQ(run("--seed 3 synth --spec MONEY=40 -o " + path("b.csv")), 0);
  EXPECT_EQ(read(path("a.csv")), read(path("b.csv")));
}

TEST_F(Cli, GradcheckPasses) {
  std::string out;
  EXPECT_EQ(run("gradcheck --hidden 4 --vocab 12", &out), 0);
  EXPECT_NE(out.find("gradient check passed"), std::string::npos) << out;
}

TEST_F(Cli, GradcheckImpossibleToleranceIsNumericFailure) { EXPECT_EQ(run("gradcheck --hidden 2 --vocab 6 --encoder-len 3 --tolerance 1e-30"), 3); }

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("no-such-command"), 1);
  EXPECT_EQ(run("synth -o " + path("x.csv")), 1);
  EXPECT_EQ(run("synth --spec BOGUS=1 -o " + path("x.csv")), 1);
  std::ofstream(path("empty.csv")).close();
  EXPECT_EQ(run("stats " + path("empty.csv")), 2);
  std::ofstream(path("bad.csv")) << "sentence_id,token_id,class,before,after\n0,0,NOPE,a,a\n";
  EXPECT_EQ(run("stats " + path("bad.csv")), 2);
  EXPECT_NE(read(path("stderr.txt")).find("NOPE"), std::string::npos);
}

TEST_F(Cli, ClassifierPipelineRoundTrip) {
  ASSERT_EQ(run("--seed 4 synth --spec DATE=80,CARDINAL=80,DIGIT=80,LETTERS=80 -o " + path("train.csv")), 0);
  ASSERT_EQ(run("--seed 5 synth --spec DATE=20,CARDINAL=20,DIGIT=20,LETTERS=20 -o " + path("test.csv")), 0);
  ASSERT_EQ(run("train-classifier --train " + path("train.csv") + " --rounds 20 -o " + path("clf.bin")), 0);
  ASSERT_EQ(run("predict --input " + path("test.csv") + " --backend verbalizer --classifier " + path("clf.bin") +
                " -o " + path("pred.csv")),
            0);
  std::string header = read(path("pred.csv")).substr(0, 9);
  EXPECT_EQ(header, "id,after\n");
  ASSERT_EQ(run("evaluate --gold " + path("test.csv") + " --predictions " + path("pred.csv") + " --kv " + path("r.kv")), 0);
  EXPECT_NE(read(path("r.kv")).find("accuracy="), std::string::npos);
  EXPECT_EQ(run("predict --input " + path("test.csv") + " --backend verbalizer -o " + path("p2.csv")), 1);
  std::ofstream(path("junk.bin")) << "JUNKJUNK";
  EXPECT_EQ(run("predict --input " + path("test.csv") + " --classifier " + path("junk.bin") + " -o " + path("p3.csv")), 2);
}

TEST_F(Cli, TrainNormalizerAndPredict) {
  ASSERT_EQ(run("--seed 6 synth --spec DIGIT=30 -o " + path("d.csv")), 0);
  ASSERT_EQ(run("train-normalizer --train " + path("d.csv") +
                " --hidden 8 --attention 8 --layers 1 --epochs 1 --batch 8 --momentum 0.5 -o " + path("n.bin")),
            0);
  EXPECT_NE(read(path("stderr.txt")).find("config momentum=0.5"), std::string::npos);
  ASSERT_EQ(run("predict --input " + path("d.csv") + " --backend seq2seq --gold-classes --normalizer " + path("n.bin") +
                " -o " + path("p.csv")),
            0);
  EXPECT_EQ(run("train-normalizer --train " + path("d.csv") + " --optimizer rmsprop -o " + path("n2.bin")), 1);
}

TEST_F(Cli, BaselineWritesTable) {
  ASSERT_EQ(run("--seed 7 synth --spec DATE=40,MEASURE=40 -o " + path("c.csv")), 0);
  ASSERT_EQ(run("baseline --train " + path("c.csv") + " --input " + path("c.csv") + " --gold-classes -o " +
                path("p.csv") + " --table-out " + path("t.tsv") + " --kv " + path("r.kv")),
            0);
  EXPECT_FALSE(read(path("t.tsv")).empty());
  EXPECT_NE(read(path("r.kv")).find("\naccuracy=1\n"), std::string::npos) << read(path("r.kv"));
}
