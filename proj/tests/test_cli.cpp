#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace {

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(PAIRWISE_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string temp(const std::string& name) { return testing::TempDir() + "pairwise_cli_" + name; }

const std::string kSmall = "--trials 1 --n_sd 40 --n_u 100 --n_test 200 --pool_size 800 --threads 1";

}  // namespace

TEST(Cli, HelpAndMissingSubcommand) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_NE(run("").code, 0);
  EXPECT_NE(run("frobnicate").code, 0);
}

TEST(Cli, BoundsPrintsCsv) {
  const auto r = run("bounds --c 1 --pi_plus 0.7 --n_s 100 --n_u 500");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "pi_plus,n_s,n_d,n_u,c,v_su,v_du,v_sd,v_sdu,condition,sd_le_su,du_le_su,chernoff");
  EXPECT_NE(r.out.find("0.7,100,100,500,1,0.1267"), std::string::npos);
}

TEST(Cli, BoundsRejectsBadInput) {
  const auto r = run("bounds --pi_plus 0.5");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("error:"), std::string::npos);
  EXPECT_EQ(run("bounds --n_s 10,x").code, 1);
  EXPECT_EQ(run("bounds --gamma 0.5,0.5").code, 1);
}

TEST(Cli, GenTrainEvalPipeline) {
  const std::string prefix = temp("pipe");
  auto r = run("gen --prefix " + prefix + " --separation 6 " + kSmall);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(slurp(prefix + ".pairs.csv").find('S'), std::string::npos);
  EXPECT_FALSE(slurp(prefix + ".unlabeled.csv").empty());

  r = run("train --pairs " + prefix + ".pairs.csv --unlabeled " + prefix + ".unlabeled.csv --method SDDU --model " +
          prefix + ".model");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("prior_mode=estimated"), std::string::npos);

  r = run("eval --model " + prefix + ".model --test " + prefix + ".test.libsvm");
  ASSERT_EQ(r.code, 0) << r.out;
  double acc = 0;
  ASSERT_EQ(std::sscanf(r.out.c_str(), "accuracy %lf on 200 points", &acc), 1) << r.out;
  EXPECT_GE(acc, 0.9);

  // Known-prior SD with the double hinge, model on stdout.
  r = run("train --pairs " + prefix + ".pairs.csv --method SD --loss double_hinge --lambdas 0.01 --folds 2");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("pairwise-linear-model"), std::string::npos);
}

TEST(Cli, TrainRejectsClusteringAndBadFiles) {
  const std::string prefix = temp("bad");
  ASSERT_EQ(run("gen --prefix " + prefix + " " + kSmall).code, 0);
  EXPECT_EQ(run("train --pairs " + prefix + ".pairs.csv --method KM").code, 1);
  EXPECT_EQ(run("train --pairs " + prefix + ".pairs.csv --loss hinge").code, 1);
  EXPECT_NE(run("train --pairs /nonexistent.csv").code, 0);
  EXPECT_EQ(run("eval --model " + prefix + ".pairs.csv --test " + prefix + ".test.libsvm").code, 1);
}

TEST(Cli, BenchWritesDeterministicCsv) {
  const std::string a = temp("a.csv"), b = temp("b.csv"), cfg = temp("bench.cfg");
  {
    std::ofstream out(cfg);
    out << "# small bench\ntrials=2\nn_sd=30\nn_u=60\nn_test=100\npool_size=600\nmethods=SD,SDDU,KM,CKM\n"
           "losses=squared\nseed=5\n";
  }
  auto r = run("bench --config " + cfg + " --output " + a);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("SDDU"), std::string::npos);
  EXPECT_NE(r.out.find("mean"), std::string::npos);
  ASSERT_EQ(run("bench --config " + cfg + " --output " + b).code, 0);
  const std::string csv = slurp(a);
  EXPECT_EQ(csv, slurp(b));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "trial,method,loss,n_s,n_d,n_u,lambda,gamma,prior_mode,prior_value,accuracy,status,wall_ms");
  // 2 trials x (SD, SDDU, KM, CKM)
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 8);
}

TEST(Cli, FlagsOverrideConfigFile) {
  const std::string cfg = temp("override.cfg"), out = temp("override.csv");
  {
    std::ofstream f(cfg);
    f << "trials=1\nn_sd=30\nn_u=60\nn_test=50\npool_size=400\nmethods=SD\nlosses=squared\n";
  }
  ASSERT_EQ(run("bench --config " + cfg + " --trials 2 --output " + out).code, 0);
  const std::string csv = slurp(out);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(run("bench --config " + cfg + " --trials 0").code, 1);
  EXPECT_NE(run("bench --config " + cfg + " --bogus 1").code, 0);
}
