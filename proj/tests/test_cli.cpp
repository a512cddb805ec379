#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"

namespace {

std::string cli_path() {
  const char* p = std::getenv("SURVSTACK_CLI");
  REQUIRE_MESSAGE(p != nullptr, "SURVSTACK_CLI not set");
  return p;
}

std::string tmp_dir() {
  const char* t = std::getenv("TMPDIR");
  return t ? t : "/tmp";
}

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string out_file = tmp_dir() + "/survstack_cli_out.txt";
  const std::string cmd =
      cli_path() + " " + args + " > " + out_file + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out_file);
  std::stringstream buf;
  buf << in.rdbuf();
  std::remove(out_file.c_str());
  return {WEXITSTATUS(status), buf.str()};
}

std::string write_training_csv(const std::string& name, std::size_t n,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm;
  std::uniform_real_distribution<double> cen(0.0, 8.0);
  const std::string path = tmp_dir() + "/" + name;
  std::ofstream out(path);
  out << "time,event,x1,x2\n";
  out.precision(17);
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = norm(rng), x2 = norm(rng);
    const double t = std::exp(0.6 * x1 - 0.4 * x2 + 0.5 * norm(rng));
    const double c = cen(rng);
    out << std::min(t, c) << "," << (t < c ? 1 : 0) << "," << x1 << "," << x2
        << "\n";
  }
  return path;
}

}  // namespace

TEST_CASE("cli: no arguments is a usage error (exit 1)") {
  auto res = run_cli("");
  CHECK(res.exit_code == 1);
}

TEST_CASE("cli: unknown flag is a usage error (exit 1)") {
  CHECK(run_cli("simulate --no-such-flag").exit_code == 1);
  CHECK(run_cli("frobnicate").exit_code == 1);
}

TEST_CASE("cli: malformed CSV is a data error (exit 2)") {
  const std::string path = tmp_dir() + "/survstack_bad.csv";
  std::ofstream(path) << "time,event,x1\n1.0,1,0.5\nnope,1,0.2\n";
  auto res = run_cli("fit --data " + path + " --trees 5");
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("line 3") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("cli: fit -> predict -> evaluate round trip") {
  const std::string data = write_training_csv("survstack_train.csv", 80, 5);
  const std::string model = tmp_dir() + "/survstack_model.json";
  auto fit = run_cli("fit --data " + data + " --trees 25 --grid-size 5 --out " +
                     model);
  REQUIRE(fit.exit_code == 0);
  CHECK(fit.output.find("stack weights") != std::string::npos);
  CHECK(fit.output.find("kkt residual") != std::string::npos);

  // Same seed, same command: byte-identical report.
  auto fit2 = run_cli("fit --data " + data + " --trees 25 --grid-size 5");
  CHECK(fit2.exit_code == 0);
  CHECK(fit2.output == fit.output);

  const std::string preds = tmp_dir() + "/survstack_preds.csv";
  auto pr = run_cli("predict --model " + model + " --data " + data +
                    " --times 0.5,1.0,2.0 --out " + preds);
  REQUIRE(pr.exit_code == 0);
  std::ifstream pin(preds);
  std::string header;
  std::getline(pin, header);
  CHECK(header == "row,s_0.5,s_1,s_2");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(pin, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 80);

  // Strip the row column to build an evaluate input.
  const std::string eval_in = tmp_dir() + "/survstack_eval.csv";
  {
    std::ifstream again(preds);
    std::ofstream out(eval_in);
    std::string l;
    std::getline(again, l);  // skip header
    out << "0.5,1.0,2.0\n";
    while (std::getline(again, l)) {
      if (l.empty()) continue;
      out << l.substr(l.find(',') + 1) << "\n";
    }
  }
  auto ev = run_cli("evaluate --data " + data + " --predictions " + eval_in);
  CHECK(ev.exit_code == 0);
  CHECK(ev.output.find("brier t=0.5") != std::string::npos);
  CHECK(ev.output.find("ibs:") != std::string::npos);

  std::remove(data.c_str());
  std::remove(model.c_str());
  std::remove(preds.c_str());
  std::remove(eval_in.c_str());
}

TEST_CASE("cli: predict rejects schema mismatches (exit 2)") {
  const std::string data = write_training_csv("survstack_train2.csv", 60, 9);
  const std::string model = tmp_dir() + "/survstack_model2.json";
  REQUIRE(run_cli("fit --data " + data + " --trees 10 --grid-size 4 --out " +
                  model)
              .exit_code == 0);
  const std::string bad = tmp_dir() + "/survstack_newdata.csv";
  std::ofstream(bad) << "x1\n0.5\n";
  auto res = run_cli("predict --model " + model + " --data " + bad +
                     " --times 1.0");
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("x2") != std::string::npos);
  std::remove(data.c_str());
  std::remove(model.c_str());
  std::remove(bad.c_str());
}

TEST_CASE("cli: simulate smoke run writes the three output files") {
  const std::string prefix = tmp_dir() + "/survstack_sim";
  auto res = run_cli(
      "simulate --family lognormal --form linear --replicates 2 --n 60 "
      "--seed 3 --out " +
      prefix);
  REQUIRE(res.exit_code == 0);
  CHECK(res.output.find("scenario lognormal/linear") != std::string::npos);
  for (const std::string suffix :
       {"_isse.csv", "_weights.csv", "_summary.json"}) {
    std::ifstream in(prefix + suffix);
    CHECK_MESSAGE(in.good(), suffix);
    std::remove((prefix + suffix).c_str());
  }
}

TEST_CASE("cli: unknown scenario family is a usage error") {
  CHECK(run_cli("simulate --family cauchy --replicates 1 --n 40").exit_code ==
        1);
}
