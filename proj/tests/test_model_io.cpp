#include <cstdio>
#include <sstream>
#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include <nlohmann/json.hpp>

#include "survstack/csv.hpp"
#include "survstack/model_io.hpp"

using namespace survstack;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
           "/" + name;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

StackedModel fit_example(const SurvivalDataset& data) {
  ForestConfig fc;
  fc.n_trees = 20;
  fc.seed = 3;
  CandidateList specs{
      std::make_shared<AftCandidate>("lognormal", AftFamily::lognormal),
      std::make_shared<AftCandidate>("weibull", AftFamily::weibull),
      std::make_shared<CoxCandidate>("cox"),
      std::make_shared<ForestCandidate>("rsf", fc)};
  StackConfig config;
  config.grid_size = 5;
  return fit_stack(data, specs, config);
}

}  // namespace

TEST_CASE("save/load round trip reproduces predictions exactly") {
  Vector beta(2);
  beta << 0.7, -0.4;
  auto data = testutil::lognormal_sample(80, beta, 0.5, 10.0, 5);
  auto model = fit_example(data);
  TempFile file("survstack_roundtrip.json");
  save_stack(file.path, model, data.covariate_names());
  auto loaded = load_stack(file.path);
  CHECK(loaded.covariate_names == data.covariate_names());
  REQUIRE(loaded.model.weights.alpha.size() == 4);
  for (int k = 0; k < 4; ++k)
    CHECK(loaded.model.weights.alpha[k] == model.weights.alpha[k]);
  for (std::size_t i = 0; i < 10; ++i)
    for (double t : {0.3, 0.9, 1.7, 4.0})
      CHECK(predict_stack(loaded.model, data.covariate_row(i), t) ==
            doctest::Approx(predict_stack(model, data.covariate_row(i), t))
                .epsilon(1e-12));
}

TEST_CASE("stack_to_json: versioned self-describing container") {
  Vector beta(1);
  beta << 0.5;
  auto data = testutil::lognormal_sample(60, beta, 0.5, 10.0, 6);
  auto model = fit_example(data);
  auto j = stack_to_json(model, data.covariate_names());
  CHECK(j.at("format") == "survstack-model");
  CHECK(j.at("version") == 1);
  CHECK(j.at("candidates").size() == 4);
  CHECK(j.at("covariates").size() == 1);
}

TEST_CASE("make_candidate: known kinds and rejection of unknown ones") {
  ForestConfig fc;
  CHECK(make_candidate("a", "lognormal", fc)->id() == "a");
  CHECK_NOTHROW(make_candidate("b", "weibull", fc));
  CHECK_NOTHROW(make_candidate("c", "cox", fc));
  CHECK_NOTHROW(make_candidate("d", "rsf", fc));
  CHECK_THROWS_AS(make_candidate("e", "mystery", fc), Error);
}

TEST_CASE("read_survival_csv: happy path") {
  std::istringstream in(
      "time,event,age,size\n"
      "5.0,1,61,2.2\n"
      "3.5,0,44,1.0\n"
      "8.25,1,70,3.1\n");
  auto data = read_survival_csv(in);
  REQUIRE(data.size() == 3);
  CHECK(data.time(1) == 3.5);
  CHECK_FALSE(data.event(1));
  CHECK(data.covariate_names() == std::vector<std::string>{"age", "size"});
  CHECK(data.covariates()(2, 1) == 3.1);
}

TEST_CASE("read_survival_csv: reports every malformed line") {
  std::istringstream in(
      "time,event,age\n"
      "5.0,1,61\n"
      "oops,1,44\n"
      "2.0,7,50\n"
      "1.5,0\n");
  try {
    read_survival_csv(in);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("line 4") != std::string::npos);
    CHECK(msg.find("line 5") != std::string::npos);
  }
}

TEST_CASE("read_survival_csv: missing required column") {
  std::istringstream in("time,age\n1.0,50\n");
  CHECK_THROWS_AS(read_survival_csv(in), DataError);
}

TEST_CASE("read_covariate_csv: schema matched by name, order-free") {
  std::istringstream in(
      "size,ignored,age\n"
      "2.0,99,60\n"
      "1.5,98,45\n");
  auto x = read_covariate_csv(in, {"age", "size"});
  REQUIRE(x.rows() == 2);
  CHECK(x(0, 0) == 60.0);
  CHECK(x(0, 1) == 2.0);
  CHECK(x(1, 0) == 45.0);
}

TEST_CASE("read_covariate_csv: missing columns are named") {
  std::istringstream in("age\n60\n");
  try {
    read_covariate_csv(in, {"age", "size", "grade"});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("size") != std::string::npos);
    CHECK(msg.find("grade") != std::string::npos);
  }
}
