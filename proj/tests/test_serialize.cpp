#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "peakevd/serialize.hpp"

using namespace peakevd;
using nlohmann::json;

TEST_CASE("non-finite doubles become null, optionals become null") {
  CHECK(serialize::finite_or_null(1.5) == json(1.5));
  CHECK(serialize::finite_or_null(std::numeric_limits<double>::infinity()).is_null());
  CHECK(serialize::finite_or_null(std::nan("")).is_null());
  CHECK(serialize::opt_or_null(std::optional<double>{}).is_null());
  CHECK(serialize::opt_or_null(std::optional<double>{2.0}) == json(2.0));
}

TEST_CASE("fixed and scientific formatting") {
  CHECK(serialize::format_fixed6(1.5) == "1.500000");
  CHECK(serialize::format_fixed6(0.1234567) == "0.123457");
  CHECK(serialize::format_fixed6(-0.000001) == "-0.000001");
  CHECK(serialize::format_fixed6(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(serialize::format_fixed6(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(serialize::format_fixed6(std::nan("")) == "nan");
  CHECK(serialize::format_scientific3(0.95) == "9.50e-01");
  CHECK(serialize::format_scientific3(1.0) == "1.00e+00");
  CHECK(serialize::format_scientific3(3.2e-12) == "3.20e-12");
}

TEST_CASE("filter report serialization") {
  FilterReport r;
  r.kept = 3;
  r.dropped_incomplete = 1;
  r.dropped_ids.emplace_back("x", "incomplete");
  const json j = serialize::json_of(r);
  CHECK(j["kept"] == 3);
  CHECK(j["dropped_incomplete"] == 1);
  CHECK(j["dropped_negative"] == 0);
  CHECK(j["dropped_leading_zero"] == 0);
  REQUIRE(j["dropped_ids"].size() == 1);
  CHECK(j["dropped_ids"][0]["customer_id"] == "x");
  CHECK(j["dropped_ids"][0]["reason"] == "incomplete");
}

TEST_CASE("quantile-regression fit serialization distinguishes c4") {
  mqr::MqrFit c4;
  c4.formulation = Formulation::C4;
  c4.w = {0.1, 1.0, 2.0};
  c4.grid = QuantileGrid::make(0.25, 0.5, 0.75);
  c4.train_apl = 0.5;
  json j = serialize::json_of(c4);
  CHECK(j["formulation"] == "c4");
  CHECK(j["method"] == "mqr");
  CHECK(j["params"].is_null());
  CHECK(j["w"] == json::array({0.1, 1.0, 2.0}));
  CHECK(j["grid"] == json::array({0.25, 0.75}));

  mqr::MqrFit g;
  g.formulation = Formulation::Gumbel;
  g.w = {0.05, 1.0, 0.2};
  g.params = CanonicalParams{0.05, 1.0, 0.2, 0.0};
  g.grid = QuantileGrid::make(0.25, 0.5, 0.75);
  j = serialize::json_of(g);
  CHECK(j["params"]["theta0"] == 0.05);
  CHECK(j["params"]["gamma"] == 0.0);
}

TEST_CASE("likelihood fit serialization carries the optimizer trace") {
  mle::MleFit f;
  f.formulation = Formulation::Frechet;
  f.w = {1.0, 0.05, 0.4, 0.5};
  f.params = CanonicalParams{0.05, 1.0, 0.4, 0.5};
  f.train_anll = 2.5;
  f.total_train_nll = 250.0;
  f.feasibility_margin = 0.125;
  f.diag.fval = 2.5;
  f.diag.evals = 321;
  f.diag.converged = true;
  f.diag.restarts = 9;
  const json j = serialize::json_of(f);
  CHECK(j["formulation"] == "frechet");
  CHECK(j["method"] == "mle");
  CHECK(j["train_anll"] == 2.5);
  CHECK(j["feasibility_margin"] == 0.125);
  CHECK(j["optimizer"]["evaluations"] == 321);
  CHECK(j["optimizer"]["restarts"] == 9);
  CHECK(j["optimizer"]["converged"] == true);
}

TEST_CASE("likelihood-ratio and fold serialization") {
  inference::LrtResult lrt;
  lrt.ell0 = -100.0;
  lrt.ell1 = -90.0;
  lrt.lambda = 20.0;
  lrt.p_value = 7.7e-6;
  const json j = serialize::json_of(lrt);
  CHECK(j["lambda"] == 20.0);
  CHECK(j["p_value_str"] == "7.70e-06");

  experiments::FoldMetrics fm;
  fm.fold = 2;
  fm.train_count = 80;
  fm.test_count = 20;
  fm.train_metric = 1.0;
  fm.test_metric = std::numeric_limits<double>::infinity();
  fm.infeasible_test_ids = {"a", "b"};
  const json jf = serialize::json_of(fm);
  CHECK(jf["test_metric"].is_null());  // inf encodes as null...
  CHECK(jf["infeasible_test_ids"] == json::array({"a", "b"}));  // ...with the ids listed
  CHECK(jf["gamma_hat"].is_null());
}

TEST_CASE("cross-validation cell serialization keeps optional blocks explicit") {
  experiments::CvCell c;
  c.formulation = Formulation::Gumbel;
  c.method = Method::MQR;
  c.folds.resize(1);
  c.mean_train = 0.5;
  c.mean_test = 0.6;
  json j = serialize::json_of(c);
  CHECK(j["lrt"].is_null());
  CHECK(j["std_gamma"].is_null());
  CHECK(j["mean_gamma"].is_null());
  CHECK(j["error"].is_null());

  c.lrt = inference::LrtResult{-10.0, -9.0, 2.0, 0.157};
  c.std_gamma = 0.04;
  c.error = "boom";
  j = serialize::json_of(c);
  CHECK(j["lrt"]["lambda"] == 2.0);
  CHECK(j["std_gamma"] == 0.04);
  CHECK(j["error"] == "boom");
}

TEST_CASE("report serialization and text table") {
  experiments::CvReport rep;
  rep.k = 2;
  rep.n_records = 10;
  rep.seed = 42;
  rep.grid = QuantileGrid::make(0.25, 0.5, 0.75);

  experiments::CvCell ok;
  ok.formulation = Formulation::Frechet;
  ok.method = Method::MLE;
  ok.mean_train = 2.25;
  ok.mean_test = 2.5;
  ok.mean_gamma = 0.45;
  ok.std_gamma = 0.03;
  ok.lrt = inference::LrtResult{-10.0, -5.0, 10.0, 0.0015654022580025};
  rep.cells.push_back(ok);

  experiments::CvCell bad;
  bad.formulation = Formulation::ReverseWeibull;
  bad.method = Method::MLE;
  bad.error = "fold 1: no feasible start";
  rep.cells.push_back(bad);

  const json j = serialize::json_of(rep);
  CHECK(j["k"] == 2);
  CHECK(j["cells"].size() == 2);
  CHECK(j["cells"][1]["error"] == "fold 1: no feasible start");

  const std::string table = serialize::render_cv_table(rep);
  CHECK(table.find("formulation") != std::string::npos);
  CHECK(table.find("Tr") != std::string::npos);
  CHECK(table.find("Te") != std::string::npos);
  CHECK(table.find("gamma_hat") != std::string::npos);
  CHECK(table.find("std_gamma") != std::string::npos);
  CHECK(table.find("lrt_p") != std::string::npos);
  CHECK(table.find("frechet") != std::string::npos);
  CHECK(table.find("2.250000") != std::string::npos);
  CHECK(table.find("1.57e-03") != std::string::npos);
  CHECK(table.find("error: fold 1: no feasible start") != std::string::npos);

  // Dumps are deterministic: keys are ordered, doubles round-trip.
  CHECK(j.dump(2) == serialize::json_of(rep).dump(2));
}
