#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "pgsa/experiment.hpp"

using namespace pgsa;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.toy_dimension = 2;
  c.degree = 4;
  c.ed_sizes = {12, 24};
  c.n_replications = 2;
  c.n_bootstrap = 2;
  c.validation_size = 400;
  c.mesh_size = 200;
  c.reference_mc = 10000;
  c.seed = 99;
  return c;
}

std::string csv_of(const ExperimentResult& r) {
  std::ostringstream os;
  write_records_csv(r.records, os);
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pgsa_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void expect_config_error(const nlohmann::json& j) {
  try {
    config_from_json(j);
    ADD_FAILURE() << j.dump();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config) << j.dump();
  }
}

}  // namespace

TEST(Config, ParsesShippedFiles) {
  const fs::path dir = fs::path(PGSA_SOURCE_DIR) / "configs";
  for (const char* f : {"toy_unweighted.json", "toy_wlin.json", "flood_unweighted.json", "flood_wlin.json"}) {
    std::ifstream in(dir / f);
    ASSERT_TRUE(in) << f;
    EXPECT_NO_THROW(config_from_json(nlohmann::json::parse(in))) << f;
  }
}

TEST(Config, DefaultsAndFields) {
  const auto c = config_from_json(nlohmann::json::object());
  EXPECT_EQ(c.model, "toy");
  EXPECT_EQ(c.n_bootstrap, 30u);
  EXPECT_EQ(c.validation_size, 100000u);
  EXPECT_EQ(c.methods.size(), 3u);
  const auto w = config_from_json({{"weights", "wlin"}, {"methods", {"combined"}}, {"ed_sizes", {5, 9}}, {"seed", 3}});
  EXPECT_EQ(w.weights, WeightSetting::Wlin);
  EXPECT_EQ(w.methods, std::vector<Method>{Method::Combined});
  EXPECT_EQ(w.ed_sizes, (std::vector<std::size_t>{5, 9}));
  EXPECT_EQ(w.seed, 3u);
  const auto round = config_from_json(config_to_json(w));
  EXPECT_EQ(config_to_json(round), config_to_json(w));
}

TEST(Config, ValidationErrors) {
  expect_config_error({{"ed_sizes", {50, 25}}});
  expect_config_error({{"ed_sizes", {25, 25}}});
  expect_config_error({{"ed_sizes", nlohmann::json::array()}});
  expect_config_error({{"ed_sizes", {1, 5}}});
  expect_config_error({{"degree", 0}});
  expect_config_error({{"n_replications", 0}});
  expect_config_error({{"validation_size", 0}});
  expect_config_error({{"methods", nlohmann::json::array()}});
  expect_config_error({{"methods", {"ridge"}}});
  expect_config_error({{"weights", "sqrt"}});
  expect_config_error({{"reference_mc", 500}});
  expect_config_error({{"degree", "eight"}});
  EXPECT_THROW(model_by_name("nope"), Error);
}

TEST(Labels, MethodNames) {
  EXPECT_EQ(method_label(Method::Standard, WeightSetting::Unweighted), "PoinCE");
  EXPECT_EQ(method_label(Method::DerivAggregated, WeightSetting::Unweighted), "PoinCE-der-aggr");
  EXPECT_EQ(method_label(Method::Combined, WeightSetting::Wlin), "wPoinCE-comb-regr");
}

TEST(BoxStats, Quantiles) {
  const auto b = box_stats({4.0, 1.0, 3.0, 2.0, 5.0});
  EXPECT_EQ(b.n, 5u);
  EXPECT_DOUBLE_EQ(b.min, 1.0);
  EXPECT_DOUBLE_EQ(b.q1, 2.0);
  EXPECT_DOUBLE_EQ(b.median, 3.0);
  EXPECT_DOUBLE_EQ(b.q3, 4.0);
  EXPECT_DOUBLE_EQ(b.max, 5.0);
  const auto e = box_stats({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(e.q1, 1.75);
  EXPECT_DOUBLE_EQ(e.median, 2.5);
  EXPECT_DOUBLE_EQ(e.q3, 3.25);
  EXPECT_EQ(box_stats({}).n, 0u);
}

TEST(Seeds, LineageIsReproducible) {
  EXPECT_EQ(design_seed(7, 1, 3), design_seed(7, 1, 3));
  std::set<std::uint64_t> seen;
  for (std::size_t e = 0; e < 4; ++e)
    for (std::size_t r = 0; r < 20; ++r) seen.insert(design_seed(7, e, r));
  EXPECT_EQ(seen.size(), 80u);
}

TEST(Experiment, RecordLayout) {
  const auto cfg = small_config();
  const auto res = run_experiment(cfg);
  EXPECT_TRUE(res.failures.empty());
  EXPECT_EQ(res.variables, (std::vector<std::string>{"X1", "X2"}));
  const std::size_t tasks = 2 * 2 * 3;
  EXPECT_EQ(res.lineage.size(), tasks);
  // 4 scalar metrics + 3 per-variable metrics, per method and task
  EXPECT_EQ(res.records.size(), tasks * 3 * (4 + 3 * 2));
  std::set<std::string> methods, metrics;
  for (const auto& r : res.records) {
    methods.insert(r.method);
    metrics.insert(r.metric);
    EXPECT_TRUE(std::isfinite(r.value));
    if (r.metric == "h1_error") {
      EXPECT_GE(r.value, 0.0);
    }
  }
  EXPECT_EQ(methods, (std::set<std::string>{"PoinCE", "PoinCE-der-aggr", "PoinCE-comb-regr"}));
  EXPECT_EQ(metrics, (std::set<std::string>{"h1_error", "l2_error", "loo_error", "n_terms", "total_sobol",
                                            "first_sobol", "dgsm"}));
  for (const auto& l : res.lineage) {
    if (l.bootstrap_id == 0) {
      EXPECT_EQ(l.bootstrap_seed, 0u);
    } else {
      EXPECT_EQ(l.bootstrap_seed, split_seed(l.design_seed, l.bootstrap_id));
    }
  }
  ASSERT_TRUE(res.reference.has_value());
  EXPECT_EQ(res.reference->total.size(), 2u);
  EXPECT_EQ(res.bases.size(), 2u);
}

TEST(Experiment, H1ErrorDominatesL2) {
  const auto res = run_experiment(small_config());
  std::map<std::tuple<std::string, std::size_t, std::size_t, std::size_t>, double> l2;
  for (const auto& r : res.records)
    if (r.metric == "l2_error") l2[{r.method, r.ed_size, r.replicate, r.bootstrap_id}] = r.value;
  for (const auto& r : res.records)
    if (r.metric == "h1_error") {
      EXPECT_GE(r.value, l2.at({r.method, r.ed_size, r.replicate, r.bootstrap_id}));
    }
}

TEST(Experiment, ReplayIsBitIdenticalAcrossWorkerCounts) {
  auto cfg = small_config();
  cfg.weights = WeightSetting::Wlin;
  setenv("PGSA_WORKERS", "1", 1);
  const std::string a = csv_of(run_experiment(cfg));
  setenv("PGSA_WORKERS", "5", 1);
  const std::string b = csv_of(run_experiment(cfg));
  unsetenv("PGSA_WORKERS");
  const std::string c = csv_of(run_experiment(cfg));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  cfg.seed += 1;
  EXPECT_NE(a, csv_of(run_experiment(cfg)));
}

TEST(Experiment, OutputFilesAndReport) {
  auto cfg = small_config();
  cfg.n_bootstrap = 0;
  const fs::path dir = scratch("run");
  const auto res = run_experiment(cfg);
  write_results(res, dir);
  ASSERT_TRUE(fs::exists(dir / "results.csv"));
  ASSERT_TRUE(fs::exists(dir / "lineage.csv"));
  ASSERT_TRUE(fs::exists(dir / "summary.json"));

  std::ifstream in(dir / "results.csv");
  const auto back = read_records_csv(in);
  ASSERT_EQ(back.size(), res.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].method, res.records[i].method);
    EXPECT_EQ(back[i].value, res.records[i].value);
  }
  EXPECT_EQ(slurp(dir / "lineage.csv").substr(0, 56), "ed_size,replicate,bootstrap_id,design_seed,bootstrap_see");

  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary.at("config").at("seed"), cfg.seed);
  EXPECT_TRUE(summary.at("failures").empty());
  EXPECT_EQ(summary.at("reference_sobol").at("total").size(), 2u);
  bool found = false;
  for (const auto& b : summary.at("boxplots")) {
    for (const char* k : {"min", "q1", "median", "q3", "max"}) ASSERT_TRUE(b.contains(k));
    EXPECT_LE(b.at("min").get<double>(), b.at("q1").get<double>());
    EXPECT_LE(b.at("q1").get<double>(), b.at("median").get<double>());
    EXPECT_LE(b.at("median").get<double>(), b.at("q3").get<double>());
    EXPECT_LE(b.at("q3").get<double>(), b.at("max").get<double>());
    if (b.at("method") == "PoinCE" && b.at("metric") == "h1_error" && b.at("ed_size") == 24) {
      found = true;
      EXPECT_EQ(b.at("n"), 2);
    }
  }
  EXPECT_TRUE(found);

  std::ostringstream rep;
  make_report(dir, rep);
  std::istringstream lines(rep.str());
  std::string header, row;
  std::getline(lines, header);
  EXPECT_EQ(header, "metric,variable,method,ed_size,cost_grad_eq_1,cost_grad_eq_d,n,q1,median,q3");
  bool saw_comb = false;
  while (std::getline(lines, row)) {
    if (row.rfind("h1_error,-,PoinCE-comb-regr,12,", 0) == 0) {
      saw_comb = true;
      EXPECT_EQ(row.substr(0, 38), "h1_error,-,PoinCE-comb-regr,12,24,36,2");
    }
    if (row.rfind("h1_error,-,PoinCE,12,", 0) == 0) EXPECT_EQ(row.substr(0, 28), "h1_error,-,PoinCE,12,12,12,2");
  }
  EXPECT_TRUE(saw_comb);
  fs::remove_all(dir);
}

TEST(ExportBasis, UniformCosines) {
  const fs::path dir = scratch("basis");
  const nlohmann::json spec = {{"name", "u01"},
                               {"measure", {{"family", "uniform"}, {"params", {0.0, 1.0}}}},
                               {"weight", "constant"},
                               {"modes", 4},
                               {"mesh_size", 2000}};
  const auto files = export_basis(spec, dir);
  EXPECT_EQ(files.size(), 2u);
  std::ifstream in(dir / "u01.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,psi_1,psi_2,psi_3,psi_4,dpsi_1,dpsi_2,dpsi_3,dpsi_4");
  double worst = 0.0;
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    ASSERT_EQ(v.size(), 9u);
    for (int j = 1; j <= 4; ++j) {
      // sign convention psi_j(b) > 0 gives psi_j = (-1)^j sqrt(2) cos(j pi x)
      const double ref = (j % 2 ? -1.0 : 1.0) * std::sqrt(2.0) * std::cos(j * M_PI * v[0]);
      worst = std::max(worst, std::abs(v[static_cast<std::size_t>(j)] - ref));
    }
    ++rows;
  }
  EXPECT_GT(rows, 100);
  EXPECT_LT(worst, 1e-3);
  const auto ev = nlohmann::json::parse(slurp(dir / "u01_eigenvalues.json"));
  EXPECT_NEAR(ev.at("eigenvalues")[1].get<double>(), M_PI * M_PI, 1e-3 * M_PI * M_PI);
  fs::remove_all(dir);
}

TEST(ExportBasis, ShippedSpecWritesWeights) {
  const fs::path dir = scratch("basis_multi");
  std::ifstream in(fs::path(PGSA_SOURCE_DIR) / "configs" / "basis_examples.json");
  ASSERT_TRUE(in);
  const auto files = export_basis(nlohmann::json::parse(in), dir);
  std::size_t weights = 0;
  for (const auto& f : files) {
    EXPECT_TRUE(fs::exists(f)) << f;
    if (f.filename().string().find("_weight.csv") != std::string::npos) ++weights;
  }
  EXPECT_EQ(weights, 2u);
  fs::remove_all(dir);
}

class Cli : public ::testing::Test {
 protected:
  static int run(const std::string& args) {
    const std::string cmd = std::string("\"") + PGSA_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }
};

TEST_F(Cli, RunBasisReport) {
  const fs::path dir = scratch("cli");
  fs::create_directories(dir);
  nlohmann::json cfg = config_to_json(small_config());
  cfg["output_dir"] = (dir / "out").string();
  std::ofstream(dir / "cfg.json") << cfg.dump();
  EXPECT_EQ(run("run " + (dir / "cfg.json").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "results.csv"));
  EXPECT_EQ(run("report " + (dir / "out").string()), 0);
  EXPECT_EQ(run("run " + (dir / "cfg.json").string() + " -o " + (dir / "out2").string()), 0);
  EXPECT_EQ(slurp(dir / "out" / "results.csv"), slurp(dir / "out2" / "results.csv"));

  const nlohmann::json spec = {{"measure", {{"family", "exponential"}, {"params", {1.0}}, {"truncation", {0.0, 3.0}}}},
                               {"weight", "wlin"},
                               {"modes", 3},
                               {"name", "e1"}};
  std::ofstream(dir / "spec.json") << spec.dump();
  EXPECT_EQ(run("basis " + (dir / "spec.json").string() + " -o " + (dir / "b").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "b" / "e1_weight.csv"));
  fs::remove_all(dir);
}

TEST_F(Cli, ErrorExitCodes) {
  const fs::path dir = scratch("cli_err");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << R"({"ed_sizes": [50, 25]})";
  std::ofstream(dir / "broken.json") << "{ not json";
  EXPECT_EQ(run("run " + (dir / "bad.json").string()), 2);
  EXPECT_EQ(run("run " + (dir / "broken.json").string()), 2);
  EXPECT_EQ(run("report " + dir.string()), 2);
  EXPECT_NE(run(""), 0);
  EXPECT_NE(run("frobnicate"), 0);
  fs::remove_all(dir);
}
