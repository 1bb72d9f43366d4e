#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgsa/bench.hpp"
#include "pgsa/chaos.hpp"
#include "pgsa/error.hpp"
#include "pgsa/gsa.hpp"
#include "pgsa/regression.hpp"
#include "pgsa/rng.hpp"
#include "pgsa/spectral.hpp"
#include "pgsa/weights.hpp"

namespace pgsa {

enum class WeightSetting { Unweighted, Wlin };

/// Batch experiment description; see README for the JSON schema.
struct ExperimentConfig {
  std::string model = "toy";
  std::size_t toy_dimension = 4;
  std::vector<Measure1D> inputs;  // empty: the model's own inputs
  WeightSetting weights = WeightSetting::Unweighted;
  std::vector<Method> methods = {Method::Standard, Method::DerivAggregated, Method::Combined};
  int degree = 8;
  std::vector<std::size_t> ed_sizes = {25, 50, 100, 200};
  std::size_t n_replications = 1;
  std::size_t n_bootstrap = 30;
  std::size_t validation_size = 100000;
  std::size_t mesh_size = 2000;
  std::size_t reference_mc = 100000;  // 0 skips the pick-freeze reference
  std::uint64_t seed = 42;
  std::string output_dir = "results";

  void validate() const {
    if (degree < 1) throw Error(ErrorKind::Config, "degree must be >= 1");
    if (ed_sizes.empty()) throw Error(ErrorKind::Config, "ed_sizes must not be empty");
    for (std::size_t i = 0; i < ed_sizes.size(); ++i) {
      if (ed_sizes[i] < 2) throw Error(ErrorKind::Config, "ed sizes must be >= 2");
      if (i > 0 && ed_sizes[i] <= ed_sizes[i - 1]) throw Error(ErrorKind::Config, "ed_sizes must be sorted ascending");
    }
    if (n_replications < 1) throw Error(ErrorKind::Config, "n_replications must be >= 1");
    if (validation_size < 1) throw Error(ErrorKind::Config, "validation_size must be >= 1");
    if (methods.empty()) throw Error(ErrorKind::Config, "methods must not be empty");
    if (reference_mc != 0 && reference_mc < 10000) throw Error(ErrorKind::Config, "reference_mc must be 0 or >= 1e4");
  }
};

inline Measure1D measure_from_json(const nlohmann::json& j) {
  std::optional<std::pair<double, double>> trunc;
  if (j.contains("truncation") && !j.at("truncation").is_null()) {
    const auto t = j.at("truncation").get<std::vector<double>>();
    if (t.size() != 2) throw Error(ErrorKind::Config, "truncation must be [lo, hi]");
    trunc = std::pair{t[0], t[1]};
  }
  return make_measure(family_from_string(j.at("family").get<std::string>()),
                      j.at("params").get<std::vector<double>>(), trunc);
}

inline Method method_from_string(const std::string& s) {
  if (s == "standard" || s == "Standard") return Method::Standard;
  if (s == "aggregated" || s == "DerivAggregated") return Method::DerivAggregated;
  if (s == "combined" || s == "Combined") return Method::Combined;
  throw Error(ErrorKind::Config, "unknown method '" + s + "'");
}

/// Paper-style label: PoinCE, PoinCE-der-aggr, PoinCE-comb-regr, w-prefixed
/// in the weighted setting.
inline std::string method_label(Method m, WeightSetting w) {
  std::string base = w == WeightSetting::Wlin ? "wPoinCE" : "PoinCE";
  switch (m) {
    case Method::Standard: return base;
    case Method::DerivAggregated: return base + "-der-aggr";
    case Method::Combined: return base + "-comb-regr";
  }
  return base;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    c.model = j.value("model", c.model);
    c.toy_dimension = j.value("dimension", c.toy_dimension);
    if (j.contains("inputs"))
      for (const auto& m : j.at("inputs")) c.inputs.push_back(measure_from_json(m));
    const std::string w = j.value("weights", std::string("unweighted"));
    if (w == "unweighted" || w == "constant")
      c.weights = WeightSetting::Unweighted;
    else if (w == "wlin" || w == "weighted")
      c.weights = WeightSetting::Wlin;
    else
      throw Error(ErrorKind::Config, "weights must be 'unweighted' or 'wlin'");
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(method_from_string(m.get<std::string>()));
    }
    c.degree = j.value("degree", c.degree);
    if (j.contains("ed_sizes")) c.ed_sizes = j.at("ed_sizes").get<std::vector<std::size_t>>();
    c.n_replications = j.value("n_replications", c.n_replications);
    c.n_bootstrap = j.value("n_bootstrap", c.n_bootstrap);
    c.validation_size = j.value("validation_size", c.validation_size);
    c.mesh_size = j.value("mesh_size", c.mesh_size);
    c.reference_mc = j.value("reference_mc", c.reference_mc);
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  c.validate();
  return c;
}

/// One long-format row of results.csv.
struct Record {
  std::string method;
  std::size_t ed_size = 0;
  std::size_t replicate = 0;
  std::size_t bootstrap_id = 0;  // 0 = fit on the design itself, 1..B = resamples
  std::string metric;
  std::string variable;  // "-" for scalar metrics
  double value = 0.0;
};

struct Lineage {
  std::size_t ed_size = 0, replicate = 0, bootstrap_id = 0;
  std::uint64_t design_seed = 0, bootstrap_seed = 0;
};

struct Failure {
  std::string method;
  std::size_t ed_size = 0, replicate = 0, bootstrap_id = 0;
  std::string message;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<std::string> variables;
  std::vector<Record> records;
  std::vector<Lineage> lineage;
  std::vector<Failure> failures;
  std::optional<SobolEstimate> reference;
  std::vector<nlohmann::json> bases;  // eigenvalue summaries per variable
};

/// Seeds: design of (ed index e, replicate r) = split(split(root, 1), e*2^20 + r);
/// bootstrap b of that design = split(design seed, b); validation = split(root, 2);
/// reference = split(root, 3).
inline std::uint64_t design_seed(std::uint64_t root, std::size_t ed_index, std::size_t rep) {
  return split_seed(split_seed(root, 1), (static_cast<std::uint64_t>(ed_index) << 20) + rep);
}

inline std::vector<BasisPtr> build_bases(const ProductMeasure& mu, WeightSetting ws, int degree, std::size_t mesh) {
  std::vector<BasisPtr> bases(mu.dim());
  for (std::size_t k = 0; k < mu.dim(); ++k) {
    const Weight1D w = ws == WeightSetting::Wlin ? wlin_compute(mu[k], std::max<std::size_t>(2 * mesh, 100))
                                                 : constant_weight(1.0);
    bases[k] = std::make_shared<PoincareBasis1D>(build_basis(mu[k], w, static_cast<std::size_t>(degree), mesh));
  }
  return bases;
}

struct ValidationSet {
  Eigen::MatrixXd X, G;
  Eigen::VectorXd y;
  std::vector<Eigen::VectorXd> w;  // w_k at the validation points
};

struct Errors {
  double l2 = 0.0, h1 = 0.0;
};

/// L2(mu) error mean((M - Mhat)^2) and the H1(mu, w) error, which adds
/// sum_k mean(w_k (dM/dx_k - dMhat/dx_k)^2).
inline Errors validation_errors(const ChaosExpansion& e, const ValidationSet& v) {
  const Eigen::VectorXd yp = predict(e, v.X);
  const Eigen::MatrixXd gp = predict_grad(e, v.X);
  Errors err;
  err.l2 = (v.y - yp).squaredNorm() / static_cast<double>(v.y.size());
  err.h1 = err.l2;
  for (Eigen::Index k = 0; k < v.X.cols(); ++k)
    err.h1 += (v.w[static_cast<std::size_t>(k)].array() * (v.G.col(k) - gp.col(k)).array().square()).mean();
  return err;
}

inline std::size_t worker_count() {
  if (const char* env = std::getenv("PGSA_WORKERS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs every (ed size, replicate, bootstrap) task and every method. Records
/// are produced in task order whatever the worker count, so output files are
/// bit-identical for a given config.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  BenchmarkModel model = model_by_name(cfg.model, cfg.toy_dimension);
  if (!cfg.inputs.empty()) {
    if (cfg.inputs.size() != model.dim()) throw Error(ErrorKind::Config, "inputs must list one measure per variable");
    model.inputs = ProductMeasure(cfg.inputs);
  }
  ExperimentResult res;
  res.config = cfg;
  res.variables = model.variables;
  const auto bases = build_bases(model.inputs, cfg.weights, cfg.degree, cfg.mesh_size);
  for (std::size_t k = 0; k < bases.size(); ++k) {
    auto j = eigenvalues_json(*bases[k]);
    j["variable"] = model.variables[k];
    res.bases.push_back(std::move(j));
  }
  const ChaosBasis cb(total_degree_set(model.dim(), cfg.degree), bases);

  ValidationSet val;
  val.X = sample(model.inputs, cfg.validation_size, split_seed(cfg.seed, 2));
  val.y = model.eval_rows(val.X);
  val.G = model.grad_rows(val.X);
  for (std::size_t k = 0; k < model.dim(); ++k) {
    Eigen::VectorXd wk(val.X.rows());
    for (Eigen::Index i = 0; i < val.X.rows(); ++i) wk(i) = cb.basis(k).weight()(val.X(i, static_cast<Eigen::Index>(k)));
    val.w.push_back(std::move(wk));
  }
  if (cfg.reference_mc > 0) res.reference = reference_sobol(model, cfg.reference_mc, split_seed(cfg.seed, 3));

  struct Task {
    std::size_t ed_index, ed, rep, boot;
  };
  std::vector<Task> tasks;
  for (std::size_t e = 0; e < cfg.ed_sizes.size(); ++e)
    for (std::size_t r = 0; r < cfg.n_replications; ++r)
      for (std::size_t b = 0; b <= cfg.n_bootstrap; ++b) tasks.push_back({e, cfg.ed_sizes[e], r, b});

  struct TaskOut {
    std::vector<Record> records;
    std::vector<Failure> failures;
    Lineage lineage;
  };
  std::vector<TaskOut> outs(tasks.size());
  const std::size_t d = model.dim();

  auto run_task = [&](std::size_t ti) {
    const Task& t = tasks[ti];
    TaskOut& out = outs[ti];
    const std::uint64_t dseed = design_seed(cfg.seed, t.ed_index, t.rep);
    out.lineage = {t.ed, t.rep, t.boot, dseed, t.boot ? split_seed(dseed, t.boot) : 0};
    DesignData data;
    data.X = sample(model.inputs, t.ed, dseed);
    data.y = model.eval_rows(data.X);
    data.G = model.grad_rows(data.X);
    if (t.boot) data = bootstrap_rows(data, out.lineage.bootstrap_seed);
    for (Method m : cfg.methods) {
      const std::string label = method_label(m, cfg.weights);
      auto rec = [&](const std::string& metric, const std::string& var, double v) {
        out.records.push_back({label, t.ed, t.rep, t.boot, metric, var, v});
      };
      try {
        const FitResult fr = fit(m, cb, data);
        const ChaosExpansion ex(cb, fr.coefficients);
        const Errors err = validation_errors(ex, val);
        rec("h1_error", "-", err.h1);
        rec("l2_error", "-", err.l2);
        rec("loo_error", "-", fr.loo_error);
        rec("n_terms", "-", static_cast<double>(fr.active_set.size()));
        const GsaReport g = analyze(ex);
        for (std::size_t k = 0; k < d; ++k) rec("total_sobol", model.variables[k], g.total_sobol[k]);
        for (std::size_t k = 0; k < d; ++k) rec("first_sobol", model.variables[k], g.first_sobol[k]);
        for (std::size_t k = 0; k < d; ++k) rec("dgsm", model.variables[k], g.dgsm[k]);
      } catch (const Error& e) {
        out.failures.push_back({label, t.ed, t.rep, t.boot, e.what()});
        rec("fit_failed", "-", 1.0);
      }
    }
  };

  const std::size_t nw = std::min(worker_count(), tasks.size());
  if (nw <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::mutex err_mu;
    std::exception_ptr first_error;
    for (std::size_t w = 0; w < nw; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
          try {
            run_task(i);
          } catch (...) {
            std::lock_guard lock(err_mu);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  for (auto& o : outs) {
    res.records.insert(res.records.end(), o.records.begin(), o.records.end());
    res.failures.insert(res.failures.end(), o.failures.begin(), o.failures.end());
    res.lineage.push_back(o.lineage);
  }
  return res;
}

struct BoxStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  std::size_t n = 0;
};

/// Quantiles by linear interpolation between order statistics.
inline BoxStats box_stats(std::vector<double> v) {
  BoxStats s;
  s.n = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  s.min = v.front();
  s.q1 = q(0.25);
  s.median = q(0.5);
  s.q3 = q(0.75);
  s.max = v.back();
  return s;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  std::vector<std::string> methods;
  for (Method m : c.methods) methods.push_back(to_string(m));
  return {{"model", c.model},
          {"dimension", c.toy_dimension},
          {"weights", c.weights == WeightSetting::Wlin ? "wlin" : "unweighted"},
          {"methods", methods},
          {"degree", c.degree},
          {"ed_sizes", c.ed_sizes},
          {"n_replications", c.n_replications},
          {"n_bootstrap", c.n_bootstrap},
          {"validation_size", c.validation_size},
          {"mesh_size", c.mesh_size},
          {"reference_mc", c.reference_mc},
          {"seed", c.seed},
          {"output_dir", c.output_dir}};
}

inline void write_records_csv(const std::vector<Record>& records, std::ostream& os) {
  os.precision(17);
  os << "method,ed_size,replicate,bootstrap_id,metric,variable,value\n";
  for (const auto& r : records)
    os << r.method << ',' << r.ed_size << ',' << r.replicate << ',' << r.bootstrap_id << ',' << r.metric << ','
       << r.variable << ',' << r.value << '\n';
}

inline nlohmann::json summarize(const ExperimentResult& res) {
  std::map<std::tuple<std::string, std::size_t, std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : res.records) groups[{r.method, r.ed_size, r.metric, r.variable}].push_back(r.value);
  nlohmann::json stats = nlohmann::json::array();
  for (const auto& [key, vals] : groups) {
    const auto& [method, ed, metric, var] = key;
    const BoxStats b = box_stats(vals);
    stats.push_back({{"method", method}, {"ed_size", ed}, {"metric", metric}, {"variable", var}, {"n", b.n},
                     {"min", b.min}, {"q1", b.q1}, {"median", b.median}, {"q3", b.q3}, {"max", b.max}});
  }
  nlohmann::json j;
  j["config"] = config_to_json(res.config);
  j["variables"] = res.variables;
  j["bases"] = res.bases;
  j["boxplots"] = stats;
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : res.failures)
    fails.push_back({{"method", f.method}, {"ed_size", f.ed_size}, {"replicate", f.replicate},
                     {"bootstrap_id", f.bootstrap_id}, {"error", f.message}});
  j["failures"] = fails;
  if (res.reference) j["reference_sobol"] = {{"total", res.reference->total}, {"std_error", res.reference->std_error}};
  return j;
}

/// results.csv, lineage.csv and summary.json in cfg.output_dir.
inline void write_results(const ExperimentResult& res, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "results.csv");
    write_records_csv(res.records, os);
  }
  {
    std::ofstream os(dir / "lineage.csv");
    os << "ed_size,replicate,bootstrap_id,design_seed,bootstrap_seed\n";
    for (const auto& l : res.lineage)
      os << l.ed_size << ',' << l.replicate << ',' << l.bootstrap_id << ',' << l.design_seed << ','
         << l.bootstrap_seed << '\n';
  }
  std::ofstream os(dir / "summary.json");
  os << summarize(res).dump(2) << '\n';
}

inline Weight1D weight_from_json(const nlohmann::json& j, const Measure1D& mu, std::size_t steps) {
  const std::string w = j.is_string() ? j.get<std::string>() : j.value("kind", std::string("constant"));
  if (w == "constant") return constant_weight(j.is_object() ? j.value("value", 1.0) : 1.0);
  if (w == "wlin") return wlin_compute(mu, steps);
  throw Error(ErrorKind::Config, "weight must be 'constant' or 'wlin'");
}

/// Writes basis curves (constant mode omitted), eigenvalues and, for w_lin,
/// the weight grid. Spec: {"measure": {...}, "weight": "constant"|"wlin",
/// "modes": K, "mesh_size": n, "name": "prefix"}; or {"bases": [spec, ...]}.
inline std::vector<std::filesystem::path> export_basis(const nlohmann::json& spec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto one = [&](const nlohmann::json& s, std::size_t idx) {
    const Measure1D mu = measure_from_json(s.at("measure"));
    const std::size_t mesh = s.value("mesh_size", std::size_t{2000});
    const Weight1D w = weight_from_json(s.value("weight", nlohmann::json("constant")), mu, 2 * mesh);
    const auto K = s.value("modes", std::size_t{4});
    const PoincareBasis1D basis = build_basis(mu, w, K, mesh);
    const std::string name = s.value("name", "basis" + std::to_string(idx));
    const auto csv = dir / (name + ".csv");
    {
      std::ofstream os(csv);
      export_basis_csv(basis, os, true);
    }
    const auto js = dir / (name + "_eigenvalues.json");
    std::ofstream(js) << eigenvalues_json(basis).dump(2) << '\n';
    written.push_back(csv);
    written.push_back(js);
    if (w.kind() == Weight1D::Kind::GridBacked) {
      const auto wcsv = dir / (name + "_weight.csv");
      std::ofstream os(wcsv);
      export_weight_csv(w, os);
      written.push_back(wcsv);
    }
  };
  if (spec.contains("bases")) {
    std::size_t i = 0;
    for (const auto& s : spec.at("bases")) one(s, i++);
  } else {
    one(spec, 0);
  }
  return written;
}

inline std::vector<Record> read_records_csv(std::istream& is) {
  std::vector<Record> out;
  std::string line;
  if (!std::getline(is, line) || line.rfind("method,ed_size", 0) != 0)
    throw Error(ErrorKind::Config, "results.csv has an unexpected header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> f;
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw Error(ErrorKind::Config, "malformed results row: " + line);
    out.push_back({f[0], std::stoul(f[1]), std::stoul(f[2]), std::stoul(f[3]), f[4], f[5], std::stod(f[6])});
  }
  return out;
}

/// Median table over all replicates/bootstraps with both cost-equivalence
/// views: model-call cost of one design point is 1 for value-only methods and
/// 2 (gradient = 1 call) or 1 + d (gradient = d calls) for gradient methods.
inline void make_report(const std::filesystem::path& dir, std::ostream& os) {
  std::ifstream in(dir / "results.csv");
  if (!in) throw Error(ErrorKind::Config, "no results.csv in " + dir.string());
  const auto records = read_records_csv(in);
  std::size_t d = 0;
  {
    std::ifstream sj(dir / "summary.json");
    if (sj) d = nlohmann::json::parse(sj).at("variables").size();
  }
  std::map<std::tuple<std::string, std::size_t, std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : records) groups[{r.metric, r.ed_size, r.method, r.variable}].push_back(r.value);
  os << "metric,variable,method,ed_size,cost_grad_eq_1,cost_grad_eq_d,n,q1,median,q3\n";
  os.precision(6);
  for (const auto& [key, vals] : groups) {
    const auto& [metric, ed, method, var] = key;
    const bool uses_grad = method.find("-der-") != std::string::npos || method.find("-comb-") != std::string::npos;
    const BoxStats b = box_stats(vals);
    os << metric << ',' << var << ',' << method << ',' << ed << ',' << (uses_grad ? 2 * ed : ed) << ','
       << (uses_grad ? (1 + d) * ed : ed) << ',' << b.n << ',' << b.q1 << ',' << b.median << ',' << b.q3 << '\n';
  }
}

}  // namespace pgsa
