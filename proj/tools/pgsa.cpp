#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "pgsa/experiment.hpp"

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pgsa::Error(pgsa::ErrorKind::Config, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw pgsa::Error(pgsa::ErrorKind::Config, path + ": " + e.what());
  }
}

int cmd_run(const std::string& path, const std::string& out_override) {
  auto cfg = pgsa::config_from_json(read_json(path));
  if (!out_override.empty()) cfg.output_dir = out_override;
  const auto res = pgsa::run_experiment(cfg);
  pgsa::write_results(res, cfg.output_dir);
  std::cout << "wrote " << res.records.size() << " records to " << cfg.output_dir << "\n";
  for (const auto& f : res.failures)
    std::cerr << "fit failed: " << f.method << " ed=" << f.ed_size << " rep=" << f.replicate
              << " boot=" << f.bootstrap_id << ": " << f.message << "\n";
  return res.failures.empty() ? 0 : 1;
}

int cmd_basis(const std::string& path, const std::string& out) {
  for (const auto& p : pgsa::export_basis(read_json(path), out)) std::cout << p.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poincare chaos expansions and global sensitivity analysis"};
  app.require_subcommand(1);

  std::string run_cfg, run_out;
  auto* run = app.add_subcommand("run", "run a batch experiment");
  run->add_option("config", run_cfg, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", run_out, "override output_dir");

  std::string basis_spec, basis_out = ".";
  auto* basis = app.add_subcommand("basis", "export Poincare basis curves");
  basis->add_option("spec", basis_spec, "basis spec (JSON)")->required()->check(CLI::ExistingFile);
  basis->add_option("-o,--output", basis_out, "output directory");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "summarize results.csv");
  report->add_option("dir", report_dir, "results directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_cfg, run_out);
    if (*basis) return cmd_basis(basis_spec, basis_out);
    if (*report) {
      pgsa::make_report(report_dir, std::cout);
      return 0;
    }
  } catch (const pgsa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
