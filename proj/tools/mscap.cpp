// mscap: weighted m-subharmonic envelopes and condenser capacities on grids.
//
//   mscap envelope --config run.cfg [--out DIR]
//   mscap capacity --config run.cfg [--method measure|oracle|outer] [--sweep N]
//   mscap sweep    --config run.cfg [--sweep N]
//   mscap verify   [--seed N] [--n2] [--out DIR]

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mscap/capacity.hpp"
#include "mscap/config.hpp"
#include "mscap/error.hpp"
#include "mscap/io.hpp"
#include "mscap/verify.hpp"

namespace {

using namespace mscap;

struct Flags {
  std::string config;
  int sweep = -1;
  std::uint64_t seed = 7;
  std::string out;
  std::string method;
  double tol = 0.0;
  bool n2 = false;
};

RunConfig load(const Flags& f) {
  RunConfig cfg = parse_config(f.config);
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (!f.method.empty()) cfg.method = f.method;
  if (f.sweep >= 0) cfg.sweep = f.sweep;
  if (f.tol > 0.0) cfg.solver.epsilon = f.tol;
  return cfg;
}

std::string path_in(const RunConfig& cfg, const std::string& suffix) {
  return (std::filesystem::path(cfg.out_dir) / (cfg.prefix + suffix)).string();
}

void print_refinement(const RefinementSummary& s) {
  std::printf("%-24s %-24s\n", "h", "value");
  for (const auto& r : s.rows) std::printf("%-24s %-24s\n", format_double(r.h).c_str(), format_double(r.value).c_str());
  std::printf("extrapolated %s\n", format_double(s.extrapolated).c_str());
  std::printf("order %s\n", format_double(s.order).c_str());
}

int cmd_envelope(const Flags& f) {
  const RunConfig cfg = load(f);
  const EnvelopeSolution sol = solve_envelope(cfg.spec, cfg.solver);
  ensure_directory(cfg.out_dir);
  nlohmann::json side = envelope_summary(sol);
  const RegularityReport reg = regularity_report(sol);
  side["regular"] = reg.regular;
  side["regularity_gap"] = reg.max_gap;
  if (cfg.write_csv) write_envelope_csv(path_in(cfg, "_envelope.csv"), sol);
  if (cfg.write_density) write_measure_csv(path_in(cfg, "_density.csv"), hessian_density(sol.omega, cfg.spec.p()));
  write_json(path_in(cfg, "_envelope.json"), side);
  std::printf("sweeps %ld\nfinal_update %s\nmaximality_residual %s\nboundary_residual %s\nregular %s\n",
              sol.iterations, format_double(sol.final_update).c_str(),
              format_double(sol.maximality_residual).c_str(), format_double(sol.boundary_residual).c_str(),
              reg.regular ? "yes" : "no");
  return 0;
}

int run_sweep(const RunConfig& cfg) {
  const CapacityReport rep = refinement_sweep(cfg.spec, cfg.capacity_options(), cfg.sweep_levels(cfg.sweep));
  ensure_directory(cfg.out_dir);
  write_json(path_in(cfg, "_sweep.json"), rep.to_json());
  print_refinement(rep.refinement);
  return 0;
}

int cmd_capacity(const Flags& f) {
  const RunConfig cfg = load(f);
  if (cfg.sweep > 1) {
    if (cfg.method != "measure") throw Error(ErrorCode::kConstraintError, "--sweep needs method 'measure'");
    return run_sweep(cfg);
  }
  const CapacityOptions opt = cfg.capacity_options();
  nlohmann::json j;
  double value = 0.0;
  if (cfg.method == "measure") {
    const CapacityReport rep = capacity_via_measure(cfg.spec, opt);
    j = rep.to_json();
    value = rep.value;
  } else if (cfg.method == "oracle") {
    const EnvelopeSolution sol = solve_envelope(cfg.spec, opt.solver);
    const CapacityReport rep = capacity_from_envelope(sol, opt);
    const OracleReport orc = capacity_direct_oracle(sol, standard_family(sol), rep.value);
    j = orc.to_json();
    j["spec"] = cfg.spec.to_json();
    j["h"] = cfg.solver.h;
    value = orc.value;
  } else if (cfg.method == "outer") {
    const OuterReport out = outer_capacity(cfg.spec, opt, cfg.outer_factors);
    j = out.report.to_json();
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& l : out.levels) levels.push_back({{"eps", l.eps}, {"value", l.value}});
    j["outer_levels"] = levels;
    j["extrapolated"] = out.extrapolated;
    value = out.report.value;
  } else {
    throw Error(ErrorCode::kConstraintError, "unknown method '" + cfg.method + "' (measure, oracle or outer)");
  }
  ensure_directory(cfg.out_dir);
  write_json(path_in(cfg, "_capacity.json"), j);
  std::printf("%s %s\n", cfg.method.c_str(), format_double(value).c_str());
  return 0;
}

int cmd_sweep(const Flags& f) {
  RunConfig cfg = load(f);
  if (cfg.sweep < 2) cfg.sweep = 3;
  return run_sweep(cfg);
}

int cmd_verify(const Flags& f) {
  const SuiteReport rep = run_suite(default_suite(f.seed, f.n2));
  std::cout << rep.table();
  if (!f.out.empty()) {
    ensure_directory(f.out);
    write_json((std::filesystem::path(f.out) / "verify.json").string(), rep.to_json());
  }
  return rep.pass() ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted m-subharmonic envelopes and condenser capacities"};
  app.require_subcommand(1);
  Flags f;

  auto add_config = [&](CLI::App* c) {
    c->add_option("--config", f.config, "run file")->required();
    c->add_option("--out", f.out, "output directory (overrides [output] dir)");
    c->add_option("--tol", f.tol, "convergence threshold epsilon (update < epsilon h^2)")->check(CLI::PositiveNumber);
  };
  CLI::App* env = app.add_subcommand("envelope", "solve the envelope and dump it");
  add_config(env);
  CLI::App* cap = app.add_subcommand("capacity", "capacity of the condenser");
  add_config(cap);
  cap->add_option("--method", f.method, "measure, oracle or outer")
      ->check(CLI::IsMember({"measure", "oracle", "outer"}));
  cap->add_option("--sweep", f.sweep, "refinement levels (h, h/2, ...)")->check(CLI::NonNegativeNumber);
  CLI::App* swp = app.add_subcommand("sweep", "refinement table with extrapolation and order");
  add_config(swp);
  swp->add_option("--sweep", f.sweep, "refinement levels (default 3)")->check(CLI::NonNegativeNumber);
  CLI::App* ver = app.add_subcommand("verify", "run the property suite");
  ver->add_option("--seed", f.seed, "seed of the randomized battery");
  ver->add_option("--out", f.out, "directory for verify.json");
  ver->add_flag("--n2", f.n2, "add the C^2 radial condensers (slow)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*env) return cmd_envelope(f);
    if (*cap) return cmd_capacity(f);
    if (*swp) return cmd_sweep(f);
    return cmd_verify(f);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
