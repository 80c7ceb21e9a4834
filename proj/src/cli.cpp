#include "metriplex/cli.hpp"

#include "metriplex/chm.hpp"
#include "metriplex/chm_thermal.hpp"
#include "metriplex/fokker_planck.hpp"
#include "metriplex/io.hpp"
#include "metriplex/parallel.hpp"
#include "metriplex/stochastic.hpp"
#include "metriplex/systems.hpp"
#include "metriplex/verify.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

namespace metriplex::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

SystemParams system_params(const json& cfg) {
  SystemParams sp;
  sp.K = cfg["system"]["K"];
  sp.c = cfg["system"]["c"];
  sp.file = cfg["system"].value("file", "");
  return sp;
}

PhaseGrid grid_from(const json& g, int min_cells) {
  std::vector<Axis> axes;
  for (std::size_t a = 0; a < g["cells"].size(); ++a)
    axes.push_back({g["min"][a].get<double>(), g["max"][a].get<double>(),
                    g["cells"][a].get<int>()});
  return PhaseGrid(axes, min_cells);
}

Vector vec(const json& j) {
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

std::vector<std::string> casimir_columns(std::size_t m) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < m; ++k) out.push_back(fmt::format("C{}", k + 1));
  return out;
}

void run_fpe(const json& cfg, io::RunManifest& man) {
  const HamiltonianSystem sys =
      make_system(cfg["system"]["name"], system_params(cfg));
  const fp::Solver solver(sys, grid_from(cfg["grid"], 8), cfg["D"].get<double>());
  const fp::BetaSetting mode = fp::BetaSetting::parse(cfg["beta_mode"]);
  GridDistribution f0 =
      fp::gaussian(solver.grid(), vec(cfg["initial"]["mean"]), vec(cfg["initial"]["std"]));
  const double beta0 = mode.adaptive ? solver.adaptive_beta(f0) : mode.value;
  const double dt = cfg.contains("dt") ? cfg["dt"].get<double>()
                                       : 0.5 * solver.stability_bound(beta0);
  fp::RelaxOptions opt;
  opt.record_every = cfg["output"]["every"];
  for (const auto& m : cfg["mu"]) opt.mu.push_back(m.get<double>());
  const fp::RelaxResult res = solver.relax_to_equilibrium(
      f0, dt, cfg["t_end"].get<double>(), mode, opt);

  std::vector<std::string> header = {"t", "E", "S", "beta"};
  for (auto& c : casimir_columns(sys.casimirs.size())) header.push_back(c);
  header.push_back("dSdt");
  header.push_back("L1_eq");
  io::CsvTable csv(header);
  for (const auto& r : res.series) {
    std::vector<double> row = {r.t, r.E, r.S, r.beta};
    row.insert(row.end(), r.casimirs.begin(), r.casimirs.end());
    row.push_back(r.entropy_production);
    row.push_back(r.L1_eq);
    csv.add_row(row);
  }
  man.write("diagnostics.csv", csv.str());
  man.write("final_f.bin", io::pack_f64(res.final.values));
  json side = {{"array", "final_f.bin"},
               {"dtype", "float64"},
               {"byte_order", "little"},
               {"count", res.final.values.size()},
               {"time", res.final.time},
               {"system", sys.name},
               {"grid", solver.grid().to_json()}};
  man.write("final_f.json", side.dump(2) + "\n");
  man.set("summary", {{"dt", dt},
                      {"steps", res.steps},
                      {"max_entropy_drop", res.max_entropy_drop},
                      {"max_energy_drift", res.max_energy_drift},
                      {"max_mass_drift", res.max_mass_drift},
                      {"max_negative_mass", res.max_negative_mass},
                      {"final_L1_eq", res.series.back().L1_eq}});
}

void run_sde(const json& cfg, io::RunManifest& man) {
  const HamiltonianSystem sys =
      make_system(cfg["system"]["name"], system_params(cfg));
  const int n = sys.dimension();
  const long N = cfg["particles"];
  if (N < 1) throw ConfigError("key 'particles' must be at least 1");
  const double D = cfg["D"];
  if (!(D >= 0.0)) throw ConfigError("key 'D' must be nonnegative");
  const std::uint64_t seed = cfg["seed"];
  const Vector mean = vec(cfg["initial"]["mean"]);
  const Vector sd = vec(cfg["initial"]["std"]);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix X(n, N);
  for (long p = 0; p < N; ++p)
    for (int i = 0; i < n; ++i) X(i, p) = mean[i] + sd[i] * normal(rng);

  sde::EvolveOptions opt;
  opt.record_every = cfg["output"]["every"];
  if (cfg.contains("density_grid"))
    opt.density_grid = grid_from(cfg["density_grid"], 1);
  const fp::BetaSetting mode = fp::BetaSetting::parse(cfg["beta_mode"]);
  sde::FrictionModel fr;
  if (mode.adaptive) {
    if (!opt.density_grid)
      throw ConfigError("beta_mode 'adaptive' needs key 'density_grid'");
    fr = sde::FrictionModel::adaptive(0.0, D, cfg["adapt_every"].get<int>());
  } else {
    fr = sde::FrictionModel::fixed(mode.value, D);
  }
  sde::Ensemble ens(std::move(X), {D, seed}, fr);
  const double dt = cfg["dt"];
  std::optional<sde::EvolveResult> res;
  try {
    res = sde::evolve(std::move(ens), sys, dt, cfg["steps"].get<long>(), opt);
  } catch (const sde::BlowUpError& e) {
    man.set("failure", {{"error", e.what()}, {"last_good_time", e.last_good_time()}});
    throw;
  }
  std::vector<std::string> header = {"t", "E", "S", "beta"};
  for (auto& c : casimir_columns(sys.casimirs.size())) header.push_back(c);
  io::CsvTable csv(header);
  for (const auto& d : res->series) {
    std::vector<double> row = {d.t, d.E_mean, d.entropy_estimate, d.beta_estimate};
    row.insert(row.end(), d.casimir_means.begin(), d.casimir_means.end());
    csv.add_row(row);
  }
  man.write("diagnostics.csv", csv.str());
  const Matrix& P = res->final.particles();
  if (cfg["output"]["snapshot"] == "csv") {
    std::vector<std::string> cols;
    for (int i = 0; i < n; ++i) cols.push_back(fmt::format("x{}", i + 1));
    io::CsvTable snap(cols);
    for (long p = 0; p < P.cols(); ++p) {
      std::vector<double> row(P.col(p).data(), P.col(p).data() + n);
      snap.add_row(row);
    }
    man.write("ensemble.csv", snap.str());
  } else {
    // Column-major storage: particle p occupies entries [p n, (p+1) n).
    std::vector<double> flat(P.data(), P.data() + P.size());
    man.write("ensemble.bin", io::pack_f64(flat));
    json side = {{"array", "ensemble.bin"},
                 {"dtype", "float64"},
                 {"byte_order", "little"},
                 {"shape", {P.cols(), n}},
                 {"layout", "particle-major: coordinates of one particle are contiguous"},
                 {"time", res->final.time()},
                 {"system", sys.name}};
    man.write("ensemble.json", side.dump(2) + "\n");
  }
}

json state_sidecar(const chm::SpectralState& s, const std::string& file, double t) {
  return {{"array", file},
          {"dtype", "complex128 as (re, im) float64 pairs"},
          {"byte_order", "little"},
          {"K", s.K()},
          {"c", s.c()},
          {"count", s.box().size()},
          {"ordering", "row-major over (n, m), n outer, m inner, n and m from -K to K"},
          {"time", t}};
}

void run_chm_integrate(const json& cfg, io::RunManifest& man) {
  const int K = cfg["system"]["K"];
  const double c = cfg["system"]["c"];
  std::mt19937_64 rng(cfg["seed"].get<std::uint64_t>());
  const chm::SpectralState s0 = chm::random_state(K, c, rng, cfg["initial"]["norm"]);
  const double dt = cfg["dt"];
  const long steps = cfg["steps"];
  const auto res = chm::integrate_deterministic(s0, dt, steps, cfg["output"]["every"]);
  io::CsvTable csv({"t", "H", "C", "reality_violation"});
  for (const auto& r : res.series) csv.add_row({r.t, r.H, r.C, r.reality});
  man.write("diagnostics.csv", csv.str());
  std::vector<double> flat;
  for (const auto& v : res.state.coeffs()) {
    flat.push_back(v.real());
    flat.push_back(v.imag());
  }
  man.write("state.bin", io::pack_f64(flat));
  man.write("state.json", state_sidecar(res.state, "state.bin", dt * steps).dump(2) + "\n");
  const auto cw = chm::casimir(res.state);
  if (cw.warning) man.set("warning", *cw.warning);
  const double H0 = res.series.front().H, C0 = res.series.front().C;
  man.set("summary", {{"relative_H_drift", std::abs(res.series.back().H - H0) / H0},
                      {"relative_C_drift", std::abs(res.series.back().C - C0) / C0}});
}

void run_chm_thermalize(const json& cfg, io::RunManifest& man) {
  chm::ThermalizeConfig tc;
  tc.K = cfg["system"]["K"];
  tc.c = cfg["system"]["c"];
  tc.D = cfg["D"];
  tc.beta = cfg["beta"];
  tc.mu = cfg["mu"];
  tc.dt = cfg["dt"];
  tc.steps = cfg["steps"];
  tc.particles = cfg["particles"];
  tc.seed = cfg["seed"];
  tc.sample_every = cfg["sample_every"];
  tc.quench_beta = cfg["quench"]["beta"];
  tc.quench_steps = cfg["quench"]["steps"];
  const auto res = chm::thermalize(tc);
  io::CsvTable spec({"n", "m", "alpha_nm", "mean_sq_amp", "predicted", "std_error"});
  for (const auto& r : res.spectrum)
    spec.add_row({static_cast<double>(r.n), static_cast<double>(r.m), r.alpha,
                  r.mean_sq, r.predicted, r.std_error});
  man.write("spectrum.csv", spec.str());
  io::CsvTable csv({"t", "E", "S", "beta", "C1"});
  for (const auto& d : res.series)
    csv.add_row({d.t, d.E_mean, d.entropy_estimate, d.beta_estimate,
                 d.casimir_means.empty() ? std::nan("") : d.casimir_means[0]});
  man.write("diagnostics.csv", csv.str());
  double worst = 0.0;
  for (const auto& r : res.spectrum)
    worst = std::max(worst, std::abs(r.mean_sq / r.predicted - 1.0));
  const chm::PartitionFunction pf = chm::partition_function(tc.K, tc.beta, tc.mu);
  man.set("summary", {{"max_relative_spectrum_error", worst},
                      {"snapshots", res.snapshots},
                      {"H_after_quench", res.H_after_quench},
                      {"H_final", res.H_final},
                      {"H_equilibrium", res.H_equilibrium},
                      {"partition_function", pf.Z},
                      {"log_partition_function", pf.log_Z},
                      {"partition_function_literal",
                       {{"re", pf.literal.real()}, {"im", pf.literal.imag()}}}});
}

}  // namespace

std::string execute(const json& cfg) {
  io::RunManifest man(cfg["output"]["dir"].get<std::string>(), cfg);
  const std::string scenario = cfg["scenario"];
  try {
    if (scenario == "fpe") run_fpe(cfg, man);
    else if (scenario == "sde") run_sde(cfg, man);
    else if (scenario == "chm-integrate") run_chm_integrate(cfg, man);
    else if (scenario == "chm-thermalize") run_chm_thermalize(cfg, man);
  } catch (const NumericalError& e) {
    man.set("error", e.what());
    man.finish("numerical_failure");
    throw;
  }
  return man.finish("ok").string();
}

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path, e.what()));
  }
}

struct Globals {
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out;
};

int run_config(json cfg, const Globals& g) {
  if (g.seed) cfg["seed"] = *g.seed;
  if (!g.out.empty()) cfg["output"]["dir"] = g.out;
  const json norm = normalize_config(cfg);
  const std::string path = execute(norm);
  std::cout << "wrote " << path << "\n";
  return kOk;
}

json base_config(const std::string& config_path, const std::string& scenario) {
  json cfg = config_path.empty()
                 ? json{{"schema", kSchema}, {"scenario", scenario}}
                 : read_json(config_path);
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  if (!cfg.contains("scenario")) cfg["scenario"] = scenario;
  if (cfg["scenario"] != scenario)
    throw ConfigError(fmt::format("config scenario '{}' does not match subcommand '{}'",
                                  cfg["scenario"].dump(), scenario));
  return cfg;
}

int emit_report(const json& rep, const Globals& g, const std::string& name) {
  std::cout << rep.dump(2) << "\n";
  if (!g.out.empty()) {
    io::RunManifest man(g.out, {{"report", name}});
    man.write(name, rep.dump(2) + "\n");
    man.finish(rep.value("passed", false) ? "ok" : "verification_failed");
  }
  return rep.value("passed", false) ? kOk : kVerificationFailed;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Metriplectic dynamics laboratory", "metriplex"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides config)");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output directory");

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "execute a run config");
  run_cmd->add_option("--config", config_path, "JSON run config")->required();

  // fpe
  auto* fpe_cmd = app.add_subcommand("fpe", "grid Fokker-Planck relaxation");
  std::string fpe_config, fpe_system, fpe_beta;
  std::optional<double> fpe_D, fpe_dt, fpe_tend;
  std::optional<int> fpe_cells;
  fpe_cmd->add_option("--config", fpe_config, "JSON run config");
  fpe_cmd->add_option("--system", fpe_system, "registered system");
  fpe_cmd->add_option("--D", fpe_D, "diffusion amplitude");
  fpe_cmd->add_option("--beta-mode", fpe_beta, "adaptive | fixed:<value>");
  fpe_cmd->add_option("--dt", fpe_dt, "time step");
  fpe_cmd->add_option("--t-end", fpe_tend, "final time");
  fpe_cmd->add_option("--cells", fpe_cells, "cells per axis");

  // sde
  auto* sde_cmd = app.add_subcommand("sde", "particle ensemble integration");
  std::string sde_config, sde_system, sde_beta;
  std::optional<double> sde_D, sde_dt;
  std::optional<long> sde_steps, sde_particles;
  sde_cmd->add_option("--config", sde_config, "JSON run config");
  sde_cmd->add_option("--system", sde_system, "registered system");
  sde_cmd->add_option("--D", sde_D, "diffusion amplitude");
  sde_cmd->add_option("--beta-mode", sde_beta, "adaptive | fixed:<value>");
  sde_cmd->add_option("--dt", sde_dt, "time step");
  sde_cmd->add_option("--steps", sde_steps, "number of steps");
  sde_cmd->add_option("--particles", sde_particles, "ensemble size");

  // chm
  auto* chm_cmd = app.add_subcommand("chm", "truncated Charney-Hasegawa-Mima system");
  chm_cmd->require_subcommand(1);
  int chm_K = 0;
  double chm_c = 0.0;
  std::optional<double> chm_dt, chm_D, chm_beta, chm_mu, chm_qbeta, chm_norm;
  std::optional<long> chm_steps, chm_particles, chm_qsteps;
  int chm_points = 100;
  std::string chm_config;
  auto* chm_int = chm_cmd->add_subcommand("integrate", "deterministic RK4 run");
  auto* chm_th = chm_cmd->add_subcommand("thermalize", "stochastic thermalization");
  auto* chm_ver = chm_cmd->add_subcommand("verify", "identity checks");
  for (auto* sc : {chm_int, chm_th, chm_ver}) {
    sc->add_option("--K", chm_K, "truncation half-width");
    sc->add_option("--c", chm_c, "linear drift parameter");
  }
  for (auto* sc : {chm_int, chm_th}) {
    sc->add_option("--config", chm_config, "JSON run config");
    sc->add_option("--dt", chm_dt, "time step");
    sc->add_option("--steps", chm_steps, "number of steps");
  }
  chm_int->add_option("--norm", chm_norm, "initial coefficient norm");
  chm_th->add_option("--D", chm_D, "diffusion amplitude");
  chm_th->add_option("--beta", chm_beta, "inverse temperature");
  chm_th->add_option("--mu", chm_mu, "Casimir multiplier");
  chm_th->add_option("--particles", chm_particles, "ensemble size");
  chm_th->add_option("--quench-beta", chm_qbeta, "beta of the heating phase");
  chm_th->add_option("--quench-steps", chm_qsteps, "steps of the heating phase");
  chm_ver->add_option("--points", chm_points, "random states");

  // verify
  auto* ver_cmd = app.add_subcommand("verify", "identity checks for a system");
  std::string ver_name, ver_file;
  int ver_K = 2, ver_points = 100;
  double ver_c = 0.0;
  bool ver_no_axioms = false;
  ver_cmd->add_option("system", ver_name, "registered system")->required();
  ver_cmd->add_option("--K", ver_K, "CHM truncation half-width");
  ver_cmd->add_option("--c", ver_c, "CHM linear drift parameter");
  ver_cmd->add_option("--file", ver_file, "polynomial system file");
  ver_cmd->add_option("--points", ver_points, "random points");
  ver_cmd->add_flag("--no-axioms", ver_no_axioms, "skip the grid axiom suite");

  // verify-brackets
  auto* vb_cmd = app.add_subcommand("verify-brackets", "macroscopic bracket axioms");
  std::string vb_system = "canonical-2d", vb_file;
  BracketVerifyOptions vb;
  bool vb_sym = false;
  vb_cmd->add_option("--system", vb_system, "registered system");
  vb_cmd->add_option("--file", vb_file, "polynomial system file");
  vb_cmd->add_option("--cells", vb.cells, "cells per axis");
  vb_cmd->add_option("--half-width", vb.half_width, "grid half-width");
  vb_cmd->add_option("--D", vb.D, "diffusion amplitude");
  vb_cmd->add_flag("--symmetrize", vb_sym, "fault injection: symmetrize J");

  app.add_subcommand("list-systems", "print registered systems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }
  if (*seed_opt) g.seed = seed;

  try {
    set_thread_count(g.threads);
    if (app.got_subcommand("list-systems")) {
      for (const auto& n : system_names()) std::cout << n << "\n";
      return kOk;
    }
    if (run_cmd->parsed()) return run_config(read_json(config_path), g);
    if (fpe_cmd->parsed()) {
      json cfg = base_config(fpe_config, "fpe");
      if (!fpe_system.empty()) cfg["system"]["name"] = fpe_system;
      if (fpe_D) cfg["D"] = *fpe_D;
      if (!fpe_beta.empty()) cfg["beta_mode"] = fpe_beta;
      if (fpe_dt) cfg["dt"] = *fpe_dt;
      if (fpe_tend) cfg["t_end"] = *fpe_tend;
      if (fpe_cells) {
        const std::string name = cfg["system"].value("name", "canonical-2d");
        const int n = make_system(name, {}).dimension();
        cfg["grid"]["cells"] = std::vector<int>(n, *fpe_cells);
      }
      return run_config(cfg, g);
    }
    if (sde_cmd->parsed()) {
      json cfg = base_config(sde_config, "sde");
      if (!sde_system.empty()) cfg["system"]["name"] = sde_system;
      if (sde_D) cfg["D"] = *sde_D;
      if (!sde_beta.empty()) cfg["beta_mode"] = sde_beta;
      if (sde_dt) cfg["dt"] = *sde_dt;
      if (sde_steps) cfg["steps"] = *sde_steps;
      if (sde_particles) cfg["particles"] = *sde_particles;
      return run_config(cfg, g);
    }
    if (chm_cmd->parsed()) {
      if (chm_ver->parsed()) {
        VerifyOptions vo;
        vo.points = chm_points;
        vo.seed = g.seed.value_or(1);
        SystemParams sp;
        sp.K = chm_K > 0 ? chm_K : 2;
        sp.c = chm_c;
        return emit_report(verify_system("chm", sp, vo), g, "verify_report.json");
      }
      const bool integ = chm_int->parsed();
      json cfg = base_config(chm_config, integ ? "chm-integrate" : "chm-thermalize");
      if (chm_K > 0) cfg["system"]["K"] = chm_K;
      if (chm_c != 0.0) cfg["system"]["c"] = chm_c;
      if (chm_dt) cfg["dt"] = *chm_dt;
      if (chm_steps) cfg["steps"] = *chm_steps;
      if (integ) {
        if (chm_norm) cfg["initial"]["norm"] = *chm_norm;
      } else {
        if (chm_D) cfg["D"] = *chm_D;
        if (chm_beta) cfg["beta"] = *chm_beta;
        if (chm_mu) cfg["mu"] = *chm_mu;
        if (chm_particles) cfg["particles"] = *chm_particles;
        if (chm_qbeta) cfg["quench"]["beta"] = *chm_qbeta;
        if (chm_qsteps) cfg["quench"]["steps"] = *chm_qsteps;
      }
      return run_config(cfg, g);
    }
    if (ver_cmd->parsed()) {
      VerifyOptions vo;
      vo.points = ver_points;
      vo.seed = g.seed.value_or(1);
      vo.axioms = !ver_no_axioms;
      SystemParams sp;
      sp.K = ver_K;
      sp.c = ver_c;
      sp.file = ver_file;
      return emit_report(verify_system(ver_name, sp, vo), g, "verify_report.json");
    }
    if (vb_cmd->parsed()) {
      SystemParams sp;
      sp.file = vb_file;
      HamiltonianSystem sys = make_system(vb_system, sp);
      if (vb_sym) sys = symmetrized(sys);
      vb.seed = g.seed.value_or(1);
      const auto rep = verify_brackets(sys, vb);
      json j = {{"system", sys.name},
                {"cells", vb.cells},
                {"D", vb.D},
                {"axioms", rep.to_json()},
                {"passed", rep.passed()}};
      return emit_report(j, g, "bracket_report.json");
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericalFailure;
  }
  return kUsageError;
}

}  // namespace metriplex::cli
