#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "choimps/dmrg.hpp"
#include "choimps/ed.hpp"
#include "choimps/errors.hpp"
#include "choimps/mps_io.hpp"
#include "choimps/observables.hpp"
#include "choimps/sweep.hpp"
#include "json.hpp"

namespace {

using choimps::SweepConfig;

std::vector<double> default_grid(double step) {
  std::vector<double> g;
  for (double p = 0.0; p < 0.5 + step / 2; p += step) g.push_back(std::min(p, 0.5));
  return g;
}

// Grid syntax: either comma-separated values "0,0.1,0.2" or an inclusive
// range "start:step:stop".
std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> g;
  if (s.find(':') != std::string::npos) {
    double a = 0, d = 0, b = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(s);
    if (!(is >> a >> c1 >> d >> c2 >> b) || c1 != ':' || c2 != ':' || d <= 0)
      throw choimps::ConfigError("bad grid range: " + s);
    for (double p = a; p <= b + d / 2; p += d) g.push_back(std::min(p, b));
  } else {
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) g.push_back(std::stod(tok));
  }
  if (g.empty()) throw choimps::ConfigError("empty grid: " + s);
  return g;
}

std::vector<long> parse_sizes(const std::string& s) {
  std::vector<long> sizes;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) sizes.push_back(std::stol(tok));
  if (sizes.empty()) throw choimps::ConfigError("empty size list: " + s);
  return sizes;
}

SweepConfig::Mode parse_mode(const std::string& s) {
  if (s == "coupled") return SweepConfig::Mode::Coupled;
  if (s == "zz_only" || s == "zz-only") return SweepConfig::Mode::ZzOnly;
  throw choimps::ConfigError("unknown mode: " + s + " (expected coupled or zz_only)");
}

// Option handles so file-provided values lose against explicit flags.
struct CommonFlags {
  std::string config_path, out, mode = "coupled", sizes, grid;
  double j_over_h = 1.0, h = 1.0, sv_cutoff = 1e-6, energy_tol = 1e-4;
  long max_bond = 200, threads = 1, max_sweeps = 50;
  unsigned long seed = 12345;
  bool resume = false, profiles = false, no_project_cat = false;

  CLI::Option* o_j = nullptr;
  CLI::Option* o_h = nullptr;
  CLI::Option* o_mode = nullptr;
  CLI::Option* o_sizes = nullptr;
  CLI::Option* o_grid = nullptr;
  CLI::Option* o_max_bond = nullptr;
  CLI::Option* o_sv = nullptr;
  CLI::Option* o_etol = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_out = nullptr;
  CLI::Option* o_threads = nullptr;
  CLI::Option* o_sweeps = nullptr;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->set_help_flag("--help", "print this help message and exit");  // frees -h for --h
  sub->add_option("--config", f.config_path, "JSON config file; flags override its entries");
  f.o_j = sub->add_option("--j-over-h", f.j_over_h, "Ising coupling over transverse field");
  f.o_h = sub->add_option("--h", f.h, "transverse field strength");
  f.o_sizes = sub->add_option("--sizes", f.sizes, "rung counts, e.g. 12,16,20");
  f.o_grid = sub->add_option("--pzz-grid", f.grid,
                             "decoherence grid: 0,0.1,0.2 or start:step:stop");
  f.o_mode = sub->add_option("--mode", f.mode, "coupled or zz_only");
  f.o_max_bond = sub->add_option("--max-bond", f.max_bond, "bond-dimension cap");
  f.o_sv = sub->add_option("--sv-cutoff", f.sv_cutoff, "relative singular-value cutoff");
  f.o_etol = sub->add_option("--energy-tol", f.energy_tol, "sweep convergence tolerance");
  f.o_sweeps = sub->add_option("--max-sweeps", f.max_sweeps, "optimization sweep cap");
  f.o_seed = sub->add_option("--seed", f.seed, "random seed");
  f.o_out = sub->add_option("--out", f.out, "output/checkpoint directory");
  f.o_threads = sub->add_option("--threads", f.threads, "worker threads per size");
  sub->add_flag("--resume", f.resume, "reuse finished rows and checkpoints");
  sub->add_flag("--profiles", f.profiles, "store entropy profiles per point");
  sub->add_flag("--no-project-cat", f.no_project_cat,
                "skip the parity projection of the prepared state");
}

SweepConfig build_config(const CommonFlags& f) {
  SweepConfig cfg;
  cfg.sizes = {12, 16, 20, 24, 28};
  cfg.p_zz_grid = default_grid(0.025);

  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw choimps::ConfigError("cannot read config file: " + f.config_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
      throw choimps::ConfigError(std::string("config parse failure: ") + e.what());
    }
    if (j.contains("j_over_h")) cfg.j_over_h = j["j_over_h"].get<double>();
    if (j.contains("h")) cfg.h = j["h"].get<double>();
    if (j.contains("sizes")) cfg.sizes = j["sizes"].get<std::vector<long>>();
    if (j.contains("p_zz_grid")) cfg.p_zz_grid = j["p_zz_grid"].get<std::vector<double>>();
    if (j.contains("mode")) cfg.mode = parse_mode(j["mode"].get<std::string>());
    if (j.contains("max_bond")) {
      cfg.dmrg.trunc.max_bond = j["max_bond"].get<long>();
      cfg.filter_trunc.max_bond = cfg.dmrg.trunc.max_bond;
    }
    if (j.contains("sv_cutoff")) {
      cfg.dmrg.trunc.sv_cutoff = j["sv_cutoff"].get<double>();
      cfg.filter_trunc.sv_cutoff = cfg.dmrg.trunc.sv_cutoff;
    }
    if (j.contains("energy_tol")) cfg.dmrg.energy_tol = j["energy_tol"].get<double>();
    if (j.contains("max_sweeps")) cfg.dmrg.max_sweeps = j["max_sweeps"].get<long>();
    if (j.contains("project_cat")) cfg.project_cat = j["project_cat"].get<bool>();
    if (j.contains("measure_profiles")) cfg.measure_profiles = j["measure_profiles"].get<bool>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<long>();
    if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
    if (j.contains("resume")) cfg.resume = j["resume"].get<bool>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<unsigned long>();
  }

  if (f.o_j->count()) cfg.j_over_h = f.j_over_h;
  if (f.o_h->count()) cfg.h = f.h;
  if (f.o_sizes->count()) cfg.sizes = parse_sizes(f.sizes);
  if (f.o_grid->count()) cfg.p_zz_grid = parse_grid(f.grid);
  if (f.o_mode->count()) cfg.mode = parse_mode(f.mode);
  if (f.o_max_bond->count()) {
    cfg.dmrg.trunc.max_bond = f.max_bond;
    cfg.filter_trunc.max_bond = f.max_bond;
  }
  if (f.o_sv->count()) {
    cfg.dmrg.trunc.sv_cutoff = f.sv_cutoff;
    cfg.filter_trunc.sv_cutoff = f.sv_cutoff;
  }
  if (f.o_etol->count()) cfg.dmrg.energy_tol = f.energy_tol;
  if (f.o_sweeps->count()) cfg.dmrg.max_sweeps = f.max_sweeps;
  if (f.o_seed->count()) cfg.seed = f.seed;
  if (f.o_out->count()) cfg.out_dir = f.out;
  if (f.o_threads->count()) cfg.threads = f.threads;
  if (f.resume) cfg.resume = true;
  if (f.profiles) cfg.measure_profiles = true;
  if (f.no_project_cat) cfg.project_cat = false;
  return cfg;
}

int run_prepare(const SweepConfig& cfg) {
  cfg.validate();
  if (cfg.out_dir.empty())
    throw choimps::ConfigError("prepare needs --out for the checkpoints");
  std::filesystem::create_directories(cfg.out_dir);

  bool all_converged = true;
  for (long L : cfg.sizes) {
    choimps::ModelParams params{cfg.j_over_h * cfg.h, cfg.h, L, true};
    choimps::DmrgConfig dmrg = cfg.dmrg;
    dmrg.seed = cfg.seed + 1000003UL * static_cast<unsigned long>(L);
    choimps::DmrgReport report;
    const choimps::MpsState rho0 =
        choimps::prepare_initial_choi_state(params, dmrg, &report, cfg.project_cat);
    std::printf("L=%ld  energy=%.12f  sweeps=%zu  converged=%s\n", L, report.energy,
                report.sweep_energies.size(), report.converged ? "yes" : "no");
    if (report.converged) {
      std::ostringstream path;
      path << cfg.out_dir << "/rho0_L" << L << ".mps";
      choimps::save_mps(rho0, path.str());
    } else {
      all_converged = false;
    }
  }
  return all_converged ? 0 : 3;
}

int run_sweep_cmd(const SweepConfig& cfg_in) {
  SweepConfig cfg = cfg_in;
  if (cfg.out_dir.empty()) throw choimps::ConfigError("sweep needs --out for its results");
  const choimps::SweepResult res = choimps::run_sweep(cfg);

  long failed = 0;
  for (const choimps::SweepRow& r : res.rows)
    if (!r.ok) ++failed;
  for (const choimps::PeakFit& p : res.peaks) {
    if (p.ok)
      std::printf("L=%ld  peak p_zz=%.6f\n", p.L, p.p_peak);
    else
      std::printf("L=%ld  peak fit failed: %s\n", p.L, p.error.c_str());
  }
  if (res.extrapolation)
    std::printf("extrapolated p_c=%.6f  slope=%.6f\n", res.extrapolation->p_c,
                res.extrapolation->slope);
  std::printf("%zu rows (%ld failed) -> %s\n", res.rows.size(), failed, cfg.out_dir.c_str());
  return failed == 0 ? 0 : 3;
}

int run_fit(const SweepConfig& cfg) {
  if (cfg.out_dir.empty()) throw choimps::ConfigError("fit needs --out with existing rows.csv");
  const std::string rows_path = cfg.out_dir + "/rows.csv";
  if (!std::filesystem::exists(rows_path))
    throw choimps::ConfigError("no results found at " + rows_path);
  const std::vector<choimps::SweepRow> rows = choimps::read_rows_csv(rows_path);
  if (rows.empty()) throw choimps::ConfigError("no rows in " + rows_path);

  choimps::SweepResult res;
  res.config = cfg;
  res.config.j_over_h = rows[0].J / rows[0].h;
  res.config.h = rows[0].h;
  res.rows = rows;

  std::vector<long> sizes;
  for (const choimps::SweepRow& r : rows)
    if (std::find(sizes.begin(), sizes.end(), r.L) == sizes.end()) sizes.push_back(r.L);
  res.config.sizes = sizes;

  for (long L : sizes) {
    std::vector<std::pair<double, double>> pts;
    for (const choimps::SweepRow& r : rows)
      if (r.L == L && r.ok) pts.emplace_back(r.p_zz, r.entropy);
    std::sort(pts.begin(), pts.end());
    std::vector<double> ps, ss;
    for (const auto& [p, s] : pts) {
      ps.push_back(p);
      ss.push_back(s);
    }
    choimps::PeakFit pf;
    pf.L = L;
    try {
      pf.p_peak = choimps::find_peak(ps, ss);
      pf.value_at_peak = ss.empty() ? 0.0 : *std::max_element(ss.begin(), ss.end());
      pf.ok = true;
      std::printf("L=%ld  peak p_zz=%.6f\n", L, pf.p_peak);
    } catch (const std::exception& e) {
      pf.ok = false;
      pf.error = e.what();
      std::printf("L=%ld  peak fit failed: %s\n", L, pf.error.c_str());
    }
    res.peaks.push_back(std::move(pf));
  }

  std::vector<std::pair<long, double>> good;
  for (const choimps::PeakFit& p : res.peaks)
    if (p.ok) good.emplace_back(p.L, p.p_peak);
  try {
    res.extrapolation = choimps::extrapolate_pc(good);
    std::printf("extrapolated p_c=%.6f  slope=%.6f  rms=%.3e\n", res.extrapolation->p_c,
                res.extrapolation->slope, res.extrapolation->rms_residual);
  } catch (const std::exception& e) {
    res.extrapolation = std::nullopt;
    std::printf("extrapolation failed: %s\n", e.what());
  }

  const std::string fits_path = cfg.out_dir + "/fits.json";
  choimps::write_fits_json(res, fits_path);

  // Central-charge fits from stored entropy profiles, appended to the same
  // report when available.
  const std::string prof_path = cfg.out_dir + "/profiles.csv";
  if (std::filesystem::exists(prof_path)) {
    std::map<std::pair<long, double>, choimps::EntropyProfile> profiles;
    for (const choimps::ProfileRow& r : choimps::read_profiles_csv(prof_path)) {
      choimps::EntropyProfile& p = profiles[{r.L, r.p_zz}];
      p.L = r.L;
      p.x.push_back(r.x);
      p.entropy.push_back(r.entropy);
    }
    nlohmann::json report;
    {
      std::ifstream in(fits_path);
      report = nlohmann::json::parse(in);
    }
    report["c_eff"] = nlohmann::json::array();
    for (const auto& [key, profile] : profiles) {
      nlohmann::json entry{{"L", key.first}, {"p_zz", key.second}};
      try {
        const choimps::CeffFit fit = choimps::fit_ceff(profile);
        entry["c_eff"] = fit.c_eff;
        entry["intercept"] = fit.intercept;
        entry["rms_residual"] = fit.rms_residual;
        entry["points"] = fit.points;
        entry["ok"] = true;
      } catch (const std::exception& e) {
        entry["ok"] = false;
        entry["error"] = e.what();
      }
      report["c_eff"].push_back(std::move(entry));
    }
    std::ofstream out(fits_path);
    out << report.dump(2) << "\n";
  }

  return res.extrapolation ? 0 : 4;
}

// Small-system agreement harness: the tensor-network pipeline against exact
// dense evolution, on the two observables most sensitive to the filtering.
int run_validate(const SweepConfig& cfg_in, bool grid_overridden) {
  SweepConfig cfg = cfg_in;
  const long L = 8;
  const std::vector<double> grid =
      grid_overridden ? cfg.p_zz_grid : default_grid(0.05);
  const double tol = 1e-4;

  choimps::DmrgConfig dmrg = cfg.dmrg;
  dmrg.energy_tol = std::min(dmrg.energy_tol, 1e-8);

  bool pass = true;
  std::vector<std::string> csv_lines;
  csv_lines.push_back("check,J,p_zz,mps,ed,abs_err");

  const auto run_table = [&](double J, const char* name, auto mps_value, auto ed_value) {
    choimps::ModelParams params{J, 1.0, L, true};
    const choimps::MpsState rho0 =
        choimps::prepare_initial_choi_state(params, dmrg, nullptr, false);
    const choimps::ed::GroundSolution sol = choimps::ed::ground_state_dense(params);
    std::printf("%s (J=%g):\n", name, J);
    double worst = 0.0;
    for (double p : grid) {
      const choimps::ChannelSpec spec = choimps::ChannelSpec::zz_only(p, L);
      const choimps::FilteredState f = choimps::filter(rho0, spec, cfg.filter_trunc);
      const choimps::ed::DenseState evolved = choimps::ed::apply_channel_dense(sol.state, p, 0.0);
      const double a = mps_value(f);
      const double b = ed_value(evolved);
      const double err = std::abs(a - b);
      worst = std::max(worst, err);
      std::printf("  p_zz=%.3f  mps=%+.8f  ed=%+.8f  |err|=%.2e\n", p, a, b, err);
      char line[160];
      std::snprintf(line, sizeof(line), "%s,%.17g,%.17g,%.17g,%.17g,%.17g", name, J, p, a, b,
                    err);
      csv_lines.emplace_back(line);
    }
    const bool ok = worst < tol;
    std::printf("  max |err| = %.2e -> %s\n", worst, ok ? "PASS" : "FAIL");
    pass = pass && ok;
  };

  run_table(
      0.1, "nn_renyi2",
      [](const choimps::FilteredState& f) { return choimps::renyi2_nn_average(f); },
      [](const choimps::ed::DenseState& s) {
        return choimps::ed::observables_dense(s).renyi2_nn_average;
      });
  run_table(
      0.01, "plaquette_entropy",
      [](const choimps::FilteredState& f) { return choimps::prefix_entropy(f.state, 4); },
      [](const choimps::ed::DenseState& s) { return choimps::ed::prefix_entropy_dense(s, 4); });

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream out(cfg.out_dir + "/validate.csv");
    for (const std::string& l : csv_lines) out << l << "\n";
  }
  std::printf("validation %s\n", pass ? "PASSED" : "FAILED");
  return pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decohered Ising chain as a filtered matrix-product ladder"};
  app.require_subcommand(1);

  CommonFlags fp, fs, ff, fv;
  CLI::App* prepare = app.add_subcommand("prepare", "ground-state preparation + checkpoints");
  add_common(prepare, fp);
  CLI::App* sweep = app.add_subcommand("sweep", "filter and measure across the grid");
  add_common(sweep, fs);
  CLI::App* fit = app.add_subcommand("fit", "peak, extrapolation and scaling fits");
  add_common(fit, ff);
  CLI::App* validate = app.add_subcommand("validate", "small-system agreement harness");
  add_common(validate, fv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (prepare->parsed()) return run_prepare(build_config(fp));
    if (sweep->parsed()) return run_sweep_cmd(build_config(fs));
    if (fit->parsed()) return run_fit(build_config(ff));
    if (validate->parsed()) return run_validate(build_config(fv), fv.o_grid->count() > 0);
  } catch (const choimps::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const choimps::ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << "\n";
    return 3;
  } catch (const choimps::FitError& e) {
    std::cerr << "fit failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
