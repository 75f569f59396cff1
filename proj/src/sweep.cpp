#include "choimps/sweep.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "choimps/errors.hpp"
#include "choimps/mps_io.hpp"
#include "choimps/observables.hpp"
#include "json.hpp"

namespace choimps {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// The reader is line-based, so embedded line breaks are flattened to spaces
// before quoting.
std::string csv_escape(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

constexpr const char* kRowsHeader =
    "L,J,h,p_zz,p_x,chi_renyi2,chi_strange,chi_upper,entropy,purity_log,"
    "max_bond_used,discarded_weight,wall_time_s,ok,error,regime";
constexpr const char* kProfilesHeader = "L,p_zz,x,entropy";

// Least-squares polynomial max on a window scaled to t in [-1, 1]: dense scan
// to bracket, then golden-section refinement.  Returns the scaled maximizer;
// the caller decides whether it counts as interior.
double maximize_scaled_poly(const Eigen::VectorXd& coeff) {
  auto eval = [&](double t) {
    double v = 0.0, tp = 1.0;
    for (long j = 0; j < coeff.size(); ++j, tp *= t) v += coeff[j] * tp;
    return v;
  };

  const long samples = 4096;
  long best = 0;
  double best_v = eval(-1.0);
  for (long i = 1; i <= samples; ++i) {
    const double t = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(samples);
    const double v = eval(t);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  if (best == 0) return -1.0;
  if (best == samples) return 1.0;

  const double a = -1.0 + 2.0 * static_cast<double>(best - 1) / static_cast<double>(samples);
  const double b = -1.0 + 2.0 * static_cast<double>(best + 1) / static_cast<double>(samples);

  // Newton on the derivative: value comparisons alone stall at sqrt(eps)
  // around a flat maximum, the stationarity condition does not.
  double t = 0.5 * (a + b);
  for (int it = 0; it < 30; ++it) {
    double d1 = 0.0, tp = 1.0;
    for (long j = 1; j < coeff.size(); ++j) {
      d1 += static_cast<double>(j) * coeff[j] * tp;
      tp *= t;
    }
    double d2 = 0.0, tq = 1.0;
    for (long j = 2; j < coeff.size(); ++j) {
      d2 += static_cast<double>(j * (j - 1)) * coeff[j] * tq;
      tq *= t;
    }
    if (!(d2 < 0.0) || !std::isfinite(d1)) break;
    const double step = d1 / d2;
    const double t_next = t - step;
    if (t_next < a || t_next > b) break;
    t = t_next;
    if (std::abs(step) < 1e-16) break;
  }
  return t;
}

// One windowed degree-6 fit attempt; returns the maximizer or nullopt when it
// lands on the window edge.
std::optional<double> peak_attempt(const std::vector<double>& xs, const std::vector<double>& ys,
                                   long argmax, long half_width) {
  const long n = static_cast<long>(xs.size());
  const long width = std::min(n, 2 * half_width + 1);
  long lo = std::max<long>(0, std::min(argmax - half_width, n - width));
  const long hi = lo + width - 1;
  if (width < 7) throw FitError("peak fit: window too small for a sixth-order polynomial");

  const double xm = 0.5 * (xs[static_cast<size_t>(lo)] + xs[static_cast<size_t>(hi)]);
  const double xr = 0.5 * (xs[static_cast<size_t>(hi)] - xs[static_cast<size_t>(lo)]);
  if (xr <= 0.0) throw FitError("peak fit: degenerate window");

  Eigen::MatrixXd a(width, 7);
  Eigen::VectorXd y(width);
  for (long k = 0; k < width; ++k) {
    const double t = (xs[static_cast<size_t>(lo + k)] - xm) / xr;
    double tp = 1.0;
    for (long j = 0; j < 7; ++j, tp *= t) a(k, j) = tp;
    y(k) = ys[static_cast<size_t>(lo + k)];
  }
  const Eigen::VectorXd coeff = a.colPivHouseholderQr().solve(y);

  const double t_star = maximize_scaled_poly(coeff);
  if (std::abs(t_star) >= 1.0 - 1e-6) return std::nullopt;
  return xm + xr * t_star;
}

struct LineFit {
  double intercept = 0.0, slope = 0.0, rms = 0.0;
};

LineFit fit_line(const std::vector<double>& u, const std::vector<double>& v) {
  const long m = static_cast<long>(u.size());
  double um = 0.0, vm = 0.0;
  for (long k = 0; k < m; ++k) {
    um += u[static_cast<size_t>(k)];
    vm += v[static_cast<size_t>(k)];
  }
  um /= static_cast<double>(m);
  vm /= static_cast<double>(m);
  double suu = 0.0, suv = 0.0;
  for (long k = 0; k < m; ++k) {
    const double du = u[static_cast<size_t>(k)] - um;
    suu += du * du;
    suv += du * (v[static_cast<size_t>(k)] - vm);
  }
  if (suu < 1e-18) throw FitError("line fit: degenerate abscissas");
  LineFit f;
  f.slope = suv / suu;
  f.intercept = vm - f.slope * um;
  double rss = 0.0;
  for (long k = 0; k < m; ++k) {
    const double r =
        v[static_cast<size_t>(k)] - (f.intercept + f.slope * u[static_cast<size_t>(k)]);
    rss += r * r;
  }
  f.rms = std::sqrt(rss / static_cast<double>(m));
  return f;
}

}  // namespace

void SweepConfig::validate() const {
  if (!(j_over_h > 0.0) || !std::isfinite(j_over_h))
    throw ConfigError("sweep config: coupling ratio must be positive");
  if (!(h > 0.0) || !std::isfinite(h))
    throw ConfigError("sweep config: transverse field must be positive");
  if (sizes.empty()) throw ConfigError("sweep config: no system sizes");
  for (long L : sizes)
    if (L < 4 || L % 2 != 0)
      throw ConfigError("sweep config: sizes must be even and at least 4 rungs");
  if (p_zz_grid.empty()) throw ConfigError("sweep config: empty decoherence grid");
  for (size_t k = 0; k < p_zz_grid.size(); ++k) {
    const double p = p_zz_grid[k];
    if (!(p >= 0.0 && p <= 0.5)) throw ConfigError("sweep config: p_zz outside [0, 1/2]");
    if (k > 0 && !(p > p_zz_grid[k - 1]))
      throw ConfigError("sweep config: decoherence grid must ascend");
  }
  if (threads < 1) throw ConfigError("sweep config: thread count must be positive");
  if (filter_trunc.max_bond < 1 || dmrg.trunc.max_bond < 1)
    throw ConfigError("sweep config: bond caps must be positive");
  if (!(filter_trunc.sv_cutoff >= 0.0 && filter_trunc.sv_cutoff < 1.0) ||
      !(dmrg.trunc.sv_cutoff >= 0.0 && dmrg.trunc.sv_cutoff < 1.0))
    throw ConfigError("sweep config: singular-value cutoffs must lie in [0, 1)");
  if (dmrg.max_sweeps < 1) throw ConfigError("sweep config: need at least one sweep");
  if (!(dmrg.energy_tol > 0.0)) throw ConfigError("sweep config: energy tolerance must be positive");
}

std::string classify_regime(double chi_renyi2, double chi_strange, double chi_upper,
                            double low, double high) {
  if (!(low < high)) throw std::invalid_argument("classify_regime: thresholds must order low < high");
  const bool others_small = chi_strange < low && chi_upper < low;
  if (chi_renyi2 < low && others_small) return "I";
  if (chi_renyi2 >= high && others_small) return "II";
  if (chi_renyi2 >= high && chi_strange >= high && chi_upper >= high) return "III";
  return "crossover";
}

double find_peak(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("find_peak: length mismatch");
  const long n = static_cast<long>(xs.size());
  for (long k = 1; k < n; ++k)
    if (!(xs[static_cast<size_t>(k)] > xs[static_cast<size_t>(k - 1)]))
      throw std::invalid_argument("find_peak: abscissas must ascend");
  if (n < 8) throw FitError("peak fit: need at least eight samples");

  long argmax = 0;
  for (long k = 1; k < n; ++k)
    if (ys[static_cast<size_t>(k)] > ys[static_cast<size_t>(argmax)]) argmax = k;

  for (long half_width : {4L, 6L}) {
    const std::optional<double> p = peak_attempt(xs, ys, argmax, half_width);
    if (p) return *p;
  }
  throw FitError("peak fit: maximum sits on the window boundary");
}

Extrapolation extrapolate_pc(const std::vector<std::pair<long, double>>& peaks) {
  std::vector<double> inv_l, p;
  std::vector<long> seen;
  for (const auto& [L, peak] : peaks) {
    if (L < 1) throw std::invalid_argument("extrapolate_pc: nonpositive size");
    if (std::find(seen.begin(), seen.end(), L) == seen.end()) seen.push_back(L);
    inv_l.push_back(1.0 / static_cast<double>(L));
    p.push_back(peak);
  }
  if (seen.size() < 3) throw FitError("extrapolation: need at least three system sizes");
  const LineFit f = fit_line(inv_l, p);
  Extrapolation e;
  e.p_c = f.intercept;
  e.slope = f.slope;
  e.rms_residual = f.rms;
  e.points = static_cast<long>(p.size());
  return e;
}

namespace {

std::string checkpoint_path(const SweepConfig& cfg, long L) {
  std::ostringstream os;
  os << cfg.out_dir << "/rho0_L" << L << ".mps";
  return os.str();
}

// Measures one grid point from the shared prepared state.  Exceptions are
// recorded in the row rather than propagated so one bad point cannot kill a
// long scan.
void measure_point(const SweepConfig& cfg, const MpsState& rho0, long L, double p_zz,
                   SweepRow& row, std::vector<ProfileRow>* profile_rows) {
  const auto t0 = std::chrono::steady_clock::now();
  row.L = L;
  row.J = cfg.j_over_h * cfg.h;
  row.h = cfg.h;
  row.p_zz = p_zz;
  try {
    const ChannelSpec spec = cfg.mode == SweepConfig::Mode::Coupled
                                 ? ChannelSpec::coupled(p_zz, cfg.j_over_h, L)
                                 : ChannelSpec::zz_only(p_zz, L);
    row.p_x = spec.p_x;
    const FilteredState f = filter(rho0, spec, cfg.filter_trunc);
    row.chi_renyi2 = susceptibility(f, CorrelatorKind::Renyi2ZZ);
    row.chi_strange = susceptibility(f, CorrelatorKind::StrangeZ);
    row.chi_upper = susceptibility(f, CorrelatorKind::UpperZZ);
    row.entropy = half_ladder_entropy(f);
    row.purity_log = purity_log(f);
    row.max_bond_used = f.state.max_bond_dim();
    row.discarded_weight = 0.0;
    for (double w : f.layer_discarded_weights) row.discarded_weight += w;
    row.regime = classify_regime(row.chi_renyi2, row.chi_strange, row.chi_upper);
    if (profile_rows) {
      const EntropyProfile p = entropy_profile(f);
      for (size_t k = 0; k < p.x.size(); ++k)
        profile_rows->push_back({L, p_zz, p.x[k], p.entropy[k]});
    }
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  row.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

SweepResult run_sweep(const SweepConfig& config) {
  config.validate();
  const bool writing = !config.out_dir.empty();
  if (writing) std::filesystem::create_directories(config.out_dir);

  SweepResult result;
  result.config = config;

  // Finished rows from a previous run, keyed by (L, p_zz).  CSV doubles are
  // written round-trip exact, so keying on the parsed value is safe.
  std::map<std::pair<long, double>, SweepRow> finished;
  std::map<std::pair<long, double>, std::vector<ProfileRow>> finished_profiles;
  if (config.resume && writing) {
    const std::string rows_path = config.out_dir + "/rows.csv";
    if (std::filesystem::exists(rows_path)) {
      for (SweepRow& r : read_rows_csv(rows_path))
        if (r.ok) finished.emplace(std::make_pair(r.L, r.p_zz), std::move(r));
    }
    const std::string prof_path = config.out_dir + "/profiles.csv";
    if (config.measure_profiles && std::filesystem::exists(prof_path)) {
      for (const ProfileRow& r : read_profiles_csv(prof_path))
        finished_profiles[{r.L, r.p_zz}].push_back(r);
    }
  }

  for (long L : config.sizes) {
    const size_t n_points = config.p_zz_grid.size();
    std::vector<SweepRow> rows(n_points);
    std::vector<std::vector<ProfileRow>> profiles(n_points);

    bool all_resumed = true;
    for (size_t k = 0; k < n_points; ++k)
      if (!finished.count({L, config.p_zz_grid[k]})) all_resumed = false;

    MpsState rho0;
    bool prepared = false;
    std::string prepare_error;
    if (!all_resumed) {
      const std::string ckpt = writing ? checkpoint_path(config, L) : std::string();
      if (config.resume && writing && std::filesystem::exists(ckpt)) {
        try {
          rho0 = load_mps(ckpt);
          prepared = rho0.n_sites() == 2 * L;
        } catch (const std::exception&) {
          prepared = false;  // unreadable checkpoint: recompute below
        }
      }
      if (!prepared) {
        ModelParams params{config.j_over_h * config.h, config.h, L, true};
        DmrgConfig dmrg = config.dmrg;
        dmrg.seed = config.seed + 1000003UL * static_cast<unsigned long>(L);
        DmrgReport report;
        try {
          rho0 = prepare_initial_choi_state(params, dmrg, &report, config.project_cat);
          prepared = report.converged;
          if (!prepared) prepare_error = "ground-state preparation did not converge";
          if (prepared && writing) save_mps(rho0, ckpt);
        } catch (const std::exception& e) {
          prepared = false;
          prepare_error = e.what();
        }
      }
    }

    std::atomic<size_t> cursor{0};
    auto worker = [&] {
      for (size_t k = cursor.fetch_add(1); k < n_points; k = cursor.fetch_add(1)) {
        const double p_zz = config.p_zz_grid[k];
        if (auto it = finished.find({L, p_zz}); it != finished.end()) {
          rows[k] = it->second;
          if (auto pit = finished_profiles.find({L, p_zz}); pit != finished_profiles.end())
            profiles[k] = pit->second;
          continue;
        }
        if (!prepared) {
          rows[k].L = L;
          rows[k].J = config.j_over_h * config.h;
          rows[k].h = config.h;
          rows[k].p_zz = p_zz;
          rows[k].ok = false;
          rows[k].error = prepare_error.empty() ? "state preparation unavailable" : prepare_error;
          continue;
        }
        measure_point(config, rho0, L, p_zz, rows[k],
                      config.measure_profiles ? &profiles[k] : nullptr);
      }
    };

    const long n_workers =
        std::max<long>(1, std::min<long>(config.threads, static_cast<long>(n_points)));
    if (n_workers == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<size_t>(n_workers));
      for (long t = 0; t < n_workers; ++t) pool.emplace_back(worker);
      for (std::thread& t : pool) t.join();
    }

    for (size_t k = 0; k < n_points; ++k) {
      result.rows.push_back(std::move(rows[k]));
      for (ProfileRow& r : profiles[k]) result.profiles.push_back(std::move(r));
    }

    // Entropy-peak location for this size from the successful points.
    PeakFit pf;
    pf.L = L;
    std::vector<double> ps, ss;
    for (const SweepRow& r : result.rows)
      if (r.L == L && r.ok) {
        ps.push_back(r.p_zz);
        ss.push_back(r.entropy);
      }
    try {
      pf.p_peak = find_peak(ps, ss);
      double best = ss.empty() ? 0.0 : ss[0];
      for (double s : ss) best = std::max(best, s);
      pf.value_at_peak = best;
      pf.ok = true;
    } catch (const std::exception& e) {
      pf.ok = false;
      pf.error = e.what();
    }
    result.peaks.push_back(std::move(pf));
  }

  std::vector<std::pair<long, double>> good_peaks;
  for (const PeakFit& pf : result.peaks)
    if (pf.ok) good_peaks.emplace_back(pf.L, pf.p_peak);
  try {
    result.extrapolation = extrapolate_pc(good_peaks);
  } catch (const std::exception&) {
    result.extrapolation = std::nullopt;
  }

  if (writing) {
    write_rows_csv(result.rows, config.out_dir + "/rows.csv");
    if (config.measure_profiles)
      write_profiles_csv(result.profiles, config.out_dir + "/profiles.csv");
    write_fits_json(result, config.out_dir + "/fits.json");
  }
  return result;
}

void write_rows_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << kRowsHeader << "\n";
  for (const SweepRow& r : rows) {
    out << r.L << ',' << fmt_double(r.J) << ',' << fmt_double(r.h) << ','
        << fmt_double(r.p_zz) << ',' << fmt_double(r.p_x) << ',' << fmt_double(r.chi_renyi2)
        << ',' << fmt_double(r.chi_strange) << ',' << fmt_double(r.chi_upper) << ','
        << fmt_double(r.entropy) << ',' << fmt_double(r.purity_log) << ',' << r.max_bond_used
        << ',' << fmt_double(r.discarded_weight) << ',' << fmt_double(r.wall_time_s) << ','
        << (r.ok ? 1 : 0) << ',' << csv_escape(r.error) << ',' << csv_escape(r.regime) << "\n";
  }
}

std::vector<SweepRow> read_rows_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kRowsHeader)
    throw std::runtime_error("unrecognized results header in " + path);
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 16) throw std::runtime_error("malformed results row in " + path);
    SweepRow r;
    r.L = std::stol(f[0]);
    r.J = std::stod(f[1]);
    r.h = std::stod(f[2]);
    r.p_zz = std::stod(f[3]);
    r.p_x = std::stod(f[4]);
    r.chi_renyi2 = std::stod(f[5]);
    r.chi_strange = std::stod(f[6]);
    r.chi_upper = std::stod(f[7]);
    r.entropy = std::stod(f[8]);
    r.purity_log = std::stod(f[9]);
    r.max_bond_used = std::stol(f[10]);
    r.discarded_weight = std::stod(f[11]);
    r.wall_time_s = std::stod(f[12]);
    r.ok = f[13] == "1";
    r.error = f[14];
    r.regime = f[15];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_profiles_csv(const std::vector<ProfileRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << kProfilesHeader << "\n";
  for (const ProfileRow& r : rows)
    out << r.L << ',' << fmt_double(r.p_zz) << ',' << r.x << ',' << fmt_double(r.entropy)
        << "\n";
}

std::vector<ProfileRow> read_profiles_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kProfilesHeader)
    throw std::runtime_error("unrecognized profiles header in " + path);
  std::vector<ProfileRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 4) throw std::runtime_error("malformed profile row in " + path);
    rows.push_back({std::stol(f[0]), std::stod(f[1]), std::stol(f[2]), std::stod(f[3])});
  }
  return rows;
}

void write_fits_json(const SweepResult& result, const std::string& path) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["model"] = {{"j_over_h", result.config.j_over_h},
                {"h", result.config.h},
                {"mode", result.config.mode == SweepConfig::Mode::Coupled ? "coupled" : "zz_only"},
                {"project_cat", result.config.project_cat}};
  j["sizes"] = result.config.sizes;
  j["p_zz_grid"] = result.config.p_zz_grid;
  j["peaks"] = nlohmann::json::array();
  for (const PeakFit& p : result.peaks)
    j["peaks"].push_back({{"L", p.L},
                          {"p_peak", p.p_peak},
                          {"value_at_peak", p.value_at_peak},
                          {"ok", p.ok},
                          {"error", p.error}});
  if (result.extrapolation) {
    j["extrapolation"] = {{"p_c", result.extrapolation->p_c},
                          {"slope", result.extrapolation->slope},
                          {"rms_residual", result.extrapolation->rms_residual},
                          {"points", result.extrapolation->points}};
  } else {
    j["extrapolation"] = nullptr;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace choimps
