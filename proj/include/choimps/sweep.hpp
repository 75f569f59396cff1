#pragma once

#include <optional>
#include <string>
#include <vector>

#include "choimps/dmrg.hpp"
#include "choimps/filter.hpp"
#include "choimps/lattice.hpp"

namespace choimps {

// One decoherence-strength scan across system sizes: prepare the ground
// ladder state per L, filter at each p_zz (restarting from the clean state
// every time), measure, locate the entropy peak per L, and extrapolate the
// peak locations in 1/L.
struct SweepConfig {
  double j_over_h = 1.0;
  double h = 1.0;
  std::vector<long> sizes;          // rung counts, even, >= 4
  std::vector<double> p_zz_grid;    // ascending, within [0, 1/2]
  enum class Mode { Coupled, ZzOnly } mode = Mode::Coupled;
  DmrgConfig dmrg;
  TruncationPolicy filter_trunc;    // truncation during filtering
  bool project_cat = true;          // parity-project the prepared state when J/h > 1
  bool measure_profiles = false;    // store S(x) curves per point
  long threads = 1;                 // worker threads across grid points
  std::string out_dir;              // output + checkpoint directory
  bool resume = false;              // reuse finished rows and checkpoints
  unsigned long seed = 12345;

  void validate() const;  // throws ConfigError
};

struct SweepRow {
  long L = 0;
  double J = 0.0, h = 0.0;
  double p_zz = 0.0, p_x = 0.0;
  double chi_renyi2 = 0.0;
  double chi_strange = 0.0;
  double chi_upper = 0.0;
  double entropy = 0.0;           // region entropy at the half-ladder cut
  double purity_log = 0.0;
  long max_bond_used = 0;
  double discarded_weight = 0.0;  // filtering truncation error, summed
  double wall_time_s = 0.0;
  bool ok = false;
  std::string error;              // empty when ok
  std::string regime;             // classification label, see classify_regime
};

struct PeakFit {
  long L = 0;
  double p_peak = 0.0;
  double value_at_peak = 0.0;
  bool ok = false;
  std::string error;
};

struct Extrapolation {
  double p_c = 0.0;        // intercept of the 1/L fit
  double slope = 0.0;      // coefficient of 1/L
  double rms_residual = 0.0;
  long points = 0;
};

struct ProfileRow {
  long L = 0;
  double p_zz = 0.0;
  long x = 0;
  double entropy = 0.0;
};

struct SweepResult {
  SweepConfig config;
  std::vector<SweepRow> rows;
  std::vector<ProfileRow> profiles;      // filled when measure_profiles
  std::vector<PeakFit> peaks;            // one per L, entropy-peak location
  std::optional<Extrapolation> extrapolation;
};

// Phase label from the three susceptibilities at a point:
//   I   : all three small (< low) — trivial paramagnet
//   II  : Renyi-2 large (>= high) while strange and upper stay small — order
//         visible only in the doubled state
//   III : all three large (>= high) — ordered in every diagnostic
// Anything in between is labelled "crossover".  Raising chi_renyi2 never
// moves a point from II toward I.
std::string classify_regime(double chi_renyi2, double chi_strange, double chi_upper,
                            double low = 0.1, double high = 0.4);

// Quadratic-free peak location: least-squares polynomial (degree 6) on a
// 9-point window centered on the sampled maximum, maximized inside the
// window.  Throws FitError when the maximum sits on the grid boundary (after
// one widening attempt) or the window is too small.
double find_peak(const std::vector<double>& xs, const std::vector<double>& ys);

// Least-squares fit p_peak(L) = p_c + slope / L; needs >= 3 sizes.
Extrapolation extrapolate_pc(const std::vector<std::pair<long, double>>& peaks);

// Runs the full scan.  Partial failures (a point that fails to filter, a
// peak that cannot be fit) are recorded in the corresponding row/fit and do
// not abort the sweep.  Writes rows.csv, profiles.csv (optional) and
// fits.json under config.out_dir, plus DMRG checkpoints for reuse.
SweepResult run_sweep(const SweepConfig& config);

// Serialization used by both the library and the CLI.
void write_rows_csv(const std::vector<SweepRow>& rows, const std::string& path);
std::vector<SweepRow> read_rows_csv(const std::string& path);
void write_profiles_csv(const std::vector<ProfileRow>& rows, const std::string& path);
std::vector<ProfileRow> read_profiles_csv(const std::string& path);
void write_fits_json(const SweepResult& result, const std::string& path);

}  // namespace choimps
