#include "choimps/sweep.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "choimps/errors.hpp"
#include "json.hpp"

using namespace choimps;

namespace {

SweepConfig fast_config(const std::string& out_dir) {
  SweepConfig cfg;
  cfg.j_over_h = 1.0;
  cfg.h = 1.0;
  cfg.sizes = {4};
  cfg.p_zz_grid = {0.0, 0.1, 0.2};
  cfg.mode = SweepConfig::Mode::Coupled;
  cfg.dmrg.trunc = {64, 1e-12};
  cfg.dmrg.energy_tol = 1e-9;
  cfg.filter_trunc = {64, 1e-12};
  cfg.out_dir = out_dir;
  return cfg;
}

std::string fresh_dir(const std::string& tag) {
  const std::string d = ::testing::TempDir() + "choimps_" + tag;
  std::filesystem::remove_all(d);
  return d;
}

void expect_rows_equal_ignoring_time(const SweepRow& a, const SweepRow& b) {
  EXPECT_EQ(a.L, b.L);
  EXPECT_EQ(a.p_zz, b.p_zz);
  EXPECT_EQ(a.p_x, b.p_x);
  EXPECT_EQ(a.chi_renyi2, b.chi_renyi2);
  EXPECT_EQ(a.chi_strange, b.chi_strange);
  EXPECT_EQ(a.chi_upper, b.chi_upper);
  EXPECT_EQ(a.entropy, b.entropy);
  EXPECT_EQ(a.purity_log, b.purity_log);
  EXPECT_EQ(a.max_bond_used, b.max_bond_used);
  EXPECT_EQ(a.discarded_weight, b.discarded_weight);
  EXPECT_EQ(a.ok, b.ok);
  EXPECT_EQ(a.error, b.error);
  EXPECT_EQ(a.regime, b.regime);
}

}  // namespace

TEST(Sweep, ClassifyRegimeReproducesTableRows) {
  EXPECT_EQ(classify_regime(0.02, 0.01, 0.03), "I");
  EXPECT_EQ(classify_regime(0.8, 0.02, 0.03), "II");
  EXPECT_EQ(classify_regime(0.9, 0.7, 0.8), "III");
  EXPECT_EQ(classify_regime(0.25, 0.02, 0.02), "crossover");
  EXPECT_EQ(classify_regime(0.9, 0.25, 0.9), "crossover");
  EXPECT_THROW(classify_regime(0.5, 0.5, 0.5, 0.4, 0.1), std::invalid_argument);
}

TEST(Sweep, ClassifyRegimeIsMonotoneInRenyi2) {
  // Raising the Renyi-2 susceptibility can only move I -> crossover -> II.
  std::string prev = classify_regime(0.0, 0.02, 0.02);
  ASSERT_EQ(prev, "I");
  bool seen_ii = false;
  for (double chi = 0.0; chi <= 1.0; chi += 0.01) {
    const std::string r = classify_regime(chi, 0.02, 0.02);
    if (seen_ii) EXPECT_EQ(r, "II");
    if (r == "II") seen_ii = true;
    EXPECT_NE(r, "III");
  }
  EXPECT_TRUE(seen_ii);
}

TEST(Sweep, FindPeakRecoversExactQuadratic) {
  std::vector<double> xs, ys;
  for (long k = 0; k <= 16; ++k) {
    const double x = 0.2 + 0.02 * static_cast<double>(k);
    xs.push_back(x);
    ys.push_back(1.0 - (x - 0.37) * (x - 0.37));
  }
  EXPECT_NEAR(find_peak(xs, ys), 0.37, 1e-10);
}

TEST(Sweep, FindPeakToleratesSmallNoise) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> noise(-1e-3, 1e-3);
  std::vector<double> xs, ys;
  for (long k = 0; k <= 20; ++k) {
    const double x = 0.025 * static_cast<double>(k);
    xs.push_back(x);
    const double d = x - 0.31;
    ys.push_back(std::exp(-d * d / (2.0 * 0.08 * 0.08)) + noise(rng));
  }
  EXPECT_NEAR(find_peak(xs, ys), 0.31, 0.005);
}

TEST(Sweep, FindPeakRejectsBoundaryMaximaAndShortGrids) {
  std::vector<double> xs, ys;
  for (long k = 0; k <= 12; ++k) {
    xs.push_back(0.05 * static_cast<double>(k));
    ys.push_back(static_cast<double>(k));  // monotone: maximum at the edge
  }
  EXPECT_THROW(find_peak(xs, ys), FitError);

  const std::vector<double> short_x{0.0, 0.1, 0.2, 0.3, 0.4};
  const std::vector<double> short_y{0.0, 0.5, 1.0, 0.5, 0.0};
  EXPECT_THROW(find_peak(short_x, short_y), FitError);

  EXPECT_THROW(find_peak({0.2, 0.1}, {0.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(find_peak(xs, short_y), std::invalid_argument);
}

TEST(Sweep, ExtrapolationRecoversExactLine) {
  std::vector<std::pair<long, double>> peaks;
  for (long L : {12, 16, 20, 24, 28})
    peaks.emplace_back(L, 0.372 + 0.5 / static_cast<double>(L));
  const Extrapolation e = extrapolate_pc(peaks);
  EXPECT_NEAR(e.p_c, 0.372, 1e-12);
  EXPECT_NEAR(e.slope, 0.5, 1e-10);
  EXPECT_LT(e.rms_residual, 1e-12);
  EXPECT_EQ(e.points, 5);

  EXPECT_THROW(extrapolate_pc({{12, 0.4}, {16, 0.39}}), FitError);
  EXPECT_THROW(extrapolate_pc({{12, 0.4}, {12, 0.41}, {16, 0.39}}), FitError);
}

TEST(Sweep, ConfigValidationCatchesBadInputs) {
  SweepConfig cfg = fast_config("");
  EXPECT_NO_THROW(cfg.validate());

  SweepConfig bad = cfg;
  bad.sizes = {5};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.sizes = {2};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.p_zz_grid = {0.2, 0.1};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.p_zz_grid = {0.6};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.threads = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.j_over_h = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Sweep, EndToEndSmallScanWritesConsistentArtifacts) {
  const std::string dir = fresh_dir("sweep_e2e");
  SweepConfig cfg = fast_config(dir);
  cfg.measure_profiles = true;
  const SweepResult res = run_sweep(cfg);

  ASSERT_EQ(res.rows.size(), 3u);
  for (const SweepRow& r : res.rows) {
    EXPECT_TRUE(r.ok) << r.error;
    EXPECT_EQ(r.L, 4);
    EXPECT_FALSE(r.regime.empty());
    EXPECT_GE(r.max_bond_used, 1);
  }
  // Decoherence-free point: the upper and strange diagnostics coincide on a
  // pure state.
  EXPECT_EQ(res.rows[0].p_zz, 0.0);
  EXPECT_NEAR(res.rows[0].chi_upper, res.rows[0].chi_strange, 1e-8);

  // Three grid points cannot support the sixth-order peak fit; the failure
  // must be recorded, not thrown.
  ASSERT_EQ(res.peaks.size(), 1u);
  EXPECT_FALSE(res.peaks[0].ok);
  EXPECT_FALSE(res.extrapolation.has_value());

  // L-1 profile cuts per point.
  EXPECT_EQ(res.profiles.size(), 3u * 3u);

  const std::vector<SweepRow> reread = read_rows_csv(dir + "/rows.csv");
  ASSERT_EQ(reread.size(), res.rows.size());
  for (size_t k = 0; k < reread.size(); ++k) {
    expect_rows_equal_ignoring_time(reread[k], res.rows[k]);
    EXPECT_EQ(reread[k].wall_time_s, res.rows[k].wall_time_s);  // exact round trip
  }
  const std::vector<ProfileRow> profs = read_profiles_csv(dir + "/profiles.csv");
  EXPECT_EQ(profs.size(), res.profiles.size());

  std::ifstream jf(dir + "/fits.json");
  ASSERT_TRUE(jf.good());
  const nlohmann::json j = nlohmann::json::parse(jf);
  EXPECT_EQ(j.at("schema_version"), 1);
  EXPECT_TRUE(j.at("extrapolation").is_null());
  EXPECT_EQ(j.at("peaks").size(), 1u);

  std::filesystem::remove_all(dir);
}

TEST(Sweep, DeterministicAcrossRunsAndThreadCounts) {
  const std::string dir1 = fresh_dir("sweep_det1");
  const std::string dir2 = fresh_dir("sweep_det2");
  SweepConfig cfg1 = fast_config(dir1);
  SweepConfig cfg2 = fast_config(dir2);
  cfg2.threads = 3;

  const SweepResult a = run_sweep(cfg1);
  const SweepResult b = run_sweep(cfg2);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (size_t k = 0; k < a.rows.size(); ++k)
    expect_rows_equal_ignoring_time(a.rows[k], b.rows[k]);

  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}

TEST(Sweep, ResumeReusesFinishedRowsAndCheckpoints) {
  const std::string dir = fresh_dir("sweep_resume");
  SweepConfig first = fast_config(dir);
  first.p_zz_grid = {0.0, 0.1};
  const SweepResult before = run_sweep(first);
  ASSERT_TRUE(std::filesystem::exists(dir + "/rho0_L4.mps"));

  SweepConfig second = fast_config(dir);
  second.resume = true;  // grid extends the finished one
  const SweepResult after = run_sweep(second);

  ASSERT_EQ(after.rows.size(), 3u);
  for (size_t k = 0; k < 2; ++k) {
    expect_rows_equal_ignoring_time(after.rows[k], before.rows[k]);
    // Reused rows are copied verbatim, including their original timing.
    EXPECT_EQ(after.rows[k].wall_time_s, before.rows[k].wall_time_s);
  }
  EXPECT_TRUE(after.rows[2].ok) << after.rows[2].error;
  EXPECT_EQ(after.rows[2].p_zz, 0.2);

  std::filesystem::remove_all(dir);
}

TEST(Sweep, UnconvergedPreparationFlagsRowsWithoutAborting) {
  const std::string dir = fresh_dir("sweep_unconverged");
  SweepConfig cfg = fast_config(dir);
  cfg.dmrg.max_sweeps = 1;  // cannot satisfy the noise-free convergence check
  const SweepResult res = run_sweep(cfg);
  ASSERT_EQ(res.rows.size(), 3u);
  for (const SweepRow& r : res.rows) {
    EXPECT_FALSE(r.ok);
    EXPECT_FALSE(r.error.empty());
  }
  EXPECT_FALSE(res.peaks[0].ok);
  std::filesystem::remove_all(dir);
}

TEST(Sweep, RowsCsvEscapesDelimitersInMessages) {
  const std::string dir = fresh_dir("sweep_csv");
  std::filesystem::create_directories(dir);
  SweepRow r;
  r.L = 4;
  r.error = "failed, badly: \"quoted\"\npart";
  r.regime = "crossover";
  write_rows_csv({r}, dir + "/rows.csv");

  const std::vector<SweepRow> reread = read_rows_csv(dir + "/rows.csv");
  ASSERT_EQ(reread.size(), 1u);
  // Commas and quotes survive the round trip; line breaks flatten to spaces.
  EXPECT_EQ(reread[0].error, "failed, badly: \"quoted\" part");
  EXPECT_EQ(reread[0].regime, "crossover");
  std::filesystem::remove_all(dir);
}

TEST(Sweep, ZzOnlyModeKeepsBitFlipChannelOff) {
  const std::string dir = fresh_dir("sweep_zzonly");
  SweepConfig cfg = fast_config(dir);
  cfg.mode = SweepConfig::Mode::ZzOnly;
  cfg.p_zz_grid = {0.0, 0.2};
  const SweepResult res = run_sweep(cfg);
  for (const SweepRow& r : res.rows) {
    EXPECT_TRUE(r.ok) << r.error;
    EXPECT_EQ(r.p_x, 0.0);
  }
  std::filesystem::remove_all(dir);
}
