#include "choimps/dmrg.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "choimps/ed.hpp"
#include "dense_oracle.hpp"

using namespace choimps;

namespace {

DmrgConfig tight_config() {
  DmrgConfig cfg;
  cfg.trunc = {64, 1e-10};
  cfg.energy_tol = 1e-10;
  cfg.eigen_tol = 1e-11;
  cfg.max_sweeps = 30;
  return cfg;
}

}  // namespace

TEST(Dmrg, SingleChainMatchesFreeFermionEnergy) {
  const long L = 8;
  Mpo h = build_tfim_chain_mpo(1.0, 1.0, L, true);
  auto [state, report] = find_ground_state(h, random_product_state(L, 1), tight_config());

  EXPECT_TRUE(report.converged);
  EXPECT_NEAR(report.energy, ed::tfim_exact_energy(1.0, 1.0, L, +1), 1e-8);
  EXPECT_EQ(state.center(), 0);
  EXPECT_DOUBLE_EQ(state.log_norm(), 0.0);
}

TEST(Dmrg, DoubledLadderMatchesDenseGroundState) {
  ModelParams params{1.0, 1.0, 4, true};
  Mpo h = build_doubled_tfim_mpo(params);
  auto [state, report] = find_ground_state(h, random_product_state(8, 2), tight_config());

  ed::GroundSolution exact = ed::ground_state_dense(params);
  EXPECT_TRUE(report.converged);
  EXPECT_NEAR(report.energy, exact.energy, 1e-8);
  EXPECT_NEAR(report.energy, 2.0 * ed::tfim_exact_energy(1.0, 1.0, 4, +1), 1e-8);

  // Overlap with the dense ground vector should be 1 up to sign.
  Eigen::VectorXd psi = oracle::mps_to_dense(state);
  EXPECT_NEAR(std::abs(psi.dot(exact.state.vec)), 1.0, 1e-7);
}

TEST(Dmrg, SweepEnergiesRespectVariationalBound) {
  ModelParams params{0.7, 1.0, 4, true};
  Mpo h = build_doubled_tfim_mpo(params);
  auto [state, report] = find_ground_state(h, random_product_state(8, 3), tight_config());

  const double exact = ed::ground_state_dense(params).energy;
  ASSERT_GE(report.sweep_energies.size(), 2u);
  for (size_t k = 0; k < report.sweep_energies.size(); ++k) {
    EXPECT_GE(report.sweep_energies[k], exact - 1e-9);
    if (k > 0) EXPECT_LE(report.sweep_energies[k], report.sweep_energies[k - 1] + 1e-9);
  }
  EXPECT_EQ(report.final_bond_profile.size(), 7u);
}

TEST(Dmrg, UnconvergedRunIsFlagged) {
  Mpo h = build_tfim_chain_mpo(1.0, 1.0, 8, true);
  DmrgConfig cfg = tight_config();
  cfg.max_sweeps = 1;
  auto [state, report] = find_ground_state(h, random_product_state(8, 4), cfg);
  EXPECT_FALSE(report.converged);
  EXPECT_EQ(report.sweep_energies.size(), 1u);
}

TEST(Dmrg, DeterministicForFixedSeed) {
  Mpo h = build_tfim_chain_mpo(0.9, 1.0, 6, true);
  DmrgConfig cfg = tight_config();
  cfg.seed = 77;
  auto [s1, r1] = find_ground_state(h, random_product_state(6, cfg.seed), cfg);
  auto [s2, r2] = find_ground_state(h, random_product_state(6, cfg.seed), cfg);
  EXPECT_DOUBLE_EQ(r1.energy, r2.energy);
  ASSERT_EQ(s1.bond_profile(), s2.bond_profile());
  for (long i = 0; i < s1.n_sites(); ++i)
    for (long k = 0; k < s1.site(i).size(); ++k)
      EXPECT_DOUBLE_EQ(s1.site(i)[k], s2.site(i)[k]);
}

TEST(Dmrg, PreparedStateIsEvenParityCatInFerromagneticPhase) {
  ModelParams params{1.5, 1.0, 4, true};
  DmrgConfig cfg = tight_config();
  MpsState state = prepare_initial_choi_state(params, cfg);

  EXPECT_DOUBLE_EQ(state.log_norm(), 0.0);
  EXPECT_NEAR(inner(state, state).value(), 1.0, 1e-10);

  // Even spin-flip parity on each leg.
  const Tensor x = pauli_x();
  std::vector<std::pair<long, Tensor>> upper_flip, lower_flip;
  for (long j = 0; j < params.L; ++j) {
    upper_flip.push_back({ladder_site(j, Leg::Upper), x});
    lower_flip.push_back({ladder_site(j, Leg::Lower), x});
  }
  EXPECT_NEAR(expect_product_op(state, upper_flip, state).value(), 1.0, 1e-8);
  EXPECT_NEAR(expect_product_op(state, lower_flip, state).value(), 1.0, 1e-8);

  // It matches the dense cat-resolved ground state.
  ed::GroundSolution exact = ed::ground_state_dense(params);
  Eigen::VectorXd psi = oracle::mps_to_dense(state);
  EXPECT_NEAR(std::abs(psi.dot(exact.state.vec)), 1.0, 1e-6);

  // And its energy is the dense ground energy.
  Mpo h = build_doubled_tfim_mpo(params);
  EXPECT_NEAR(expect_mpo(state, h, state).value(), exact.energy, 1e-6);
}

TEST(Dmrg, PreparedStateMatchesDenseAtCriticality) {
  ModelParams params{1.0, 1.0, 4, true};
  MpsState state = prepare_initial_choi_state(params, tight_config());
  ed::GroundSolution exact = ed::ground_state_dense(params);
  Eigen::VectorXd psi = oracle::mps_to_dense(state);
  EXPECT_NEAR(std::abs(psi.dot(exact.state.vec)), 1.0, 1e-7);
}
