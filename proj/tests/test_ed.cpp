#include "choimps/ed.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace choimps;
using ed::DenseState;

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j)
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

Eigen::MatrixXd eye(long n) { return Eigen::MatrixXd::Identity(n, n); }

Eigen::MatrixXd Z() {
  Eigen::MatrixXd z(2, 2);
  z << 1, 0, 0, -1;
  return z;
}

Eigen::MatrixXd X() {
  Eigen::MatrixXd x(2, 2);
  x << 0, 1, 1, 0;
  return x;
}

Eigen::MatrixXd embed(long n, const std::map<long, Eigen::MatrixXd>& ops) {
  Eigen::MatrixXd full = eye(1);
  for (long i = 0; i < n; ++i) {
    auto it = ops.find(i);
    full = kron(full, it == ops.end() ? eye(2) : it->second);
  }
  return full;
}

Eigen::MatrixXd chain_hamiltonian_oracle(double J, double h, long L, bool periodic) {
  Eigen::MatrixXd hm = Eigen::MatrixXd::Zero(1L << L, 1L << L);
  for (long j = 0; j < L; ++j) {
    if (j + 1 < L || periodic) hm -= J * embed(L, {{j, Z()}, {(j + 1) % L, Z()}});
    hm -= h * embed(L, {{j, X()}});
  }
  return hm;
}

// Ladder Hamiltonian in the interleaved site ordering (upper leg on even
// chain sites), built independently of the library's MPO machinery.
Eigen::MatrixXd ladder_hamiltonian_oracle(double J, double h, long L) {
  const long n = 2 * L;
  Eigen::MatrixXd hm = Eigen::MatrixXd::Zero(1L << n, 1L << n);
  for (long off : {0L, 1L})
    for (long j = 0; j < L; ++j) {
      hm -= J * embed(n, {{2 * j + off, Z()}, {(2 * j + 2) % n + off, Z()}});
      hm -= h * embed(n, {{2 * j + off, X()}});
    }
  return hm;
}

}  // namespace

TEST(DenseEd, ChainHamiltonianMatchesOracle) {
  for (bool periodic : {true, false}) {
    Eigen::MatrixXd got = ed::tfim_chain_dense(0.8, 1.3, 4, periodic);
    Eigen::MatrixXd want = chain_hamiltonian_oracle(0.8, 1.3, 4, periodic);
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(DenseEd, GroundStateSolvesLadder) {
  ModelParams params{1.0, 1.0, 4, true};
  ed::GroundSolution g = ed::ground_state_dense(params);

  // The doubled vector is an eigenvector of the independently built ladder
  // Hamiltonian at the reported energy.
  Eigen::MatrixXd hl = ladder_hamiltonian_oracle(params.J, params.h, params.L);
  Eigen::VectorXd hv = hl * g.state.vec;
  EXPECT_LT((hv - g.energy * g.state.vec).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(g.state.vec.norm(), 1.0, 1e-12);

  // And it is the *lowest* eigenvalue.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hl);
  EXPECT_NEAR(es.eigenvalues()(0), g.energy, 1e-10);
}

TEST(DenseEd, DegenerateGroundResolvesToEvenParity) {
  ModelParams params{1.0, 0.02, 4, true};  // deep ferromagnet: near-exact degeneracy
  ed::GroundSolution g = ed::ground_state_dense(params);
  const long dim = 1L << params.L;
  Eigen::VectorXd flipped(dim);
  for (long r = 0; r < dim; ++r) flipped(r) = g.chain((~r) & (dim - 1));
  EXPECT_NEAR(g.chain.dot(flipped), 1.0, 1e-9);  // <parity> = +1 cat state
}

TEST(DenseEd, FreeFermionEnergyMatchesDenseBothParities) {
  const long L = 6;
  for (auto [J, h] : std::vector<std::pair<double, double>>{{1.0, 1.0}, {0.4, 1.1}, {1.7, 0.6}}) {
    Eigen::MatrixXd hm = chain_hamiltonian_oracle(J, h, L, true);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hm);
    Eigen::MatrixXd parity = embed(L, [] {
      std::map<long, Eigen::MatrixXd> xs;
      for (long j = 0; j < 6; ++j) xs[j] = X();
      return xs;
    }());

    double best_even = 1e300, best_odd = 1e300;
    for (long k = 0; k < hm.rows(); ++k) {
      const Eigen::VectorXd v = es.eigenvectors().col(k);
      const double pexp = v.dot(parity * v);
      if (pexp > 0.5) best_even = std::min(best_even, es.eigenvalues()(k));
      if (pexp < -0.5) best_odd = std::min(best_odd, es.eigenvalues()(k));
    }
    EXPECT_NEAR(ed::tfim_exact_energy(J, h, L, +1), best_even, 1e-10) << J << " " << h;
    EXPECT_NEAR(ed::tfim_exact_energy(J, h, L, -1), best_odd, 1e-10) << J << " " << h;
  }
}

TEST(DenseEd, FreeFermionClosedForms) {
  // Decoupled limits are exact: J = 0 gives -hL, h = 0 gives -JL.
  EXPECT_NEAR(ed::tfim_exact_energy(0.0, 1.3, 8, +1), -1.3 * 8, 1e-12);
  EXPECT_NEAR(ed::tfim_exact_energy(2.0, 0.0, 8, +1), -2.0 * 8, 1e-12);
  // Critical point: sum of sines telescopes to -2 / sin(pi / 2L).
  const double want = -2.0 / std::sin(std::numbers::pi / 16.0);
  EXPECT_NEAR(ed::tfim_exact_energy(1.0, 1.0, 8, +1), want, 1e-12);
}

TEST(DenseEd, PictureConversionRoundTrip) {
  ed::GroundSolution g = ed::ground_state_dense({0.9, 1.1, 4, true});
  DenseState phys = g.state.to_physical();
  DenseState back = phys.to_doubled();
  EXPECT_LT((back.vec - g.state.vec).cwiseAbs().maxCoeff(), 1e-14);

  // The physical ground density matrix is symmetric, positive, trace 1.
  EXPECT_LT((phys.mat - phys.mat.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(phys.mat.trace(), 1.0, 1e-12);
}

TEST(DenseEd, ChannelPicturesAgree) {
  ed::GroundSolution g = ed::ground_state_dense({1.2, 1.0, 4, true});
  for (auto [pzz, px] : std::vector<std::pair<double, double>>{
           {0.0, 0.0}, {0.15, 0.0}, {0.2, 0.3}, {0.5, 0.1}, {0.5, 0.5}}) {
    DenseState via_phys = ed::apply_channel_dense(g.state.to_physical(), pzz, px).to_doubled();
    DenseState via_doub = ed::apply_channel_dense(g.state, pzz, px);
    EXPECT_LT((via_phys.vec - via_doub.vec).cwiseAbs().maxCoeff(), 1e-12)
        << pzz << " " << px;
  }
}

TEST(DenseEd, ChannelPreservesTraceAndShrinksPurity) {
  ed::GroundSolution g = ed::ground_state_dense({0.8, 1.0, 4, true});
  DenseState dec = ed::apply_channel_dense(g.state, 0.2, 0.1);
  ed::DenseObservables o = ed::observables_dense(dec);
  EXPECT_NEAR(o.trace, 1.0, 1e-12);
  EXPECT_LT(o.purity, 1.0);
  EXPECT_GT(o.purity, 0.0);

  // Saturated channels are idempotent.
  DenseState once = ed::apply_channel_dense(g.state.to_physical(), 0.5, 0.5);
  DenseState twice = ed::apply_channel_dense(once, 0.5, 0.5);
  EXPECT_LT((once.mat - twice.mat).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DenseEd, StrangeCorrelatorEqualsCanonicalCorrelator) {
  ed::GroundSolution g = ed::ground_state_dense({1.1, 1.0, 4, true});
  DenseState dec = ed::apply_channel_dense(g.state, 0.23, 0.08);
  DenseState phys = dec.to_physical();
  for (long r = 1; r <= 2; ++r) {
    const Eigen::MatrixXd zz = embed(4, {{0, Z()}, {r, Z()}});
    const double canonical = (phys.mat * zz).trace() / phys.mat.trace();
    EXPECT_NEAR(ed::strange_correlator_dense(dec, 0, r), canonical, 1e-12);
  }
}

TEST(DenseEd, DoubledCorrelatorsMatchDensityMatrixAlgebra) {
  ed::GroundSolution g = ed::ground_state_dense({0.9, 1.0, 4, true});
  DenseState dec = ed::apply_channel_dense(g.state, 0.17, 0.05);
  const Eigen::MatrixXd rho = dec.to_physical().mat;
  for (long r = 1; r <= 2; ++r) {
    const Eigen::MatrixXd zz = embed(4, {{0, Z()}, {r, Z()}});
    const double renyi2 = (rho * zz * rho * zz).trace() / (rho * rho).trace();
    const double upper = (rho * rho * zz).trace() / (rho * rho).trace();
    EXPECT_NEAR(ed::renyi2_correlator_dense(dec, 0, r), renyi2, 1e-12);
    EXPECT_NEAR(ed::upper_correlator_dense(dec, 0, r), upper, 1e-12);
  }
}

TEST(DenseEd, EntropyVanishesOnProductState) {
  // J = 0 ground state is a product of |+> spins; the doubled state is a
  // product over rungs, so every even-rung cut has zero entropy.
  ed::GroundSolution g = ed::ground_state_dense({0.0, 1.0, 4, true});
  ed::DenseObservables o = ed::observables_dense(g.state);
  for (double s : o.profile) EXPECT_NEAR(s, 0.0, 1e-10);
}

TEST(DenseEd, ProfileIsSymmetricAtCriticality) {
  ed::GroundSolution g = ed::ground_state_dense({1.0, 1.0, 6, true});
  ed::DenseObservables o = ed::observables_dense(g.state);
  ASSERT_EQ(o.profile.size(), 5u);
  for (size_t x = 0; x < o.profile.size(); ++x)
    EXPECT_NEAR(o.profile[x], o.profile[o.profile.size() - 1 - x], 1e-9);
}

TEST(DenseEd, GoldenCsvHasExpectedShape) {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "choimps_golden.csv").string();
  std::vector<ed::GoldenPoint> pts;
  pts.push_back({{1.0, 1.0, 4, true}, 0.1, 0.1});
  pts.push_back({{0.5, 1.0, 4, true}, 0.3, 0.0});
  ed::write_golden_csv(pts, path);

  std::ifstream is(path);
  ASSERT_TRUE(is.good());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "L,J,h,p_zz,p_x,observable,value");
  long rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 2 * 7);  // 7 observables per point
  fs::remove(path);
}
