#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "choimps/lattice.hpp"

namespace choimps::ed {

// Dense representations used by the exact small-system oracle.  Basis
// conventions match the tensor-network side: site 0 is the most significant
// bit, bit 0 means spin up (Z = +1), and the ladder interleaves a rung's
// upper-leg bit directly before its lower-leg bit.
struct DenseState {
  enum class Picture {
    Doubled,   // vector over 4^L ladder configurations
    Physical,  // 2^L x 2^L density-operator matrix
  };

  Picture picture = Picture::Doubled;
  long L = 0;                 // rungs / spins
  Eigen::VectorXd vec;        // Doubled payload
  Eigen::MatrixXd mat;        // Physical payload

  static DenseState doubled(long L, Eigen::VectorXd v);
  static DenseState physical(long L, Eigen::MatrixXd m);

  DenseState to_doubled() const;    // interleaving vectorization
  DenseState to_physical() const;
};

// Dense single-chain Hamiltonian -sum_j (J Z_j Z_{j+1} + h X_j).
Eigen::MatrixXd tfim_chain_dense(double J, double h, long L, bool periodic);

struct GroundSolution {
  DenseState state;        // doubled picture, |psi> (x) |psi> interleaved
  double energy = 0.0;     // ladder energy: twice the chain ground energy
  Eigen::VectorXd chain;   // the chain ground vector used for the doubling
};

// Exact ground state of the doubled Ising ladder via a single-chain dense
// diagonalization (the two legs are decoupled, so the ladder ground state is
// a product).  Near-degenerate chain ground spaces (gap < 1e-8) are resolved
// onto the even spin-flip-parity combination, matching the cat-state
// convention of the variational path.
GroundSolution ground_state_dense(const ModelParams& params);

// Applies the full decoherence point (every bond's ZZ channel and every
// site's X channel) exactly.  In the Physical picture, channels act by
// conjugation on the density matrix and the result stays trace-normalized
// the way a channel leaves it; in the Doubled picture, the filtering gates
// and the analytic prefactor act on the vector.  The two pictures agree
// through the vectorization isomorphism.
DenseState apply_channel_dense(const DenseState& s, double p_zz, double p_x);

// Every diagnostic the tensor-network side measures, evaluated exactly.
struct DenseObservables {
  double chi_renyi2 = 0.0;
  double chi_strange = 0.0;
  double chi_upper = 0.0;
  double renyi2_nn_average = 0.0;
  double region_entropy = 0.0;       // rungs 0..L/2-1 plus upper site of L/2
  double purity = 0.0;               // Tr[rho^2]
  double trace = 0.0;                // Tr[rho]
  std::vector<double> profile;       // S(x), x = 1..L-1, even rung cuts
  std::vector<double> renyi2_curve;  // C(0, r), r = 1..L/2
  std::vector<double> strange_curve;
  std::vector<double> upper_curve;
};
DenseObservables observables_dense(const DenseState& s);

// Individual dense diagnostics (doubled picture).
double renyi2_correlator_dense(const DenseState& s, long i, long j);
double strange_correlator_dense(const DenseState& s, long i, long j);
double upper_correlator_dense(const DenseState& s, long i, long j);
double prefix_entropy_dense(const DenseState& s, long n_chain_sites);

// Ground energy of the transverse-field Ising chain from its free-fermion
// solution, restricted to the given spin-flip parity sector (+1 or -1).
// Periodic chain, L even.
double tfim_exact_energy(double J, double h, long L, int parity);

// Writes a reference table of decohered diagnostics over a parameter list to
// CSV with columns (L, J, h, p_zz, p_x, observable, value).
struct GoldenPoint {
  ModelParams model;
  double p_zz = 0.0;
  double p_x = 0.0;
};
void write_golden_csv(const std::vector<GoldenPoint>& points, const std::string& path);

}  // namespace choimps::ed
