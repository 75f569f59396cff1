#pragma once

#include <utility>
#include <vector>

#include "choimps/lattice.hpp"
#include "choimps/mps.hpp"

namespace choimps {

struct DmrgConfig {
  TruncationPolicy trunc;        // bond cap and cutoff for the two-site update
  double energy_tol = 1e-4;      // sweep-to-sweep energy change for convergence
  long max_sweeps = 50;
  double eigen_tol = 1e-9;       // local Lanczos residual tolerance
  long lanczos_max_iter = 200;
  unsigned long seed = 12345;    // random product-state initialization
  // Deterministic noise added to the two-site block during the first sweeps,
  // decaying by a factor 10 per sweep.  This reliably shakes the optimizer
  // out of the local minima that periodic wrap couplings produce when
  // starting from a product state.  Convergence is only declared on
  // noise-free sweeps.
  long noise_sweeps = 4;
  double noise_amplitude = 1e-3;
};

struct DmrgReport {
  double energy = 0.0;
  std::vector<double> sweep_energies;   // energy after each full sweep
  std::vector<long> final_bond_profile;
  bool converged = false;
  double total_discarded_weight = 0.0;
};

// Random unentangled starting state for variational optimization.
MpsState random_product_state(long n_sites, unsigned long seed);

// Two-site DMRG ground-state search.  Sweeps until the energy changes by
// less than energy_tol between consecutive sweeps, or max_sweeps is hit
// (then converged = false and the best state so far is returned).  The
// returned state is canonical at site 0 with log_norm == 0.
std::pair<MpsState, DmrgReport> find_ground_state(const Mpo& hamiltonian,
                                                  MpsState initial,
                                                  const DmrgConfig& config);

// Ground state of the doubled Ising ladder, symmetrized for use as the
// filtering input: after the variational search, when J/h > 1 the state is
// projected onto even spin-flip parity on both legs (the finite-size ground
// state in the ferromagnetic phase is the even-parity cat state, and the
// projection makes that exact rather than approximate).  Set project_cat to
// false to skip the projection.  The result is normalized with log_norm 0.
MpsState prepare_initial_choi_state(const ModelParams& params, const DmrgConfig& config,
                                    DmrgReport* report = nullptr, bool project_cat = true);

}  // namespace choimps
