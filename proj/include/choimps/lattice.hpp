#pragma once

#include <map>
#include <vector>

#include "choimps/mps.hpp"
#include "choimps/tensor.hpp"

namespace choimps {

// Two-leg ladder layout used throughout: a density operator on L spins is a
// state on 2L sites, with rung j occupying chain positions 2j (upper leg,
// ket side) and 2j+1 (lower leg, bra side).
enum class Leg { Upper, Lower };

inline long ladder_site(long rung, Leg leg) {
  return 2 * rung + (leg == Leg::Lower ? 1 : 0);
}

// Transverse-field Ising chain parameters.  The doubled-space builders put
// one copy of the Hamiltonian on each leg.
struct ModelParams {
  double J = 1.0;
  double h = 1.0;
  long L = 4;               // number of rungs (spins); must be even and >= 2
  bool periodic = true;

  void validate() const;    // throws std::invalid_argument
};

// Self-dual anisotropic transverse-field model on the ladder: the doubled
// Ising part plus four-site plaquette (Z Z Z Z around a square) and rung XX
// couplings with strengths J*lambda_zz and h*lambda_x.
struct QatParams {
  double J = 1.0;
  double h = 1.0;
  double lambda_zz = 0.0;
  double lambda_x = 0.0;
  long L = 4;

  void validate() const;
};

// Filtering angle of a single-Kraus dephasing channel of strength p:
// (1-p) I + p K = sqrt(1-2p) exp(tau K) with tau = atanh(p / (1-p)).
// p = 1/2 returns +infinity (the channel becomes a rank-one projector).
double tau_of_p(double p);

// Bit-flip strength that matches the ZZ filtering angle through the coupling
// ratio: p_x = 1/2 - (1/2) (1 - 2 p_zz)^(1/J).
double map_px(double p_zz, double J);

// Parameter bundle for one decoherence point.  log_prefactor collects the
// sqrt(1-2p) scale factors of all 2L channel applications analytically
// (saturated channels contribute zero under the projector convention).
struct ChannelSpec {
  double p_zz = 0.0;
  double p_x = 0.0;
  double tau_zz = 0.0;      // +inf when p_zz == 1/2
  double tau_x = 0.0;       // +inf when p_x == 1/2
  double log_prefactor = 0.0;
  long L = 0;

  bool zz_saturated() const { return std::isinf(tau_zz); }
  bool x_saturated() const { return std::isinf(tau_x); }

  // Both strengths given directly.
  static ChannelSpec general(double p_zz, double p_x, long L);
  // Bit-flip strength derived from p_zz via map_px at coupling ratio J.
  static ChannelSpec coupled(double p_zz, double J, long L);
  static ChannelSpec zz_only(double p_zz, long L);
};

// Pauli matrices as 2x2 tensors.
Tensor pauli_x();
Tensor pauli_z();
Tensor pauli_id();

// A weighted product of single-site 2x2 operators (identity elsewhere).
struct PauliTerm {
  double coeff = 1.0;
  std::map<long, Tensor> ops;  // site -> 2x2 operator
};

// Exact MPO for a sum of product terms: built as a direct sum over terms and
// then compressed with a near-machine-precision cutoff.  Deterministic.
Mpo pauli_string_sum_mpo(long n_sites, const std::vector<PauliTerm>& terms);

// Bond-2 MPO for  a * I + b * (product of the given single-site ops).
// Sites outside the operators' span get exact 1x1 identities, so applying it
// only touches the span.
Mpo two_term_mpo(long n_sites, double a, double b, const std::map<long, Tensor>& ops);

// Doubled transverse-field Ising Hamiltonian on the 2L-site ladder: the chain
// Hamiltonian acting on the upper leg plus an identical copy on the lower leg.
Mpo build_doubled_tfim_mpo(const ModelParams& params);

// Ladder Hamiltonian for QatParams (doubled Ising + plaquette + rung-XX).
Mpo build_qat_mpo(const QatParams& params);

// Plain single-chain transverse-field Ising Hamiltonian on L sites.
Mpo build_tfim_chain_mpo(double J, double h, long L, bool periodic);

// Two-site filtering gate cosh(tau) I + sinh(tau) X(x)X as a 4x4 tensor; for
// tau = +inf returns the saturated projector (I + X(x)X)/2.
Tensor build_x_rung_gate(double tau);

// Four-site ZZZZ plaquette filter exp(tau Z Z Z Z) (up to the analytic
// prefactor): bond-2 MPO cosh(tau) I + sinh(tau) ZZZZ on the plaquette of
// rungs j and j+1 (chain sites 2j, 2j+1, 2j+2, 2j+3, wrapping for
// j = L-1).  tau = +inf gives (I + ZZZZ)/2.
Mpo build_zz_plaquette_mpo(double tau, long rung, long L);

// Projector (I + prod X)/2 onto even spin-flip parity of one leg of the
// ladder (or, with Leg-independent `both`, the product of the two).
Mpo build_parity_projector_mpo(Leg leg, long L);
Mpo build_parity_projector_both_mpo(long L);

}  // namespace choimps
