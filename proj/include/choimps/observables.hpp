#pragma once

#include <vector>

#include "choimps/filter.hpp"
#include "choimps/mps.hpp"

namespace choimps {

// Two-point diagnostics of a filtered ladder state.  With rho the decohered
// density operator and |rho>> its ladder state:
//   Renyi2ZZ : <<rho| Z_i Z_j (upper) Z_i Z_j (lower) |rho>> / <<rho|rho>>
//              = Tr[rho Z_i Z_j rho Z_i Z_j] / Tr[rho^2]
//   StrangeZ : <<1| Z_i Z_j (upper) |rho>> / <<1|rho>>
//              = Tr[rho Z_i Z_j] / Tr[rho]   (canonical correlator)
//   UpperZZ  : <<rho| Z_i Z_j (upper) |rho>> / <<rho|rho>>
//              = Tr[rho^2 Z_i Z_j] / Tr[rho^2]
enum class CorrelatorKind { Renyi2ZZ, StrangeZ, UpperZZ };

// Ladder state representing the identity operator: a product over rungs of
// (|00> + |11>), normalized.  This is the bra of the StrangeZ correlator and
// the trace functional up to a known scale.
MpsState infinite_temperature_state(long n_rungs);

// C(i, j) between rungs i and j for the given kind.
double correlator(const FilteredState& f, CorrelatorKind kind, long i, long j);

// All C(0, r) for r = 1 .. r_max in one sweep (r_max defaults to L/2).
std::vector<double> correlator_curve(const FilteredState& f, CorrelatorKind kind,
                                     long r_max = -1);

// chi = (2/L) sum_{r=1}^{L/2} C(0, r).
double susceptibility(const FilteredState& f, CorrelatorKind kind);

// Average of the nearest-neighbor Renyi2ZZ correlator over all bonds,
// (1/L) sum_j C(j, j+1) with the wrap bond included.
double renyi2_nn_average(const FilteredState& f);

// Entanglement entropy of the filtered ladder state for the region that
// covers rungs 0..x-1 entirely plus the upper-leg site of rung x.  This is
// the cut used for the susceptibility-peak diagnostics; in the chain ordering
// it is a prefix of 2x + 1 sites.
double region_entropy(const FilteredState& f, long x);

// Entropy of half the ladder in the symmetric convention x = L/2.
double half_ladder_entropy(const FilteredState& f);

// Rung-resolved entropy curve: S(x) across the rung boundary x for
// x = 1 .. L-1 (prefix of 2x chain sites), used for central-charge fits.
struct EntropyProfile {
  long L = 0;
  std::vector<long> x;        // rung cut positions
  std::vector<double> entropy;
};
EntropyProfile entropy_profile(const FilteredState& f);

// Least-squares fit of S(x) = (c_eff / 3) log(2L sin(pi x / L)) + b over the
// window x in [x_min, x_max] (defaults exclude the two outermost cuts on
// each side).  Throws FitError with fewer than two points.
struct CeffFit {
  double c_eff = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  long points = 0;
};
CeffFit fit_ceff(const EntropyProfile& profile, long x_min = -1, long x_max = -1);

// log Tr[rho^2] of the decohered density operator, using the state's norm
// and the analytic prefactor: 2 * (log_norm of the filtered state).
double purity_log(const FilteredState& f);

}  // namespace choimps
