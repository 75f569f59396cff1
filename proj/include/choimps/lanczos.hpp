#pragma once

#include <functional>
#include <vector>

#include "choimps/errors.hpp"

namespace choimps {

struct LanczosOptions {
  double tol = 1e-9;        // residual tolerance, relative to max(1, |value|)
  long max_iter = 200;      // total matrix-vector products allowed
  long restart_dim = 80;    // Krylov basis size per restart cycle
  unsigned long seed = 7;   // random start when no guess is supplied
  bool require_converged = true;  // throw ConvergenceError on failure
};

struct LanczosResult {
  double value = 0.0;
  std::vector<double> vector;
  double residual = 0.0;
  long iterations = 0;
  bool converged = false;
};

// Lowest eigenpair of a symmetric operator given only as y = A x, using
// restarted Lanczos with full reorthogonalization.  The basis is rebuilt from
// the best Ritz vector whenever restart_dim is reached, so memory stays at
// restart_dim * dim.  An exact invariant subspace (vanishing beta) is escaped
// by injecting a random orthogonal direction, which matters for symmetric
// starting vectors that do not overlap the true ground state.
LanczosResult lowest_eigenpair(
    const std::function<void(const double* in, double* out)>& apply_op,
    long dim, const LanczosOptions& opts = {},
    const std::vector<double>* initial_guess = nullptr);

}  // namespace choimps
