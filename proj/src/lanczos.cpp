#include "choimps/lanczos.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

namespace choimps {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return Eigen::Map<const Eigen::VectorXd>(a.data(), a.size())
      .dot(Eigen::Map<const Eigen::VectorXd>(b.data(), b.size()));
}

double nrm2(const std::vector<double>& a) {
  return Eigen::Map<const Eigen::VectorXd>(a.data(), a.size()).norm();
}

void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
  Eigen::Map<Eigen::VectorXd>(y.data(), y.size()) +=
      alpha * Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
}

void orthogonalize(std::vector<double>& w, const std::vector<std::vector<double>>& basis) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& v : basis) axpy(-dot(w, v), v, w);
}

}  // namespace

LanczosResult lowest_eigenpair(
    const std::function<void(const double* in, double* out)>& apply_op,
    long dim, const LanczosOptions& opts, const std::vector<double>* initial_guess) {
  if (dim < 1) throw std::invalid_argument("lowest_eigenpair: empty space");

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  auto random_fill = [&](std::vector<double>& v) {
    for (double& x : v) x = dist(rng);
  };

  std::vector<double> v0(static_cast<size_t>(dim));
  if (initial_guess && nrm2(*initial_guess) > 0.0) {
    v0 = *initial_guess;
  } else {
    random_fill(v0);
  }

  LanczosResult best;
  best.residual = std::numeric_limits<double>::infinity();
  long matvecs = 0;

  while (matvecs < opts.max_iter) {
    const double n0 = nrm2(v0);
    if (n0 == 0.0) random_fill(v0);
    Eigen::Map<Eigen::VectorXd>(v0.data(), dim) /= nrm2(v0);

    std::vector<std::vector<double>> basis;
    std::vector<double> alpha, beta;  // beta[j] couples basis[j] and basis[j+1]
    basis.push_back(v0);

    const long cycle = std::min({opts.restart_dim, dim, opts.max_iter - matvecs});
    std::vector<double> w(static_cast<size_t>(dim));
    Eigen::VectorXd ritz;
    long injections = 0;

    for (long j = 0; j < cycle; ++j) {
      apply_op(basis.back().data(), w.data());
      ++matvecs;
      const double a = dot(w, basis.back());
      alpha.push_back(a);
      orthogonalize(w, basis);
      const double b = nrm2(w);

      // Ritz pair from the tridiagonal projection built so far.
      const long m = static_cast<long>(alpha.size());
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
      for (long i = 0; i < m; ++i) {
        t(i, i) = alpha[static_cast<size_t>(i)];
        if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[static_cast<size_t>(i)];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
      const double value = es.eigenvalues()(0);
      ritz = es.eigenvectors().col(0);
      const double residual = std::abs(b * ritz(m - 1));
      const double scale = std::max(1.0, std::abs(value));

      if (residual <= best.residual) {
        best.value = value;
        best.residual = residual;
        best.converged = residual <= opts.tol * scale;
      }

      // A vanishing beta with a nearly-empty basis means the start vector sat
      // in a tiny invariant subspace: the zero residual proves an exact
      // eigenpair, not the lowest one.  Widen with a random orthogonal
      // direction before trusting it.
      const bool breakdown = b <= 1e-14 * std::max(1.0, std::abs(value));
      if (breakdown && m < 3 && m < dim && injections < 3 && j + 1 < cycle &&
          matvecs < opts.max_iter) {
        random_fill(w);
        orthogonalize(w, basis);
        const double wb = nrm2(w);
        if (wb > 0.0) {
          ++injections;
          beta.push_back(0.0);
          Eigen::Map<Eigen::VectorXd>(w.data(), dim) /= wb;
          basis.push_back(w);
          continue;
        }
      }

      if (residual <= opts.tol * scale || j + 1 == cycle || matvecs >= opts.max_iter) {
        // Assemble the Ritz vector in the full space before leaving the cycle.
        std::vector<double> x(static_cast<size_t>(dim), 0.0);
        for (long i = 0; i < m; ++i) axpy(ritz(i), basis[static_cast<size_t>(i)], x);
        const double xn = nrm2(x);
        if (xn > 0.0) Eigen::Map<Eigen::VectorXd>(x.data(), dim) /= xn;
        v0 = x;
        best.vector = std::move(x);
        best.value = value;
        best.residual = residual;
        best.converged = residual <= opts.tol * scale;
        break;
      }

      if (b <= 1e-14 * std::max(1.0, std::abs(a))) {
        // Invariant subspace: current Ritz pair is exact inside it, but the
        // global minimum may live outside.  Widen with a random direction.
        random_fill(w);
        orthogonalize(w, basis);
        const double wb = nrm2(w);
        if (wb == 0.0) break;
        beta.push_back(0.0);
        Eigen::Map<Eigen::VectorXd>(w.data(), dim) /= wb;
        basis.push_back(w);
      } else {
        beta.push_back(b);
        std::vector<double> next = w;
        Eigen::Map<Eigen::VectorXd>(next.data(), dim) /= b;
        basis.push_back(std::move(next));
      }
    }

    best.iterations = matvecs;
    if (best.converged || dim == 1) break;
  }

  if (dim == 1) {
    // Trivial space: a single application defines the eigenvalue exactly.
    std::vector<double> in{1.0}, out{0.0};
    apply_op(in.data(), out.data());
    best.value = out[0];
    best.vector = {1.0};
    best.residual = 0.0;
    best.converged = true;
  }

  if (!best.converged && opts.require_converged)
    throw ConvergenceError("lowest_eigenpair: residual " + std::to_string(best.residual) +
                               " above tolerance after " + std::to_string(best.iterations) +
                               " iterations",
                           best.residual);
  return best;
}

}  // namespace choimps
