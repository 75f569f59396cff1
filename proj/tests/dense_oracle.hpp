#pragma once

// Slow, obviously-correct reference implementations used by the test suites.
// Everything here works directly on flat arrays with explicit index
// arithmetic so that it shares no code path with the library under test.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "choimps/mps.hpp"
#include "choimps/tensor.hpp"

namespace oracle {

// Pairwise contraction by brute-force enumeration of every index tuple.
inline choimps::Tensor contract(const choimps::Tensor& a, const choimps::Tensor& b,
                                const std::vector<std::pair<long, long>>& axes) {
  std::vector<long> a_free, b_free;
  std::vector<bool> a_used(a.rank(), false), b_used(b.rank(), false);
  for (auto [ia, ib] : axes) {
    a_used[ia] = true;
    b_used[ib] = true;
  }
  for (long i = 0; i < a.rank(); ++i)
    if (!a_used[i]) a_free.push_back(i);
  for (long i = 0; i < b.rank(); ++i)
    if (!b_used[i]) b_free.push_back(i);

  std::vector<long> out_dims;
  for (long i : a_free) out_dims.push_back(a.dim(i));
  for (long i : b_free) out_dims.push_back(b.dim(i));
  if (out_dims.empty()) out_dims.push_back(1);
  choimps::Tensor out(out_dims);

  std::vector<long> a_idx(a.rank(), 0), b_idx(b.rank(), 0);
  auto flat = [](const std::vector<long>& idx, const choimps::Tensor& t) {
    long f = 0;
    for (long k = 0; k < t.rank(); ++k) f = f * t.dim(k) + idx[k];
    return f;
  };

  long k_total = 1;
  for (auto [ia, ib] : axes) {
    (void)ib;
    k_total *= a.dim(ia);
  }

  for (long o = 0; o < out.size(); ++o) {
    // Decode output multi-index into the free slots of a and b.
    long rem = o;
    std::vector<long> o_idx(out_dims.size());
    for (long k = static_cast<long>(out_dims.size()) - 1; k >= 0; --k) {
      o_idx[k] = rem % out_dims[k];
      rem /= out_dims[k];
    }
    for (size_t k = 0; k < a_free.size(); ++k) a_idx[a_free[k]] = o_idx[k];
    for (size_t k = 0; k < b_free.size(); ++k) b_idx[b_free[k]] = o_idx[a_free.size() + k];

    double sum = 0.0;
    for (long kk = 0; kk < k_total; ++kk) {
      long rem_k = kk;
      for (auto it = axes.rbegin(); it != axes.rend(); ++it) {
        const long d = a.dim(it->first);
        a_idx[it->first] = rem_k % d;
        b_idx[it->second] = rem_k % d;
        rem_k /= d;
      }
      sum += a[flat(a_idx, a)] * b[flat(b_idx, b)];
    }
    out[o] = sum;
  }
  return out;
}

// Amplitude vector of an MPS over all 2^n configurations (site 0 is the most
// significant bit), including exp(log_norm).  Chain of per-site matrix
// products with explicit loops; safe only for small n.
inline Eigen::VectorXd mps_to_dense(const choimps::MpsState& s) {
  const long n = s.n_sites();
  Eigen::VectorXd out(1L << n);
  for (long cfg = 0; cfg < (1L << n); ++cfg) {
    std::vector<double> row{1.0};
    for (long i = 0; i < n; ++i) {
      const auto& t = s.site(i);
      const long bit = (cfg >> (n - 1 - i)) & 1;
      const long dl = t.dim(0), dr = t.dim(2);
      std::vector<double> next(dr, 0.0);
      for (long r = 0; r < dr; ++r)
        for (long l = 0; l < dl; ++l) next[r] += row[l] * t(l, bit, r);
      row = std::move(next);
    }
    out(cfg) = row[0];
  }
  return out * std::exp(s.log_norm());
}

// Dense matrix of an MPO over all configurations (same bit convention).
inline Eigen::MatrixXd mpo_to_dense(const choimps::Mpo& op) {
  const long n = op.n_sites();
  Eigen::MatrixXd out(1L << n, 1L << n);
  for (long r = 0; r < (1L << n); ++r)
    for (long c = 0; c < (1L << n); ++c) {
      std::vector<double> row{1.0};
      for (long i = 0; i < n; ++i) {
        const auto& w = op.sites[i];
        const long ro = (r >> (n - 1 - i)) & 1, ci = (c >> (n - 1 - i)) & 1;
        const long dl = w.dim(0), dr = w.dim(3);
        std::vector<double> next(dr, 0.0);
        for (long b = 0; b < dr; ++b)
          for (long a = 0; a < dl; ++a) next[b] += row[a] * w(a, ro, ci, b);
        row = std::move(next);
      }
      out(r, c) = row[0];
    }
  return out;
}

// Von Neumann entropy across a prefix cut of a dense state vector.
inline double prefix_entropy_dense(const Eigen::VectorXd& psi, long n_sites, long cut) {
  const long rows = 1L << cut, cols = 1L << (n_sites - cut);
  Eigen::MatrixXd m(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = psi(r * cols + c);
  m /= psi.norm();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  double s = 0.0;
  for (long i = 0; i < svd.singularValues().size(); ++i) {
    const double p = svd.singularValues()(i) * svd.singularValues()(i);
    if (p > 1e-14) s -= p * std::log(p);
  }
  return s;
}

}  // namespace oracle
