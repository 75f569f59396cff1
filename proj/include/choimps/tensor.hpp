#pragma once

#include <cassert>
#include <random>
#include <utility>
#include <vector>

namespace choimps {

// Dense real-valued tensor with row-major storage (last index fastest).
// All bond and physical indices in this codebase are carried by this one
// type; rank-2 tensors double as matrices for the factorization routines.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<long> dims);

  static Tensor scalar(double value);
  static Tensor identity(long n);
  static Tensor random(const std::vector<long>& dims, std::mt19937_64& rng);

  long rank() const { return static_cast<long>(dims_.size()); }
  long dim(long axis) const { return dims_[static_cast<size_t>(axis)]; }
  const std::vector<long>& dims() const { return dims_; }
  long size() const { return static_cast<long>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](long flat) { return data_[static_cast<size_t>(flat)]; }
  double operator[](long flat) const { return data_[static_cast<size_t>(flat)]; }

  template <class... Ix>
  double& operator()(Ix... ix) {
    const long idx[] = {static_cast<long>(ix)...};
    return data_[static_cast<size_t>(flat_index(idx, sizeof...(ix)))];
  }
  template <class... Ix>
  double operator()(Ix... ix) const {
    const long idx[] = {static_cast<long>(ix)...};
    return data_[static_cast<size_t>(flat_index(idx, sizeof...(ix)))];
  }

  // Reinterprets the data with new dimensions; total size must be unchanged.
  Tensor reshaped(std::vector<long> new_dims) const;

  double norm() const;         // Frobenius
  double max_abs() const;
  void scale(double factor);

 private:
  long flat_index(const long* idx, size_t n) const;

  std::vector<long> dims_;
  std::vector<double> data_;
};

// Result of a (possibly truncated) singular value decomposition
// m = u . diag(s) . vt, with u column-isometric and vt row-isometric.
// discarded_weight is the sum of the squared singular values dropped, which
// equals the squared Frobenius norm of the reconstruction error.
struct SvdResult {
  Tensor u;                       // (rows, rank)
  std::vector<double> s;          // descending, length rank
  Tensor vt;                      // (rank, cols)
  double discarded_weight = 0.0;
  long rank = 0;
};

// Pairwise tensor contraction.  axes lists (axis of a, axis of b) pairs to
// sum over; the result carries a's free axes (in order) then b's free axes.
Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<std::pair<long, long>>& axes);

// Permutes axes: result index (i_0, ..) equals a index (perm[0], ..) -- i.e.
// result axis k is a's axis perm[k].
Tensor transpose(const Tensor& a, const std::vector<long>& perm);

// Truncated SVD of a rank-2 tensor.  Keeps singular values with
// s_i >= rel_cutoff * s_0, capped at max_rank, and always at least one.
SvdResult svd_truncate(const Tensor& m, long max_rank, double rel_cutoff);

// Thin QR of a rank-2 tensor (rows x cols): m = q . r with q column-isometric
// of shape (rows, k), r of shape (k, cols), k = min(rows, cols).
std::pair<Tensor, Tensor> qr_factor(const Tensor& m);

// Thin LQ: m = l . q with q row-isometric of shape (k, cols).
std::pair<Tensor, Tensor> lq_factor(const Tensor& m);

// Kronecker product of two rank-2 tensors, index order (a_row b_row) x
// (a_col b_col).
Tensor kron(const Tensor& a, const Tensor& b);

}  // namespace choimps
