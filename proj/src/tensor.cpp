#include "choimps/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace choimps {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRowMat = Eigen::Map<RowMat>;
using ConstMapRowMat = Eigen::Map<const RowMat>;

long product(const std::vector<long>& dims) {
  long p = 1;
  for (long d : dims) p *= d;
  return p;
}

std::vector<long> row_major_strides(const std::vector<long>& dims) {
  std::vector<long> strides(dims.size(), 1);
  for (long i = static_cast<long>(dims.size()) - 2; i >= 0; --i)
    strides[static_cast<size_t>(i)] =
        strides[static_cast<size_t>(i + 1)] * dims[static_cast<size_t>(i + 1)];
  return strides;
}

}  // namespace

Tensor::Tensor(std::vector<long> dims) : dims_(std::move(dims)) {
  for (long d : dims_)
    if (d <= 0) throw std::invalid_argument("Tensor: dimensions must be positive");
  data_.assign(static_cast<size_t>(product(dims_)), 0.0);
}

Tensor Tensor::scalar(double value) {
  Tensor t(std::vector<long>{1});
  t[0] = value;
  return t;
}

Tensor Tensor::identity(long n) {
  Tensor t({n, n});
  for (long i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::random(const std::vector<long>& dims, std::mt19937_64& rng) {
  Tensor t(dims);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (long i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

long Tensor::flat_index(const long* idx, size_t n) const {
  assert(n == dims_.size());
  long flat = 0;
  for (size_t k = 0; k < n; ++k) {
    assert(idx[k] >= 0 && idx[k] < dims_[k]);
    flat = flat * dims_[k] + idx[k];
  }
  return flat;
}

Tensor Tensor::reshaped(std::vector<long> new_dims) const {
  if (product(new_dims) != size())
    throw std::invalid_argument("Tensor::reshaped: size mismatch");
  Tensor out;
  out.dims_ = std::move(new_dims);
  out.data_ = data_;
  return out;
}

double Tensor::norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

void Tensor::scale(double factor) {
  for (double& v : data_) v *= factor;
}

Tensor transpose(const Tensor& a, const std::vector<long>& perm) {
  const long r = a.rank();
  if (static_cast<long>(perm.size()) != r)
    throw std::invalid_argument("transpose: permutation rank mismatch");
  std::vector<long> seen(static_cast<size_t>(r), 0);
  std::vector<long> out_dims(static_cast<size_t>(r));
  for (long k = 0; k < r; ++k) {
    const long p = perm[static_cast<size_t>(k)];
    if (p < 0 || p >= r || seen[static_cast<size_t>(p)]++)
      throw std::invalid_argument("transpose: invalid permutation");
    out_dims[static_cast<size_t>(k)] = a.dim(p);
  }

  Tensor out(out_dims);
  const std::vector<long> in_strides = row_major_strides(a.dims());
  // Stride of the output's k-th axis inside the *input* flat layout.
  std::vector<long> walk(static_cast<size_t>(r));
  for (long k = 0; k < r; ++k)
    walk[static_cast<size_t>(k)] = in_strides[static_cast<size_t>(perm[static_cast<size_t>(k)])];

  std::vector<long> counter(static_cast<size_t>(r), 0);
  long src = 0;
  const long n = a.size();
  for (long dst = 0; dst < n; ++dst) {
    out[dst] = a[src];
    for (long k = r - 1; k >= 0; --k) {
      auto uk = static_cast<size_t>(k);
      if (++counter[uk] < out_dims[uk]) {
        src += walk[uk];
        break;
      }
      src -= walk[uk] * (out_dims[uk] - 1);
      counter[uk] = 0;
    }
  }
  return out;
}

Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<std::pair<long, long>>& axes) {
  std::vector<bool> a_used(static_cast<size_t>(a.rank()), false);
  std::vector<bool> b_used(static_cast<size_t>(b.rank()), false);
  long k_size = 1;
  for (auto [ia, ib] : axes) {
    if (ia < 0 || ia >= a.rank() || ib < 0 || ib >= b.rank())
      throw std::invalid_argument("contract: axis out of range");
    if (a_used[static_cast<size_t>(ia)] || b_used[static_cast<size_t>(ib)])
      throw std::invalid_argument("contract: repeated axis");
    if (a.dim(ia) != b.dim(ib))
      throw std::invalid_argument("contract: dimension mismatch");
    a_used[static_cast<size_t>(ia)] = true;
    b_used[static_cast<size_t>(ib)] = true;
    k_size *= a.dim(ia);
  }

  std::vector<long> a_perm, b_perm, out_dims;
  long m_size = 1, n_size = 1;
  for (long i = 0; i < a.rank(); ++i)
    if (!a_used[static_cast<size_t>(i)]) {
      a_perm.push_back(i);
      out_dims.push_back(a.dim(i));
      m_size *= a.dim(i);
    }
  for (auto [ia, ib] : axes) {
    (void)ib;
    a_perm.push_back(ia);
  }
  for (auto [ia, ib] : axes) {
    (void)ia;
    b_perm.push_back(ib);
  }
  for (long i = 0; i < b.rank(); ++i)
    if (!b_used[static_cast<size_t>(i)]) {
      b_perm.push_back(i);
      out_dims.push_back(b.dim(i));
      n_size *= b.dim(i);
    }

  const Tensor at = transpose(a, a_perm);
  const Tensor bt = transpose(b, b_perm);

  if (out_dims.empty()) out_dims.push_back(1);  // full contraction -> scalar
  Tensor out(out_dims);
  ConstMapRowMat ma(at.data(), m_size, k_size);
  ConstMapRowMat mb(bt.data(), k_size, n_size);
  MapRowMat mo(out.data(), m_size, n_size);
  mo.noalias() = ma * mb;
  return out;
}

SvdResult svd_truncate(const Tensor& m, long max_rank, double rel_cutoff) {
  if (m.rank() != 2) throw std::invalid_argument("svd_truncate: rank-2 input required");
  if (max_rank < 1) throw std::invalid_argument("svd_truncate: max_rank must be >= 1");
  if (rel_cutoff < 0.0) throw std::invalid_argument("svd_truncate: negative cutoff");

  const long rows = m.dim(0), cols = m.dim(1);
  ConstMapRowMat mm(m.data(), rows, cols);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(mm, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const long full = sv.size();

  long keep = 0;
  const double threshold = rel_cutoff * sv(0);
  while (keep < full && keep < max_rank && sv(keep) > threshold) ++keep;
  if (keep == 0) keep = 1;  // zero matrix: keep a single null direction

  SvdResult res;
  res.rank = keep;
  res.s.assign(sv.data(), sv.data() + keep);
  res.discarded_weight = 0.0;
  for (long i = keep; i < full; ++i) res.discarded_weight += sv(i) * sv(i);

  res.u = Tensor({rows, keep});
  MapRowMat(res.u.data(), rows, keep) = svd.matrixU().leftCols(keep);
  res.vt = Tensor({keep, cols});
  MapRowMat(res.vt.data(), keep, cols) = svd.matrixV().leftCols(keep).transpose();
  return res;
}

std::pair<Tensor, Tensor> qr_factor(const Tensor& m) {
  if (m.rank() != 2) throw std::invalid_argument("qr_factor: rank-2 input required");
  const long rows = m.dim(0), cols = m.dim(1), k = std::min(rows, cols);
  ConstMapRowMat mm(m.data(), rows, cols);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(mm);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, k);
  Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();

  Tensor tq({rows, k}), tr({k, cols});
  MapRowMat(tq.data(), rows, k) = q;
  MapRowMat(tr.data(), k, cols) = r;
  return {std::move(tq), std::move(tr)};
}

std::pair<Tensor, Tensor> lq_factor(const Tensor& m) {
  if (m.rank() != 2) throw std::invalid_argument("lq_factor: rank-2 input required");
  const long rows = m.dim(0), cols = m.dim(1), k = std::min(rows, cols);
  ConstMapRowMat mm(m.data(), rows, cols);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(mm.transpose());
  Eigen::MatrixXd q = (qr.householderQ() * Eigen::MatrixXd::Identity(cols, k)).transpose();
  Eigen::MatrixXd l =
      Eigen::MatrixXd(qr.matrixQR().topRows(k).triangularView<Eigen::Upper>()).transpose();

  Tensor tl({rows, k}), tq({k, cols});
  MapRowMat(tl.data(), rows, k) = l;
  MapRowMat(tq.data(), k, cols) = q;
  return {std::move(tl), std::move(tq)};
}

Tensor kron(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw std::invalid_argument("kron: rank-2 inputs required");
  const long ar = a.dim(0), ac = a.dim(1), br = b.dim(0), bc = b.dim(1);
  Tensor out({ar * br, ac * bc});
  for (long i = 0; i < ar; ++i)
    for (long j = 0; j < ac; ++j)
      for (long k = 0; k < br; ++k)
        for (long l = 0; l < bc; ++l)
          out(i * br + k, j * bc + l) = a(i, j) * b(k, l);
  return out;
}

}  // namespace choimps
