#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "choimps/tensor.hpp"

namespace choimps {

// Bond truncation rule shared by gate application, operator application and
// standalone recompression.  sv_cutoff is relative to the largest singular
// value at each cut.
struct TruncationPolicy {
  long max_bond = 200;
  double sv_cutoff = 1e-6;
};

// Scalar carried as (log magnitude, sign).  sign == 0 encodes an exact zero,
// in which case log_mag is meaningless.  Overlaps of long chains underflow
// double precision well before the physics becomes uninteresting, so every
// contraction in this codebase that closes a network reports its value in
// this form.
struct LogScalar {
  double log_mag = 0.0;
  int sign = 0;

  double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_mag); }
  static LogScalar from_value(double v) {
    if (v == 0.0) return {0.0, 0};
    return {std::log(std::abs(v)), v > 0.0 ? 1 : -1};
  }
};

// Matrix product operator: one rank-4 tensor per site with index order
// (left bond, physical out, physical in, right bond).  Outer bonds have
// dimension 1.
struct Mpo {
  std::vector<Tensor> sites;

  long n_sites() const { return static_cast<long>(sites.size()); }
  static Mpo identity(long n_sites);
  // True when the site tensor is exactly the 1x1-bond identity, so operator
  // application may skip it.
  bool trivial_at(long site) const;
  // [first, last] range of non-trivial sites, or nullopt for the identity.
  std::optional<std::pair<long, long>> support() const;
};

// Matrix product state over n two-level sites.  Site tensors are rank-3 with
// index order (left bond, physical, right bond); outer bonds have dimension 1.
//
// The state's overall scale is tracked separately: when a canonical center
// exists, every tensor away from the center is an isometry, the center has
// unit norm, and the physical amplitude vector equals exp(log_norm) times the
// network contraction.  Filtering multiplies norms down exponentially with
// system size, so the scale must live in log form.
class MpsState {
 public:
  MpsState() = default;
  explicit MpsState(std::vector<Tensor> site_tensors, double log_norm = 0.0);

  // Product state from one 2-component vector per site.  Throws on a zero
  // local vector.
  static MpsState from_product(const std::vector<std::array<double, 2>>& locals);

  long n_sites() const { return static_cast<long>(sites_.size()); }
  const Tensor& site(long i) const { return sites_[static_cast<size_t>(i)]; }
  Tensor& site(long i) { return sites_[static_cast<size_t>(i)]; }
  long center() const { return center_; }
  double log_norm() const { return log_norm_; }
  void add_log_norm(double delta) { log_norm_ += delta; }
  void set_log_norm(double v) { log_norm_ = v; }

  long bond_dim(long bond) const;  // bond b sits between sites b-1 and b
  long max_bond_dim() const;
  std::vector<long> bond_profile() const;

  // Moves the canonical center to `center` by QR sweeps (no truncation).
  // Tensors left of the center become left-isometries, right of it
  // right-isometries; the center tensor is normalized into log_norm.
  void canonicalize_to(long center);
  void invalidate_center() { center_ = -1; }
  // Restores a known canonical center without touching tensors (used when
  // deserializing a state that was saved in canonical form).
  void assume_center(long center) { center_ = center; }

  // Applies a two-site gate on (site, site+1).  The gate is a rank-2 tensor of
  // shape (4, 4) acting as G[(out1 out2), (in1 in2)], or equivalently rank-4
  // (out1, out2, in1, in2).  Returns the discarded weight of the truncation,
  // relative to the squared norm of the post-gate two-site block.
  double apply_two_site_gate(long site, const Tensor& gate, const TruncationPolicy& pol);

  // Applies an MPO.  Only the operator's non-trivial support window is merged
  // and recompressed, so bond dimensions outside the window are untouched.
  // Returns the accumulated relative discarded weight of the recompression.
  double apply_mpo(const Mpo& op, const TruncationPolicy& pol);

  // Full-chain recompression at the given policy; returns discarded weight.
  double compress(const TruncationPolicy& pol);

  // Normalizes so the physical state has exp(log_norm) == 1 contribution,
  // i.e. resets log_norm to zero without changing tensors.
  void clear_log_norm() { log_norm_ = 0.0; }

 private:
  std::vector<Tensor> sites_;
  long center_ = -1;  // -1: no canonical form established
  double log_norm_ = 0.0;
};

// <a|b> including both states' log_norm scales, as a LogScalar.
LogScalar inner(const MpsState& a, const MpsState& b);

// <a| (ops applied at given sites) |b> where each op is a 2x2 tensor.  Sites
// without an entry carry the identity.  Includes log_norm scales.
LogScalar expect_product_op(const MpsState& a,
                            const std::vector<std::pair<long, Tensor>>& site_ops,
                            const MpsState& b);

// <a| op |b> for an MPO, including log_norm scales.
LogScalar expect_mpo(const MpsState& a, const Mpo& op, const MpsState& b);

// Von Neumann entropy of the reduced state of the first n_sites sites,
// computed from the Schmidt spectrum across that cut.  Uses natural log.
double prefix_entropy(const MpsState& state, long n_sites);

// Schmidt spectra across every internal cut: entry b-1 holds the descending
// normalized singular values across bond b (b = 1 .. n_sites-1).
std::vector<std::vector<double>> bond_spectra(const MpsState& state);

// Entropy of a normalized Schmidt spectrum (squared values sum to one).
double spectrum_entropy(const std::vector<double>& schmidt_values);

}  // namespace choimps
