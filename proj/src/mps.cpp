#include "choimps/mps.hpp"

#include <cmath>
#include <stdexcept>

namespace choimps {

namespace {

// Composes per-site operators when a site appears more than once in an
// operator list: result = later . earlier.
Tensor compose_ops(const Tensor& later, const Tensor& earlier) {
  return contract(later, earlier, {{1, 0}});
}

void check_rank3_chain(const std::vector<Tensor>& sites) {
  if (sites.empty()) throw std::invalid_argument("MpsState: empty chain");
  for (size_t i = 0; i < sites.size(); ++i) {
    const Tensor& t = sites[i];
    if (t.rank() != 3) throw std::invalid_argument("MpsState: site tensors must be rank 3");
    if (t.dim(1) != 2) throw std::invalid_argument("MpsState: physical dimension must be 2");
    if (i + 1 < sites.size() && t.dim(2) != sites[i + 1].dim(0))
      throw std::invalid_argument("MpsState: bond dimension mismatch between sites");
  }
  if (sites.front().dim(0) != 1 || sites.back().dim(2) != 1)
    throw std::invalid_argument("MpsState: outer bonds must have dimension 1");
}

}  // namespace

Mpo Mpo::identity(long n_sites) {
  Mpo op;
  op.sites.reserve(static_cast<size_t>(n_sites));
  for (long i = 0; i < n_sites; ++i) {
    Tensor w({1, 2, 2, 1});
    w(0, 0, 0, 0) = 1.0;
    w(0, 1, 1, 0) = 1.0;
    op.sites.push_back(std::move(w));
  }
  return op;
}

bool Mpo::trivial_at(long site) const {
  const Tensor& w = sites[static_cast<size_t>(site)];
  if (w.dim(0) != 1 || w.dim(3) != 1) return false;
  return w(0, 0, 0, 0) == 1.0 && w(0, 1, 1, 0) == 1.0 && w(0, 0, 1, 0) == 0.0 &&
         w(0, 1, 0, 0) == 0.0;
}

std::optional<std::pair<long, long>> Mpo::support() const {
  long first = -1, last = -1;
  for (long i = 0; i < n_sites(); ++i)
    if (!trivial_at(i)) {
      if (first < 0) first = i;
      last = i;
    }
  if (first < 0) return std::nullopt;
  return std::make_pair(first, last);
}

MpsState::MpsState(std::vector<Tensor> site_tensors, double log_norm)
    : sites_(std::move(site_tensors)), log_norm_(log_norm) {
  check_rank3_chain(sites_);
}

MpsState MpsState::from_product(const std::vector<std::array<double, 2>>& locals) {
  if (locals.empty()) throw std::invalid_argument("from_product: empty chain");
  std::vector<Tensor> sites;
  double log_norm = 0.0;
  for (const auto& v : locals) {
    const double n = std::hypot(v[0], v[1]);
    if (n == 0.0) throw std::invalid_argument("from_product: zero local vector");
    Tensor t({1, 2, 1});
    t(0, 0, 0) = v[0] / n;
    t(0, 1, 0) = v[1] / n;
    sites.push_back(std::move(t));
    log_norm += std::log(n);
  }
  MpsState s(std::move(sites), log_norm);
  s.center_ = 0;
  return s;
}

long MpsState::bond_dim(long bond) const {
  if (bond < 0 || bond > n_sites()) throw std::invalid_argument("bond_dim: out of range");
  if (bond == 0 || bond == n_sites()) return 1;
  return sites_[static_cast<size_t>(bond)].dim(0);
}

long MpsState::max_bond_dim() const {
  long m = 1;
  for (const auto& t : sites_) m = std::max(m, t.dim(0));
  return m;
}

std::vector<long> MpsState::bond_profile() const {
  std::vector<long> p;
  for (long b = 1; b < n_sites(); ++b) p.push_back(bond_dim(b));
  return p;
}

void MpsState::canonicalize_to(long center) {
  const long n = n_sites();
  if (center < 0 || center >= n) throw std::invalid_argument("canonicalize_to: out of range");

  auto absorb_and_normalize = [&](Tensor t, long into) {
    const double nr = t.norm();
    if (nr == 0.0) throw std::runtime_error("canonicalize_to: zero state");
    t.scale(1.0 / nr);
    log_norm_ += std::log(nr);
    sites_[static_cast<size_t>(into)] = std::move(t);
  };

  // QR step moving a left-isometry out of site i (towards the right).
  auto shift_right = [&](long i) {
    const Tensor& t = sites_[static_cast<size_t>(i)];
    const long dl = t.dim(0), dr = t.dim(2);
    auto [q, r] = qr_factor(t.reshaped({dl * 2, dr}));
    sites_[static_cast<size_t>(i)] = q.reshaped({dl, 2, q.dim(1)});
    absorb_and_normalize(contract(r, sites_[static_cast<size_t>(i + 1)], {{1, 0}}), i + 1);
  };

  // LQ step moving a right-isometry out of site i (towards the left).
  auto shift_left = [&](long i) {
    const Tensor& t = sites_[static_cast<size_t>(i)];
    const long dl = t.dim(0), dr = t.dim(2);
    auto [l, q] = lq_factor(t.reshaped({dl, 2 * dr}));
    sites_[static_cast<size_t>(i)] = q.reshaped({q.dim(0), 2, dr});
    absorb_and_normalize(contract(sites_[static_cast<size_t>(i - 1)], l, {{2, 0}}), i - 1);
  };

  if (center_ < 0) {
    for (long i = 0; i < center; ++i) shift_right(i);
    for (long i = n - 1; i > center; --i) shift_left(i);
  } else if (center_ < center) {
    for (long i = center_; i < center; ++i) shift_right(i);
  } else {
    for (long i = center_; i > center; --i) shift_left(i);
  }

  // The invariant is a unit-norm center tensor; enforce it directly so a
  // fresh (never-canonicalized) chain also lands on it.
  Tensor& c = sites_[static_cast<size_t>(center)];
  const double nr = c.norm();
  if (nr == 0.0) throw std::runtime_error("canonicalize_to: zero state");
  if (nr != 1.0) {
    c.scale(1.0 / nr);
    log_norm_ += std::log(nr);
  }
  center_ = center;
}

double MpsState::apply_two_site_gate(long site, const Tensor& gate,
                                     const TruncationPolicy& pol) {
  const long n = n_sites();
  if (site < 0 || site + 1 >= n) throw std::invalid_argument("apply_two_site_gate: bad site");
  Tensor g4 = gate;
  if (g4.rank() == 2) {
    if (g4.dim(0) != 4 || g4.dim(1) != 4)
      throw std::invalid_argument("apply_two_site_gate: gate must be 4x4");
    g4 = g4.reshaped({2, 2, 2, 2});
  } else if (g4.rank() != 4) {
    throw std::invalid_argument("apply_two_site_gate: gate must be rank 2 or 4");
  }

  canonicalize_to(site);
  const Tensor& a = sites_[static_cast<size_t>(site)];
  const Tensor& b = sites_[static_cast<size_t>(site + 1)];
  const long dl = a.dim(0), dr = b.dim(2);

  Tensor theta = contract(a, b, {{2, 0}});                       // (dl, i1, i2, dr)
  Tensor out = contract(g4, theta, {{2, 1}, {3, 2}});            // (o1, o2, dl, dr)
  Tensor mat = transpose(out, {2, 0, 1, 3}).reshaped({dl * 2, 2 * dr});

  SvdResult svd = svd_truncate(mat, pol.max_bond, pol.sv_cutoff);
  double kept2 = 0.0;
  for (double s : svd.s) kept2 += s * s;
  const double total2 = kept2 + svd.discarded_weight;
  if (kept2 == 0.0) throw std::runtime_error("apply_two_site_gate: gate annihilated the state");

  const double nrm = std::sqrt(kept2);
  sites_[static_cast<size_t>(site)] = svd.u.reshaped({dl, 2, svd.rank});
  Tensor sv({svd.rank, svd.vt.dim(1)});
  for (long r = 0; r < svd.rank; ++r)
    for (long c = 0; c < svd.vt.dim(1); ++c) sv(r, c) = svd.s[static_cast<size_t>(r)] / nrm * svd.vt(r, c);
  sites_[static_cast<size_t>(site + 1)] = sv.reshaped({svd.rank, 2, dr});
  log_norm_ += std::log(nrm);
  center_ = site + 1;
  return total2 > 0.0 ? svd.discarded_weight / total2 : 0.0;
}

double MpsState::apply_mpo(const Mpo& op, const TruncationPolicy& pol) {
  const long n = n_sites();
  if (op.n_sites() != n) throw std::invalid_argument("apply_mpo: length mismatch");
  const auto window = op.support();
  if (!window) return 0.0;
  const auto [w0, w1] = *window;

  canonicalize_to(w0);

  // Merge operator and state within the window: outer bonds of the window are
  // 1 on the operator side, so nothing outside changes.
  for (long i = w0; i <= w1; ++i) {
    const Tensor& m = sites_[static_cast<size_t>(i)];
    const Tensor& w = op.sites[static_cast<size_t>(i)];
    const long dl = m.dim(0), dr = m.dim(2), wl = w.dim(0), wr = w.dim(3);
    // (dl, dr, wl, out, wr) -> (dl, wl, out, dr, wr)
    Tensor merged = transpose(contract(m, w, {{1, 2}}), {0, 2, 3, 1, 4});
    sites_[static_cast<size_t>(i)] = merged.reshaped({dl * wl, 2, dr * wr});
  }
  center_ = -1;

  if (w0 == w1) {
    // Single-site operator: bonds are unchanged, just restore the center.
    center_ = w0;
    Tensor& c = sites_[static_cast<size_t>(w0)];
    const double nr = c.norm();
    if (nr == 0.0) throw std::runtime_error("apply_mpo: operator annihilated the state");
    c.scale(1.0 / nr);
    log_norm_ += std::log(nr);
    return 0.0;
  }

  // Right-to-left orthogonalization of the merged window, so the subsequent
  // truncations see a proper canonical environment.
  for (long i = w1; i > w0; --i) {
    const Tensor& t = sites_[static_cast<size_t>(i)];
    const long dl = t.dim(0), dr = t.dim(2);
    auto [l, q] = lq_factor(t.reshaped({dl, 2 * dr}));
    sites_[static_cast<size_t>(i)] = q.reshaped({q.dim(0), 2, dr});
    Tensor prev = contract(sites_[static_cast<size_t>(i - 1)], l, {{2, 0}});
    const double nr = prev.norm();
    if (nr == 0.0) throw std::runtime_error("apply_mpo: operator annihilated the state");
    prev.scale(1.0 / nr);
    log_norm_ += std::log(nr);
    sites_[static_cast<size_t>(i - 1)] = std::move(prev);
  }

  // Left-to-right truncation sweep over the window bonds.
  double discarded = 0.0;
  for (long i = w0; i < w1; ++i) {
    const Tensor& t = sites_[static_cast<size_t>(i)];
    const long dl = t.dim(0), dr = t.dim(2);
    SvdResult svd = svd_truncate(t.reshaped({dl * 2, dr}), pol.max_bond, pol.sv_cutoff);
    double kept2 = 0.0;
    for (double s : svd.s) kept2 += s * s;
    const double total2 = kept2 + svd.discarded_weight;
    if (total2 > 0.0) discarded += svd.discarded_weight / total2;
    if (kept2 == 0.0) throw std::runtime_error("apply_mpo: operator annihilated the state");

    sites_[static_cast<size_t>(i)] = svd.u.reshaped({dl, 2, svd.rank});
    Tensor sv({svd.rank, dr});
    for (long r = 0; r < svd.rank; ++r)
      for (long c = 0; c < dr; ++c) sv(r, c) = svd.s[static_cast<size_t>(r)] * svd.vt(r, c);
    Tensor next = contract(sv, sites_[static_cast<size_t>(i + 1)], {{1, 0}});
    const double nr = next.norm();
    next.scale(1.0 / nr);
    log_norm_ += std::log(nr);
    sites_[static_cast<size_t>(i + 1)] = std::move(next);
  }
  center_ = w1;
  return discarded;
}

double MpsState::compress(const TruncationPolicy& pol) {
  canonicalize_to(0);
  const long n = n_sites();
  double discarded = 0.0;
  for (long i = 0; i + 1 < n; ++i) {
    const Tensor& t = sites_[static_cast<size_t>(i)];
    const long dl = t.dim(0), dr = t.dim(2);
    SvdResult svd = svd_truncate(t.reshaped({dl * 2, dr}), pol.max_bond, pol.sv_cutoff);
    double kept2 = 0.0;
    for (double s : svd.s) kept2 += s * s;
    const double total2 = kept2 + svd.discarded_weight;
    if (total2 > 0.0) discarded += svd.discarded_weight / total2;
    if (kept2 == 0.0) throw std::runtime_error("compress: state vanished");

    sites_[static_cast<size_t>(i)] = svd.u.reshaped({dl, 2, svd.rank});
    Tensor sv({svd.rank, dr});
    for (long r = 0; r < svd.rank; ++r)
      for (long c = 0; c < dr; ++c) sv(r, c) = svd.s[static_cast<size_t>(r)] * svd.vt(r, c);
    Tensor next = contract(sv, sites_[static_cast<size_t>(i + 1)], {{1, 0}});
    const double nr = next.norm();
    next.scale(1.0 / nr);
    log_norm_ += std::log(nr);
    sites_[static_cast<size_t>(i + 1)] = std::move(next);
  }
  center_ = n - 1;
  return discarded;
}

LogScalar inner(const MpsState& a, const MpsState& b) {
  if (a.n_sites() != b.n_sites()) throw std::invalid_argument("inner: length mismatch");
  Tensor env({1, 1});
  env(0, 0) = 1.0;
  double log_acc = a.log_norm() + b.log_norm();
  for (long i = 0; i < a.n_sites(); ++i) {
    Tensor t = contract(env, a.site(i), {{0, 0}});      // (l_b, d, r_a)
    env = contract(t, b.site(i), {{0, 0}, {1, 1}});     // (r_a, r_b)
    const double m = env.max_abs();
    if (m == 0.0) return {0.0, 0};
    env.scale(1.0 / m);
    log_acc += std::log(m);
  }
  const double v = env(0, 0);
  if (v == 0.0) return {0.0, 0};
  return {log_acc + std::log(std::abs(v)), v > 0.0 ? 1 : -1};
}

LogScalar expect_product_op(const MpsState& a,
                            const std::vector<std::pair<long, Tensor>>& site_ops,
                            const MpsState& b) {
  if (a.n_sites() != b.n_sites()) throw std::invalid_argument("expect_product_op: length mismatch");
  std::vector<Tensor> ops(static_cast<size_t>(a.n_sites()));
  std::vector<bool> has(static_cast<size_t>(a.n_sites()), false);
  for (const auto& [site, op] : site_ops) {
    if (site < 0 || site >= a.n_sites())
      throw std::invalid_argument("expect_product_op: site out of range");
    if (op.rank() != 2 || op.dim(0) != 2 || op.dim(1) != 2)
      throw std::invalid_argument("expect_product_op: operators must be 2x2");
    auto u = static_cast<size_t>(site);
    ops[u] = has[u] ? compose_ops(op, ops[u]) : op;
    has[u] = true;
  }

  Tensor env({1, 1});
  env(0, 0) = 1.0;
  double log_acc = a.log_norm() + b.log_norm();
  for (long i = 0; i < a.n_sites(); ++i) {
    Tensor ket = b.site(i);
    if (has[static_cast<size_t>(i)])
      ket = transpose(contract(ops[static_cast<size_t>(i)], ket, {{1, 1}}), {1, 0, 2});
    Tensor t = contract(env, a.site(i), {{0, 0}});
    env = contract(t, ket, {{0, 0}, {1, 1}});
    const double m = env.max_abs();
    if (m == 0.0) return {0.0, 0};
    env.scale(1.0 / m);
    log_acc += std::log(m);
  }
  const double v = env(0, 0);
  if (v == 0.0) return {0.0, 0};
  return {log_acc + std::log(std::abs(v)), v > 0.0 ? 1 : -1};
}

LogScalar expect_mpo(const MpsState& a, const Mpo& op, const MpsState& b) {
  if (a.n_sites() != b.n_sites() || op.n_sites() != a.n_sites())
    throw std::invalid_argument("expect_mpo: length mismatch");
  Tensor env({1, 1, 1});
  env(0, 0, 0) = 1.0;
  double log_acc = a.log_norm() + b.log_norm();
  for (long i = 0; i < a.n_sites(); ++i) {
    Tensor t1 = contract(env, a.site(i), {{0, 0}});                  // (w, l_b, d_a, r_a)
    Tensor t2 = contract(t1, op.sites[static_cast<size_t>(i)], {{0, 0}, {2, 1}});  // (l_b, r_a, in, wr)
    env = contract(t2, b.site(i), {{0, 0}, {2, 1}});                 // (r_a, wr, r_b)
    const double m = env.max_abs();
    if (m == 0.0) return {0.0, 0};
    env.scale(1.0 / m);
    log_acc += std::log(m);
  }
  const double v = env(0, 0, 0);
  if (v == 0.0) return {0.0, 0};
  return {log_acc + std::log(std::abs(v)), v > 0.0 ? 1 : -1};
}

double spectrum_entropy(const std::vector<double>& schmidt_values) {
  double s = 0.0;
  for (double v : schmidt_values) {
    const double p = v * v;
    if (p > 1e-16) s -= p * std::log(p);
  }
  return s;
}

double prefix_entropy(const MpsState& state, long n_sites) {
  if (n_sites < 1 || n_sites >= state.n_sites())
    throw std::invalid_argument("prefix_entropy: cut out of range");
  MpsState copy = state;
  copy.canonicalize_to(n_sites);
  const Tensor& c = copy.site(n_sites);
  SvdResult svd = svd_truncate(c.reshaped({c.dim(0), 2 * c.dim(2)}),
                               std::max<long>(1, c.dim(0)), 0.0);
  return spectrum_entropy(svd.s);
}

std::vector<std::vector<double>> bond_spectra(const MpsState& state) {
  MpsState copy = state;
  copy.canonicalize_to(0);
  const long n = copy.n_sites();
  std::vector<std::vector<double>> spectra;
  spectra.reserve(static_cast<size_t>(n - 1));
  for (long i = 0; i + 1 < n; ++i) {
    const Tensor& t = copy.site(i);
    const long dl = t.dim(0), dr = t.dim(2);
    SvdResult svd = svd_truncate(t.reshaped({dl * 2, dr}), std::max(dl * 2, dr), 0.0);
    double nrm2 = 0.0;
    for (double s : svd.s) nrm2 += s * s;
    const double nrm = std::sqrt(nrm2);
    std::vector<double> spec = svd.s;
    for (double& s : spec) s /= nrm;
    spectra.push_back(std::move(spec));

    copy.site(i) = svd.u.reshaped({dl, 2, svd.rank});
    Tensor sv({svd.rank, dr});
    for (long r = 0; r < svd.rank; ++r)
      for (long c = 0; c < dr; ++c) sv(r, c) = svd.s[static_cast<size_t>(r)] / nrm * svd.vt(r, c);
    copy.site(i + 1) = contract(sv, copy.site(i + 1), {{1, 0}});
  }
  return spectra;
}

}  // namespace choimps
