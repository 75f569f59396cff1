#include "choimps/lattice.hpp"

#include <cmath>
#include <stdexcept>

namespace choimps {

namespace {

// In-place recompression of a rank-4 operator chain at near-machine
// precision.  Right-to-left LQ orthogonalization, then a left-to-right SVD
// sweep with a relative cutoff; the overall scale ends up in the last tensor.
void compress_mpo_chain(std::vector<Tensor>& sites, double rel_cutoff) {
  const long n = static_cast<long>(sites.size());
  std::vector<Tensor> flat;
  flat.reserve(static_cast<size_t>(n));
  for (const auto& w : sites) flat.push_back(w.reshaped({w.dim(0), 4, w.dim(3)}));

  for (long i = n - 1; i > 0; --i) {
    const Tensor& t = flat[static_cast<size_t>(i)];
    auto [l, q] = lq_factor(t.reshaped({t.dim(0), 4 * t.dim(2)}));
    flat[static_cast<size_t>(i)] = q.reshaped({q.dim(0), 4, t.dim(2)});
    flat[static_cast<size_t>(i - 1)] =
        contract(flat[static_cast<size_t>(i - 1)], l, {{2, 0}});
  }
  for (long i = 0; i + 1 < n; ++i) {
    const Tensor& t = flat[static_cast<size_t>(i)];
    const long dl = t.dim(0), dr = t.dim(2);
    SvdResult svd = svd_truncate(t.reshaped({dl * 4, dr}), dl * 4, rel_cutoff);
    flat[static_cast<size_t>(i)] = svd.u.reshaped({dl, 4, svd.rank});
    Tensor sv({svd.rank, dr});
    for (long r = 0; r < svd.rank; ++r)
      for (long c = 0; c < dr; ++c) sv(r, c) = svd.s[static_cast<size_t>(r)] * svd.vt(r, c);
    flat[static_cast<size_t>(i + 1)] = contract(sv, flat[static_cast<size_t>(i + 1)], {{1, 0}});
  }
  for (long i = 0; i < n; ++i) {
    const Tensor& t = flat[static_cast<size_t>(i)];
    sites[static_cast<size_t>(i)] = t.reshaped({t.dim(0), 2, 2, t.dim(2)});
  }
}

void check_op_2x2(const Tensor& op) {
  if (op.rank() != 2 || op.dim(0) != 2 || op.dim(1) != 2)
    throw std::invalid_argument("site operators must be 2x2");
}

}  // namespace

void ModelParams::validate() const {
  if (!(J >= 0.0) || !std::isfinite(J)) throw std::invalid_argument("ModelParams: bad J");
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("ModelParams: h must be > 0");
  if (L < 2 || L % 2 != 0) throw std::invalid_argument("ModelParams: L must be even and >= 2");
}

void QatParams::validate() const {
  ModelParams base{J, h, L, true};
  base.validate();
  if (!std::isfinite(lambda_zz) || !std::isfinite(lambda_x))
    throw std::invalid_argument("QatParams: bad lambda");
}

double tau_of_p(double p) {
  if (!(p >= 0.0 && p <= 0.5)) throw std::invalid_argument("tau_of_p: p must be in [0, 1/2]");
  // (1-p) I + p K = sqrt(1-2p) exp(tau K) for any K with K^2 = 1:
  // matching the K and identity components gives tanh(tau) = p / (1-p).
  return std::atanh(p / (1.0 - p));  // p = 1/2 -> +inf (saturated projector)
}

double map_px(double p_zz, double J) {
  if (!(J > 0.0)) throw std::invalid_argument("map_px: J must be > 0");
  if (!(p_zz >= 0.0 && p_zz <= 0.5))
    throw std::invalid_argument("map_px: p_zz must be in [0, 1/2]");
  // Equal filtering angles per unit coupling: tau_x = tau_zz / J, i.e.
  // -(1/2) log(1-2 p_x) = -(1/(2J)) log(1-2 p_zz).
  return 0.5 - 0.5 * std::pow(1.0 - 2.0 * p_zz, 1.0 / J);
}

ChannelSpec ChannelSpec::general(double p_zz, double p_x, long L) {
  if (L < 2) throw std::invalid_argument("ChannelSpec: L must be >= 2");
  ChannelSpec c;
  c.p_zz = p_zz;
  c.p_x = p_x;
  c.tau_zz = tau_of_p(p_zz);
  c.tau_x = tau_of_p(p_x);
  c.L = L;
  // Each of the L ZZ channels and L X channels contributes sqrt(1-2p); a
  // saturated channel is realized as a projector with no prefactor.
  double lp = 0.0;
  if (!c.zz_saturated()) lp += 0.5 * L * std::log(1.0 - 2.0 * p_zz);
  if (!c.x_saturated()) lp += 0.5 * L * std::log(1.0 - 2.0 * p_x);
  c.log_prefactor = lp;
  return c;
}

ChannelSpec ChannelSpec::coupled(double p_zz, double J, long L) {
  return general(p_zz, map_px(p_zz, J), L);
}

ChannelSpec ChannelSpec::zz_only(double p_zz, long L) { return general(p_zz, 0.0, L); }

Tensor pauli_x() {
  Tensor x({2, 2});
  x(0, 1) = 1.0;
  x(1, 0) = 1.0;
  return x;
}

Tensor pauli_z() {
  Tensor z({2, 2});
  z(0, 0) = 1.0;
  z(1, 1) = -1.0;
  return z;
}

Tensor pauli_id() { return Tensor::identity(2); }

Mpo pauli_string_sum_mpo(long n_sites, const std::vector<PauliTerm>& terms) {
  if (n_sites < 1) throw std::invalid_argument("pauli_string_sum_mpo: empty chain");
  if (terms.empty()) throw std::invalid_argument("pauli_string_sum_mpo: no terms");
  const long k = static_cast<long>(terms.size());
  for (const auto& t : terms)
    for (const auto& [site, op] : t.ops) {
      if (site < 0 || site >= n_sites)
        throw std::invalid_argument("pauli_string_sum_mpo: site out of range");
      check_op_2x2(op);
    }

  auto term_op = [&](long t, long site) -> Tensor {
    const auto& ops = terms[static_cast<size_t>(t)].ops;
    auto it = ops.find(site);
    return it == ops.end() ? pauli_id() : it->second;
  };

  Mpo op;
  if (n_sites == 1) {
    Tensor w({1, 2, 2, 1});
    for (long t = 0; t < k; ++t) {
      Tensor o = term_op(t, 0);
      for (long s = 0; s < 2; ++s)
        for (long s2 = 0; s2 < 2; ++s2)
          w(0, s, s2, 0) += terms[static_cast<size_t>(t)].coeff * o(s, s2);
    }
    op.sites.push_back(std::move(w));
    return op;
  }

  // Direct sum over terms: one bond channel per term, coefficient folded
  // into the first site.
  for (long i = 0; i < n_sites; ++i) {
    const long wl = (i == 0) ? 1 : k, wr = (i == n_sites - 1) ? 1 : k;
    Tensor w({wl, 2, 2, wr});
    for (long t = 0; t < k; ++t) {
      const Tensor o = term_op(t, i);
      const double c = (i == 0) ? terms[static_cast<size_t>(t)].coeff : 1.0;
      const long l = (i == 0) ? 0 : t, r = (i == n_sites - 1) ? 0 : t;
      for (long s = 0; s < 2; ++s)
        for (long s2 = 0; s2 < 2; ++s2) w(l, s, s2, r) += c * o(s, s2);
    }
    op.sites.push_back(std::move(w));
  }
  compress_mpo_chain(op.sites, 1e-13);
  return op;
}

Mpo two_term_mpo(long n_sites, double a, double b, const std::map<long, Tensor>& ops) {
  if (n_sites < 1) throw std::invalid_argument("two_term_mpo: empty chain");
  if (ops.empty()) throw std::invalid_argument("two_term_mpo: no support");
  for (const auto& [site, op] : ops) {
    if (site < 0 || site >= n_sites) throw std::invalid_argument("two_term_mpo: site out of range");
    check_op_2x2(op);
  }
  const long first = ops.begin()->first, last = ops.rbegin()->first;

  Mpo op = Mpo::identity(n_sites);
  auto op_or_id = [&](long site) -> Tensor {
    auto it = ops.find(site);
    return it == ops.end() ? pauli_id() : it->second;
  };

  if (first == last) {
    Tensor w({1, 2, 2, 1});
    const Tensor o = ops.begin()->second;
    for (long s = 0; s < 2; ++s)
      for (long s2 = 0; s2 < 2; ++s2) w(0, s, s2, 0) = a * (s == s2 ? 1.0 : 0.0) + b * o(s, s2);
    op.sites[static_cast<size_t>(first)] = std::move(w);
    return op;
  }

  for (long i = first; i <= last; ++i) {
    const long wl = (i == first) ? 1 : 2, wr = (i == last) ? 1 : 2;
    Tensor w({wl, 2, 2, wr});
    const Tensor o = op_or_id(i);
    for (long s = 0; s < 2; ++s) {
      if (i == first) {
        w(0, s, s, 1) = 0.0;  // layout: channel 0 = identity branch, 1 = product branch
        w(0, s, s, 0) = a;
        for (long s2 = 0; s2 < 2; ++s2) w(0, s, s2, wr - 1) += (wr == 2 ? b : 0.0) * o(s, s2);
      } else if (i == last) {
        w(0, s, s, 0) += 1.0 * (wl == 2 ? 1.0 : 0.0);
        for (long s2 = 0; s2 < 2; ++s2) w(wl - 1, s, s2, 0) += o(s, s2);
      } else {
        w(0, s, s, 0) = 1.0;
        for (long s2 = 0; s2 < 2; ++s2) w(1, s, s2, 1) += o(s, s2);
      }
    }
    op.sites[static_cast<size_t>(i)] = std::move(w);
  }
  return op;
}

namespace {

void append_chain_terms(std::vector<PauliTerm>& terms, double J, double h, long L,
                        bool periodic, long offset, long stride, long n_sites) {
  // One transverse-field Ising chain living on sites offset, offset+stride, ...
  const Tensor z = pauli_z(), x = pauli_x();
  auto site_of = [&](long j) { return (offset + stride * j) % n_sites; };
  for (long j = 0; j < L; ++j) {
    if (j + 1 < L || periodic) {
      PauliTerm t;
      t.coeff = -J;
      t.ops[site_of(j)] = z;
      t.ops[site_of((j + 1) % L)] = z;
      terms.push_back(std::move(t));
    }
    PauliTerm t;
    t.coeff = -h;
    t.ops[site_of(j)] = x;
    terms.push_back(std::move(t));
  }
}

}  // namespace

Mpo build_doubled_tfim_mpo(const ModelParams& params) {
  params.validate();
  const long n = 2 * params.L;
  std::vector<PauliTerm> terms;
  append_chain_terms(terms, params.J, params.h, params.L, params.periodic, 0, 2, n);
  append_chain_terms(terms, params.J, params.h, params.L, params.periodic, 1, 2, n);
  return pauli_string_sum_mpo(n, terms);
}

Mpo build_qat_mpo(const QatParams& params) {
  params.validate();
  const long L = params.L, n = 2 * L;
  std::vector<PauliTerm> terms;
  append_chain_terms(terms, params.J, params.h, L, true, 0, 2, n);
  append_chain_terms(terms, params.J, params.h, L, true, 1, 2, n);
  const Tensor z = pauli_z(), x = pauli_x();
  for (long j = 0; j < L; ++j) {
    PauliTerm plaq;
    plaq.coeff = -params.J * params.lambda_zz;
    for (long s = 0; s < 4; ++s) plaq.ops[(2 * j + s) % n] = z;
    terms.push_back(std::move(plaq));

    PauliTerm rung;
    rung.coeff = -params.h * params.lambda_x;
    rung.ops[2 * j] = x;
    rung.ops[2 * j + 1] = x;
    terms.push_back(std::move(rung));
  }
  return pauli_string_sum_mpo(n, terms);
}

Mpo build_tfim_chain_mpo(double J, double h, long L, bool periodic) {
  if (L < 2) throw std::invalid_argument("build_tfim_chain_mpo: L must be >= 2");
  std::vector<PauliTerm> terms;
  append_chain_terms(terms, J, h, L, periodic, 0, 1, L);
  return pauli_string_sum_mpo(L, terms);
}

Tensor build_x_rung_gate(double tau) {
  Tensor g({4, 4});
  const double c = std::isinf(tau) ? 0.5 : std::cosh(tau);
  const double s = std::isinf(tau) ? 0.5 : std::sinh(tau);
  for (long i = 0; i < 4; ++i) {
    g(i, i) = c;
    g(i, 3 - i) += s;  // X(x)X is the anti-diagonal in the 2-site basis
  }
  return g;
}

Mpo build_zz_plaquette_mpo(double tau, long rung, long L) {
  if (L < 2) throw std::invalid_argument("build_zz_plaquette_mpo: L must be >= 2");
  if (rung < 0 || rung >= L) throw std::invalid_argument("build_zz_plaquette_mpo: bad rung");
  const long n = 2 * L;
  const double c = std::isinf(tau) ? 0.5 : std::cosh(tau);
  const double s = std::isinf(tau) ? 0.5 : std::sinh(tau);
  std::map<long, Tensor> ops;
  const Tensor z = pauli_z();
  for (long k = 0; k < 4; ++k) ops[(2 * rung + k) % n] = z;
  return two_term_mpo(n, c, s, ops);
}

Mpo build_parity_projector_mpo(Leg leg, long L) {
  if (L < 1) throw std::invalid_argument("build_parity_projector_mpo: bad L");
  std::map<long, Tensor> ops;
  const Tensor x = pauli_x();
  for (long j = 0; j < L; ++j) ops[ladder_site(j, leg)] = x;
  return two_term_mpo(2 * L, 0.5, 0.5, ops);
}

Mpo build_parity_projector_both_mpo(long L) {
  if (L < 1) throw std::invalid_argument("build_parity_projector_both_mpo: bad L");
  const Tensor x = pauli_x();
  std::vector<PauliTerm> terms(4);
  for (auto& t : terms) t.coeff = 0.25;
  for (long j = 0; j < L; ++j) {
    terms[1].ops[ladder_site(j, Leg::Upper)] = x;
    terms[2].ops[ladder_site(j, Leg::Lower)] = x;
    terms[3].ops[ladder_site(j, Leg::Upper)] = x;
    terms[3].ops[ladder_site(j, Leg::Lower)] = x;
  }
  return pauli_string_sum_mpo(2 * L, terms);
}

}  // namespace choimps
