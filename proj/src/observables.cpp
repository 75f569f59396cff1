#include "choimps/observables.hpp"

#include <cmath>
#include <stdexcept>

#include "choimps/errors.hpp"
#include "choimps/lattice.hpp"

namespace choimps {

namespace {

// Bra/ket transfer environment with the scale factored out logarithmically.
// `m` is (bra bond, ket bond); `zero` marks an exactly annihilated network.
struct Env {
  Tensor m;
  double logf = 0.0;
  bool zero = false;
};

Env trivial_env() {
  Tensor m({1, 1});
  m(0, 0) = 1.0;
  return {std::move(m), 0.0, false};
}

// O |site> on the physical leg: out(b, p, b') = sum_q O(p, q) site(b, q, b').
Tensor apply_site_op(const Tensor& op, const Tensor& site) {
  return transpose(contract(op, site, {{1, 1}}), {1, 0, 2});
}

Env rescaled(Tensor m, double logf) {
  const double mx = m.max_abs();
  if (mx == 0.0) return {std::move(m), 0.0, true};
  m.scale(1.0 / mx);
  return {std::move(m), logf + std::log(mx), false};
}

Env step_left(const Env& e, const Tensor& bra_site, const Tensor* op, const Tensor& ket_site) {
  if (e.zero) return e;
  const Tensor& k = op ? apply_site_op(*op, ket_site) : ket_site;
  Tensor t1 = contract(e.m, bra_site, {{0, 0}});  // (ket bond, p, bra bond')
  Tensor t2 = contract(t1, k, {{0, 0}, {1, 1}});  // (bra bond', ket bond')
  return rescaled(std::move(t2), e.logf);
}

Env step_right(const Env& e, const Tensor& bra_site, const Tensor& ket_site) {
  if (e.zero) return e;
  Tensor t1 = contract(bra_site, e.m, {{2, 0}});          // (bra bond, p, ket bond')
  Tensor t2 = contract(t1, ket_site, {{1, 1}, {2, 2}});   // (bra bond, ket bond)
  return rescaled(std::move(t2), e.logf);
}

LogScalar close(const Env& l, const Env& r) {
  if (l.zero || r.zero) return {0.0, 0};
  const Tensor s = contract(l.m, r.m, {{0, 0}, {1, 1}});
  const double v = s[0];
  if (v == 0.0) return {0.0, 0};
  return {l.logf + r.logf + std::log(std::abs(v)), v > 0.0 ? 1 : -1};
}

double ratio(const LogScalar& num, const LogScalar& den) {
  if (den.sign == 0) throw std::runtime_error("correlator ratio: vanishing normalization");
  if (num.sign == 0) return 0.0;
  return num.sign * den.sign * std::exp(num.log_mag - den.log_mag);
}

void check_rung(long i, long L, const char* what) {
  if (i < 0 || i >= L) throw std::invalid_argument(std::string(what) + ": rung out of range");
}

// Identity-transfer environments for every suffix: right[k] contracts sites
// [k, n).  right[n] is trivial.
std::vector<Env> suffix_envs(const MpsState& bra, const MpsState& ket) {
  const long n = ket.n_sites();
  std::vector<Env> right(static_cast<size_t>(n) + 1);
  right[static_cast<size_t>(n)] = trivial_env();
  for (long k = n - 1; k >= 0; --k)
    right[static_cast<size_t>(k)] =
        step_right(right[static_cast<size_t>(k + 1)], bra.site(k), ket.site(k));
  return right;
}

}  // namespace

MpsState infinite_temperature_state(long n_rungs) {
  if (n_rungs < 1) throw std::invalid_argument("infinite_temperature_state: need a rung");
  std::vector<Tensor> sites;
  sites.reserve(static_cast<size_t>(2 * n_rungs));
  for (long j = 0; j < n_rungs; ++j) {
    Tensor up({1, 2, 2});  // physical leg copied onto the rung bond
    up(0, 0, 0) = 1.0;
    up(0, 1, 1) = 1.0;
    Tensor lo({2, 2, 1});  // rung bond matched against the lower leg
    lo(0, 0, 0) = 1.0;
    lo(1, 1, 0) = 1.0;
    sites.push_back(up);
    sites.push_back(lo);
  }
  MpsState s(std::move(sites));
  s.canonicalize_to(0);  // norm 2^{L/2} moves into log_norm
  return s;
}

double correlator(const FilteredState& f, CorrelatorKind kind, long i, long j) {
  const long L = f.channel.L;
  check_rung(i, L, "correlator");
  check_rung(j, L, "correlator");
  if (i == j) throw std::invalid_argument("correlator: coincident rungs");

  const Tensor z = pauli_z();
  std::vector<std::pair<long, Tensor>> ops;
  for (long r : {i, j}) {
    ops.emplace_back(ladder_site(r, Leg::Upper), z);
    if (kind == CorrelatorKind::Renyi2ZZ) ops.emplace_back(ladder_site(r, Leg::Lower), z);
  }

  if (kind == CorrelatorKind::StrangeZ) {
    const MpsState one = infinite_temperature_state(L);
    return ratio(expect_product_op(one, ops, f.state), inner(one, f.state));
  }
  return ratio(expect_product_op(f.state, ops, f.state), inner(f.state, f.state));
}

std::vector<double> correlator_curve(const FilteredState& f, CorrelatorKind kind, long r_max) {
  const long L = f.channel.L;
  if (r_max < 0) r_max = L / 2;
  if (r_max < 1 || r_max >= L)
    throw std::invalid_argument("correlator_curve: separation out of range");

  const MpsState& ket = f.state;
  const MpsState bra_one =
      kind == CorrelatorKind::StrangeZ ? infinite_temperature_state(L) : MpsState();
  const MpsState& bra = kind == CorrelatorKind::StrangeZ ? bra_one : ket;
  const bool both_legs = kind == CorrelatorKind::Renyi2ZZ;
  const Tensor z = pauli_z();

  const std::vector<Env> right = suffix_envs(bra, ket);
  const LogScalar den = close(trivial_env(), right[0]);

  // One walk with the rung-0 operators planted, closing against the
  // identity suffix at each separation.
  Env a = step_left(trivial_env(), bra.site(0), &z, ket.site(0));
  a = step_left(a, bra.site(1), both_legs ? &z : nullptr, ket.site(1));
  long pos = 2;

  std::vector<double> curve;
  curve.reserve(static_cast<size_t>(r_max));
  for (long r = 1; r <= r_max; ++r) {
    for (; pos < 2 * r; ++pos) a = step_left(a, bra.site(pos), nullptr, ket.site(pos));
    Env b = step_left(a, bra.site(2 * r), &z, ket.site(2 * r));
    long next = 2 * r + 1;
    if (both_legs) {
      b = step_left(b, bra.site(2 * r + 1), &z, ket.site(2 * r + 1));
      next = 2 * r + 2;
    }
    curve.push_back(ratio(close(b, right[static_cast<size_t>(next)]), den));
  }
  return curve;
}

double susceptibility(const FilteredState& f, CorrelatorKind kind) {
  const std::vector<double> curve = correlator_curve(f, kind, f.channel.L / 2);
  double sum = 0.0;
  for (double c : curve) sum += c;
  return 2.0 * sum / static_cast<double>(f.channel.L);
}

double renyi2_nn_average(const FilteredState& f) {
  const long L = f.channel.L;
  const long n = 2 * L;
  const MpsState& s = f.state;
  const Tensor z = pauli_z();

  const std::vector<Env> right = suffix_envs(s, s);
  const LogScalar den = close(trivial_env(), right[0]);

  std::vector<Env> left(static_cast<size_t>(n) + 1);
  left[0] = trivial_env();
  for (long k = 0; k < n; ++k)
    left[static_cast<size_t>(k) + 1] =
        step_left(left[static_cast<size_t>(k)], s.site(k), nullptr, s.site(k));

  double sum = 0.0;
  for (long j = 0; j + 1 < L; ++j) {
    Env b = left[static_cast<size_t>(2 * j)];
    for (long t = 0; t < 4; ++t) b = step_left(b, s.site(2 * j + t), &z, s.site(2 * j + t));
    sum += ratio(close(b, right[static_cast<size_t>(2 * j + 4)]), den);
  }

  // Wrap bond: operators on the first and last rungs, identity between.
  Env b = step_left(trivial_env(), s.site(0), &z, s.site(0));
  b = step_left(b, s.site(1), &z, s.site(1));
  for (long k = 2; k < n - 2; ++k) b = step_left(b, s.site(k), nullptr, s.site(k));
  b = step_left(b, s.site(n - 2), &z, s.site(n - 2));
  b = step_left(b, s.site(n - 1), &z, s.site(n - 1));
  sum += ratio(close(b, right[static_cast<size_t>(n)]), den);

  return sum / static_cast<double>(L);
}

double region_entropy(const FilteredState& f, long x) {
  if (x < 0 || x >= f.channel.L)
    throw std::invalid_argument("region_entropy: cut out of range");
  return prefix_entropy(f.state, 2 * x + 1);
}

double half_ladder_entropy(const FilteredState& f) { return region_entropy(f, f.channel.L / 2); }

EntropyProfile entropy_profile(const FilteredState& f) {
  const long L = f.channel.L;
  EntropyProfile p;
  p.L = L;
  const std::vector<std::vector<double>> spectra = bond_spectra(f.state);
  for (long x = 1; x < L; ++x) {
    p.x.push_back(x);
    p.entropy.push_back(spectrum_entropy(spectra[static_cast<size_t>(2 * x - 1)]));
  }
  return p;
}

CeffFit fit_ceff(const EntropyProfile& profile, long x_min, long x_max) {
  if (x_min < 0) x_min = 3;
  if (x_max < 0) x_max = profile.L - 3;

  std::vector<double> u, s;
  for (size_t k = 0; k < profile.x.size(); ++k) {
    const long x = profile.x[k];
    if (x < x_min || x > x_max) continue;
    u.push_back(std::log(2.0 * static_cast<double>(profile.L) *
                         std::sin(M_PI * static_cast<double>(x) /
                                  static_cast<double>(profile.L))));
    s.push_back(profile.entropy[k]);
  }
  const long m = static_cast<long>(u.size());
  if (m < 2) throw FitError("central-charge fit: fewer than two cuts in the window");

  double u_mean = 0.0, s_mean = 0.0;
  for (long k = 0; k < m; ++k) {
    u_mean += u[static_cast<size_t>(k)];
    s_mean += s[static_cast<size_t>(k)];
  }
  u_mean /= static_cast<double>(m);
  s_mean /= static_cast<double>(m);

  double suu = 0.0, sus = 0.0;
  for (long k = 0; k < m; ++k) {
    const double du = u[static_cast<size_t>(k)] - u_mean;
    suu += du * du;
    sus += du * (s[static_cast<size_t>(k)] - s_mean);
  }
  if (suu < 1e-12) throw FitError("central-charge fit: degenerate cut geometry");

  CeffFit fit;
  const double slope = sus / suu;
  fit.c_eff = 3.0 * slope;
  fit.intercept = s_mean - slope * u_mean;
  fit.points = m;
  double rss = 0.0;
  for (long k = 0; k < m; ++k) {
    const double r = s[static_cast<size_t>(k)] - (slope * u[static_cast<size_t>(k)] + fit.intercept);
    rss += r * r;
  }
  fit.rms_residual = std::sqrt(rss / static_cast<double>(m));
  return fit;
}

double purity_log(const FilteredState& f) { return 2.0 * f.state.log_norm(); }

}  // namespace choimps
