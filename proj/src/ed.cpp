#include "choimps/ed.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace choimps::ed {

namespace {

// Doubled-picture index of the ladder configuration with row (upper-leg)
// bits r and column bits c; rung j's bits land at chain positions 2j, 2j+1.
long interleave(long r, long c, long L) {
  long idx = 0;
  for (long j = 0; j < L; ++j) {
    idx = (idx << 1) | ((r >> (L - 1 - j)) & 1);
    idx = (idx << 1) | ((c >> (L - 1 - j)) & 1);
  }
  return idx;
}

int chain_site_sign(long idx, long chain_site, long n_chain) {
  return ((idx >> (n_chain - 1 - chain_site)) & 1) ? -1 : 1;
}

long chain_site_mask(long chain_site, long n_chain) { return 1L << (n_chain - 1 - chain_site); }

void require_doubled(const DenseState& s, const char* who) {
  if (s.picture != DenseState::Picture::Doubled)
    throw std::invalid_argument(std::string(who) + ": doubled picture required");
}

}  // namespace

DenseState DenseState::doubled(long L, Eigen::VectorXd v) {
  if (v.size() != (1L << (2 * L))) throw std::invalid_argument("DenseState: size mismatch");
  DenseState s;
  s.picture = Picture::Doubled;
  s.L = L;
  s.vec = std::move(v);
  return s;
}

DenseState DenseState::physical(long L, Eigen::MatrixXd m) {
  if (m.rows() != (1L << L) || m.cols() != (1L << L))
    throw std::invalid_argument("DenseState: shape mismatch");
  DenseState s;
  s.picture = Picture::Physical;
  s.L = L;
  s.mat = std::move(m);
  return s;
}

DenseState DenseState::to_doubled() const {
  if (picture == Picture::Doubled) return *this;
  Eigen::VectorXd v(1L << (2 * L));
  for (long r = 0; r < (1L << L); ++r)
    for (long c = 0; c < (1L << L); ++c) v(interleave(r, c, L)) = mat(r, c);
  return doubled(L, std::move(v));
}

DenseState DenseState::to_physical() const {
  if (picture == Picture::Physical) return *this;
  Eigen::MatrixXd m(1L << L, 1L << L);
  for (long r = 0; r < (1L << L); ++r)
    for (long c = 0; c < (1L << L); ++c) m(r, c) = vec(interleave(r, c, L));
  return physical(L, std::move(m));
}

Eigen::MatrixXd tfim_chain_dense(double J, double h, long L, bool periodic) {
  const long dim = 1L << L;
  Eigen::MatrixXd hm = Eigen::MatrixXd::Zero(dim, dim);
  for (long r = 0; r < dim; ++r) {
    double diag = 0.0;
    for (long j = 0; j + 1 < L; ++j)
      diag -= J * chain_site_sign(r, j, L) * chain_site_sign(r, j + 1, L);
    if (periodic && L > 1) diag -= J * chain_site_sign(r, L - 1, L) * chain_site_sign(r, 0, L);
    hm(r, r) += diag;
    for (long j = 0; j < L; ++j) hm(r ^ chain_site_mask(j, L), r) -= h;
  }
  return hm;
}

GroundSolution ground_state_dense(const ModelParams& params) {
  params.validate();
  const long L = params.L, dim = 1L << L;
  if (L > 10) throw std::invalid_argument("ground_state_dense: L too large for dense solve");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      tfim_chain_dense(params.J, params.h, L, params.periodic));
  Eigen::VectorXd psi = es.eigenvectors().col(0);

  // Spin-flip parity operator applied to a vector.
  auto apply_parity = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd out(dim);
    for (long r = 0; r < dim; ++r) out(r) = v((~r) & (dim - 1));
    return out;
  };

  if (es.eigenvalues()(1) - es.eigenvalues()(0) < 1e-8) {
    // Degenerate ground space (deep ferromagnet): resolve onto the
    // even-parity cat combination.
    const Eigen::VectorXd a = es.eigenvectors().col(0), b = es.eigenvectors().col(1);
    Eigen::Matrix2d m;
    m(0, 0) = a.dot(apply_parity(a));
    m(0, 1) = a.dot(apply_parity(b));
    m(1, 0) = m(0, 1);
    m(1, 1) = b.dot(apply_parity(b));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> pes(m);
    // Largest eigenvalue ~ +1 picks the even combination.
    psi = pes.eigenvectors()(0, 1) * a + pes.eigenvectors()(1, 1) * b;
    psi.normalize();
  }

  // Deterministic overall sign.
  long imax = 0;
  psi.cwiseAbs().maxCoeff(&imax);
  if (psi(imax) < 0) psi = -psi;

  Eigen::VectorXd v(1L << (2 * L));
  for (long r = 0; r < dim; ++r)
    for (long c = 0; c < dim; ++c) v(interleave(r, c, L)) = psi(r) * psi(c);

  GroundSolution g;
  g.state = DenseState::doubled(L, std::move(v));
  g.energy = 2.0 * es.eigenvalues()(0);
  g.chain = std::move(psi);
  return g;
}

DenseState apply_channel_dense(const DenseState& s, double p_zz, double p_x) {
  const long L = s.L;
  const double tzz = tau_of_p(p_zz), tx = tau_of_p(p_x);

  if (s.picture == DenseState::Picture::Physical) {
    Eigen::MatrixXd rho = s.mat;
    const long dim = 1L << L;
    // Site bit-flip channels first, then bond dephasing (they commute).
    for (long j = 0; j < L; ++j) {
      const long m = chain_site_mask(j, L);
      Eigen::MatrixXd next(dim, dim);
      for (long r = 0; r < dim; ++r)
        for (long c = 0; c < dim; ++c)
          next(r, c) = (1 - p_x) * rho(r, c) + p_x * rho(r ^ m, c ^ m);
      rho = std::move(next);
    }
    for (long j = 0; j < L; ++j) {
      Eigen::MatrixXd next(dim, dim);
      for (long r = 0; r < dim; ++r)
        for (long c = 0; c < dim; ++c) {
          const int sr = chain_site_sign(r, j, L) * chain_site_sign(r, (j + 1) % L, L);
          const int sc = chain_site_sign(c, j, L) * chain_site_sign(c, (j + 1) % L, L);
          next(r, c) = (1 - p_zz) * rho(r, c) + p_zz * sr * sc * rho(r, c);
        }
      rho = std::move(next);
    }
    return DenseState::physical(L, std::move(rho));
  }

  // Doubled picture: filtering gates plus the analytic prefactor.
  Eigen::VectorXd v = s.vec;
  const long n = 2 * L;
  for (long j = 0; j < L; ++j) {
    const long m = chain_site_mask(2 * j, n) | chain_site_mask(2 * j + 1, n);
    Eigen::VectorXd next(v.size());
    if (std::isinf(tx)) {
      for (long i = 0; i < v.size(); ++i) next(i) = 0.5 * (v(i) + v(i ^ m));
    } else {
      const double c = std::cosh(tx), sn = std::sinh(tx), pref = std::sqrt(1 - 2 * p_x);
      for (long i = 0; i < v.size(); ++i) next(i) = pref * (c * v(i) + sn * v(i ^ m));
    }
    v = std::move(next);
  }
  for (long j = 0; j < L; ++j) {
    const long s0 = 2 * j, s1 = 2 * j + 1, s2 = (2 * j + 2) % n, s3 = (2 * j + 3) % n;
    if (std::isinf(tzz)) {
      for (long i = 0; i < v.size(); ++i) {
        const int sg = chain_site_sign(i, s0, n) * chain_site_sign(i, s1, n) *
                       chain_site_sign(i, s2, n) * chain_site_sign(i, s3, n);
        v(i) = 0.5 * (1 + sg) * v(i);
      }
    } else {
      const double c = std::cosh(tzz), sn = std::sinh(tzz), pref = std::sqrt(1 - 2 * p_zz);
      for (long i = 0; i < v.size(); ++i) {
        const int sg = chain_site_sign(i, s0, n) * chain_site_sign(i, s1, n) *
                       chain_site_sign(i, s2, n) * chain_site_sign(i, s3, n);
        v(i) = pref * (c + sn * sg) * v(i);
      }
    }
  }
  return DenseState::doubled(L, std::move(v));
}

double renyi2_correlator_dense(const DenseState& s, long i, long j) {
  require_doubled(s, "renyi2_correlator_dense");
  const long n = 2 * s.L;
  double num = 0.0, den = 0.0;
  for (long idx = 0; idx < s.vec.size(); ++idx) {
    const double w = s.vec(idx) * s.vec(idx);
    const int sg = chain_site_sign(idx, 2 * i, n) * chain_site_sign(idx, 2 * i + 1, n) *
                   chain_site_sign(idx, 2 * j, n) * chain_site_sign(idx, 2 * j + 1, n);
    num += sg * w;
    den += w;
  }
  return num / den;
}

double upper_correlator_dense(const DenseState& s, long i, long j) {
  require_doubled(s, "upper_correlator_dense");
  const long n = 2 * s.L;
  double num = 0.0, den = 0.0;
  for (long idx = 0; idx < s.vec.size(); ++idx) {
    const double w = s.vec(idx) * s.vec(idx);
    num += chain_site_sign(idx, 2 * i, n) * chain_site_sign(idx, 2 * j, n) * w;
    den += w;
  }
  return num / den;
}

double strange_correlator_dense(const DenseState& s, long i, long j) {
  require_doubled(s, "strange_correlator_dense");
  const long L = s.L;
  double num = 0.0, den = 0.0;
  for (long r = 0; r < (1L << L); ++r) {
    const double d = s.vec(interleave(r, r, L));
    num += chain_site_sign(r, i, L) * chain_site_sign(r, j, L) * d;
    den += d;
  }
  return num / den;
}

double prefix_entropy_dense(const DenseState& s, long n_chain_sites) {
  require_doubled(s, "prefix_entropy_dense");
  const long n = 2 * s.L;
  if (n_chain_sites < 1 || n_chain_sites >= n)
    throw std::invalid_argument("prefix_entropy_dense: cut out of range");
  const long rows = 1L << n_chain_sites, cols = 1L << (n - n_chain_sites);
  Eigen::MatrixXd m(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = s.vec(r * cols + c);
  m /= s.vec.norm();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  double ent = 0.0;
  for (long k = 0; k < svd.singularValues().size(); ++k) {
    const double p = svd.singularValues()(k) * svd.singularValues()(k);
    if (p > 1e-16) ent -= p * std::log(p);
  }
  return ent;
}

DenseObservables observables_dense(const DenseState& s_in) {
  const DenseState s = s_in.to_doubled();
  const long L = s.L;
  DenseObservables o;
  o.purity = s.vec.squaredNorm();
  for (long r = 0; r < (1L << L); ++r) o.trace += s.vec(interleave(r, r, L));

  for (long r = 1; r <= L / 2; ++r) {
    o.renyi2_curve.push_back(renyi2_correlator_dense(s, 0, r));
    o.strange_curve.push_back(strange_correlator_dense(s, 0, r));
    o.upper_curve.push_back(upper_correlator_dense(s, 0, r));
    o.chi_renyi2 += o.renyi2_curve.back();
    o.chi_strange += o.strange_curve.back();
    o.chi_upper += o.upper_curve.back();
  }
  o.chi_renyi2 *= 2.0 / L;
  o.chi_strange *= 2.0 / L;
  o.chi_upper *= 2.0 / L;

  for (long j = 0; j < L; ++j) o.renyi2_nn_average += renyi2_correlator_dense(s, j, (j + 1) % L);
  o.renyi2_nn_average /= L;

  for (long x = 1; x < L; ++x) o.profile.push_back(prefix_entropy_dense(s, 2 * x));
  o.region_entropy = prefix_entropy_dense(s, L + 1);
  return o;
}

double tfim_exact_energy(double J, double h, long L, int parity) {
  if (L < 2 || L % 2 != 0) throw std::invalid_argument("tfim_exact_energy: L must be even >= 2");
  if (parity != 1 && parity != -1) throw std::invalid_argument("tfim_exact_energy: parity +-1");
  const double pi = std::numbers::pi;
  auto eps = [&](double k) {
    return 2.0 * std::sqrt(J * J + h * h - 2.0 * J * h * std::cos(k));
  };

  if (parity == 1) {
    // Even sector: antiperiodic fermions, k = (2m+1) pi / L.
    double e = 0.0;
    for (long m = 0; m < L; ++m) e -= 0.5 * eps((2.0 * m + 1.0) * pi / L);
    return e;
  }

  // Odd sector: periodic fermions, k = 2 pi m / L.  The unpaired k = 0 and
  // k = pi modes enter with signed energies 2(h-J) and 2(h+J); the vacuum of
  // all modes has even fermion number, so exactly one excitation must be
  // added, chosen as cheaply as possible.
  double evac = -(h - J) - (h + J);
  double cheapest = std::min(2.0 * (h - J), 2.0 * (h + J));
  for (long m = 1; m < L; ++m) {
    if (m == L / 2) continue;  // k = pi
    const double k = 2.0 * pi * m / L;
    evac -= 0.5 * eps(k);
    cheapest = std::min(cheapest, eps(k));
  }
  return evac + cheapest;
}

void write_golden_csv(const std::vector<GoldenPoint>& points, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_golden_csv: cannot open " + path);
  os << "L,J,h,p_zz,p_x,observable,value\n";
  char buf[512];
  for (const auto& pt : points) {
    GroundSolution g = ground_state_dense(pt.model);
    DenseState dec = apply_channel_dense(g.state, pt.p_zz, pt.p_x);
    DenseObservables o = observables_dense(dec);
    auto row = [&](const char* name, double value) {
      std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g,%.17g,%s,%.17g\n", pt.model.L,
                    pt.model.J, pt.model.h, pt.p_zz, pt.p_x, name, value);
      os << buf;
    };
    row("chi_renyi2", o.chi_renyi2);
    row("chi_strange", o.chi_strange);
    row("chi_upper", o.chi_upper);
    row("renyi2_nn_average", o.renyi2_nn_average);
    row("region_entropy", o.region_entropy);
    row("purity", o.purity);
    row("trace", o.trace);
  }
}

}  // namespace choimps::ed
