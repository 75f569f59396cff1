#include "choimps/dmrg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "choimps/lanczos.hpp"

namespace choimps {

namespace {

// Environment tensors carry (bra bond, operator bond, ket bond).  Bra and
// ket are the same state during the ground search.
Tensor trivial_env() {
  Tensor e({1, 1, 1});
  e(0, 0, 0) = 1.0;
  return e;
}

Tensor left_step(const Tensor& env, const Tensor& site, const Tensor& w) {
  Tensor t1 = contract(env, site, {{0, 0}});              // (w, b, p_bra, r_bra)
  Tensor t2 = contract(t1, w, {{0, 0}, {2, 1}});          // (b, r_bra, p_in, wr)
  return contract(t2, site, {{0, 0}, {2, 1}});            // (r_bra, wr, r_ket)
}

Tensor right_step(const Tensor& env, const Tensor& site, const Tensor& w) {
  Tensor t1 = contract(site, env, {{2, 0}});              // (l_bra, p_bra, w, b)
  Tensor t2 = contract(w, t1, {{1, 1}, {3, 2}});          // (wl, p_in, l_bra, b)
  Tensor t3 = contract(t2, site, {{1, 1}, {3, 2}});       // (wl, l_bra, l_ket)
  return transpose(t3, {1, 0, 2});                        // (l_bra, wl, l_ket)
}

// y = H_eff x on the two-site block with fixed outer environments.
void apply_block(const Tensor& lenv, const Tensor& w1, const Tensor& w2, const Tensor& renv,
                 const std::vector<long>& theta_dims, const double* in, double* out) {
  Tensor theta(theta_dims);
  std::copy(in, in + theta.size(), theta.data());
  Tensor t1 = contract(lenv, theta, {{2, 0}});            // (a, w, p1, p2, dr)
  Tensor t2 = contract(t1, w1, {{1, 0}, {2, 2}});         // (a, p2, dr, o1, wm)
  Tensor t3 = contract(t2, w2, {{4, 0}, {1, 2}});         // (a, dr, o1, o2, wr)
  Tensor t4 = contract(t3, renv, {{1, 2}, {4, 1}});       // (a, o1, o2, a')
  std::copy(t4.data(), t4.data() + t4.size(), out);
}

}  // namespace

MpsState random_product_state(long n_sites, unsigned long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<std::array<double, 2>> locals;
  locals.reserve(static_cast<size_t>(n_sites));
  for (long i = 0; i < n_sites; ++i) {
    std::array<double, 2> v{};
    do {
      v = {dist(rng), dist(rng)};
    } while (std::hypot(v[0], v[1]) < 0.1);
    locals.push_back(v);
  }
  return MpsState::from_product(locals);
}

std::pair<MpsState, DmrgReport> find_ground_state(const Mpo& hamiltonian, MpsState state,
                                                  const DmrgConfig& config) {
  const long n = state.n_sites();
  if (hamiltonian.n_sites() != n)
    throw std::invalid_argument("find_ground_state: operator/state length mismatch");
  if (n < 2) throw std::invalid_argument("find_ground_state: need at least two sites");

  state.canonicalize_to(0);
  DmrgReport report;

  // lenv[i]: everything left of site i; renv[i]: everything right of site i.
  std::vector<Tensor> lenv(static_cast<size_t>(n)), renv(static_cast<size_t>(n));
  lenv[0] = trivial_env();
  renv[static_cast<size_t>(n - 1)] = trivial_env();
  for (long i = n - 2; i >= 0; --i)
    renv[static_cast<size_t>(i)] =
        right_step(renv[static_cast<size_t>(i + 1)], state.site(i + 1),
                   hamiltonian.sites[static_cast<size_t>(i + 1)]);

  LanczosOptions lopts;
  lopts.tol = config.eigen_tol;
  lopts.max_iter = config.lanczos_max_iter;
  lopts.require_converged = false;
  lopts.seed = config.seed + 1;

  double last_energy = 0.0;
  double current_noise = 0.0;
  std::mt19937_64 noise_rng(config.seed + 99);
  std::normal_distribution<double> noise_dist(0.0, 1.0);

  auto optimize_block = [&](long i, bool moving_right) -> double {
    const Tensor& a = state.site(i);
    const Tensor& b = state.site(i + 1);
    const long dl = a.dim(0), dr = b.dim(2);
    const std::vector<long> theta_dims{dl, 2, 2, dr};

    Tensor theta0 = contract(a, b, {{2, 0}});
    std::vector<double> guess(theta0.data(), theta0.data() + theta0.size());

    const Tensor& w1 = hamiltonian.sites[static_cast<size_t>(i)];
    const Tensor& w2 = hamiltonian.sites[static_cast<size_t>(i + 1)];
    const Tensor& le = lenv[static_cast<size_t>(i)];
    const Tensor& re = renv[static_cast<size_t>(i + 1)];

    auto apply = [&](const double* in, double* out) {
      apply_block(le, w1, w2, re, theta_dims, in, out);
    };
    LanczosResult res = lowest_eigenpair(apply, dl * 2 * 2 * dr, lopts, &guess);

    Tensor theta(theta_dims);
    std::copy(res.vector.begin(), res.vector.end(), theta.data());
    if (current_noise > 0.0) {
      const double scale = current_noise / std::sqrt(static_cast<double>(theta.size()));
      for (long k = 0; k < theta.size(); ++k) theta.data()[k] += scale * noise_dist(noise_rng);
    }
    SvdResult svd = svd_truncate(theta.reshaped({dl * 2, 2 * dr}), config.trunc.max_bond,
                                 config.trunc.sv_cutoff);
    double kept2 = 0.0;
    for (double s : svd.s) kept2 += s * s;
    const double total2 = kept2 + svd.discarded_weight;
    report.total_discarded_weight += total2 > 0 ? svd.discarded_weight / total2 : 0.0;
    const double nrm = std::sqrt(kept2);

    if (moving_right) {
      state.site(i) = svd.u.reshaped({dl, 2, svd.rank});
      Tensor sv({svd.rank, svd.vt.dim(1)});
      for (long r = 0; r < svd.rank; ++r)
        for (long c = 0; c < svd.vt.dim(1); ++c)
          sv(r, c) = svd.s[static_cast<size_t>(r)] / nrm * svd.vt(r, c);
      state.site(i + 1) = sv.reshaped({svd.rank, 2, dr});
      state.assume_center(i + 1);
      lenv[static_cast<size_t>(i + 1)] = left_step(le, state.site(i), w1);
    } else {
      state.site(i + 1) = svd.vt.reshaped({svd.rank, 2, dr});
      Tensor us({svd.u.dim(0), svd.rank});
      for (long r = 0; r < svd.u.dim(0); ++r)
        for (long c = 0; c < svd.rank; ++c)
          us(r, c) = svd.u(r, c) * svd.s[static_cast<size_t>(c)] / nrm;
      state.site(i) = us.reshaped({dl, 2, svd.rank});
      state.assume_center(i);
      renv[static_cast<size_t>(i)] = right_step(re, state.site(i + 1), w2);
    }
    return res.value;
  };

  for (long sweep = 0; sweep < config.max_sweeps; ++sweep) {
    current_noise = sweep < config.noise_sweeps
                        ? config.noise_amplitude * std::pow(10.0, -static_cast<double>(sweep))
                        : 0.0;
    double energy = 0.0;
    for (long i = 0; i + 1 < n; ++i) energy = optimize_block(i, true);
    for (long i = n - 2; i >= 0; --i) energy = optimize_block(i, false);
    report.sweep_energies.push_back(energy);

    // Only compare consecutive noise-free sweeps.
    if (sweep > config.noise_sweeps && std::abs(energy - last_energy) < config.energy_tol) {
      report.converged = true;
      last_energy = energy;
      break;
    }
    last_energy = energy;
  }

  report.energy = last_energy;
  report.final_bond_profile = state.bond_profile();
  state.canonicalize_to(0);
  state.set_log_norm(0.0);
  return {std::move(state), std::move(report)};
}

MpsState prepare_initial_choi_state(const ModelParams& params, const DmrgConfig& config,
                                    DmrgReport* report, bool project_cat) {
  params.validate();
  Mpo h = build_doubled_tfim_mpo(params);
  MpsState init = random_product_state(2 * params.L, config.seed);
  auto [state, rep] = find_ground_state(h, std::move(init), config);
  if (report) *report = rep;

  if (project_cat && params.J / params.h > 1.0) {
    // Ferromagnetic side: the finite-size ground state is the even-parity
    // cat on each leg, but the variational search may land on an arbitrary
    // combination of the near-degenerate pair.  Projecting makes the parity
    // eigenstate exact.
    state.apply_mpo(build_parity_projector_mpo(Leg::Upper, params.L), config.trunc);
    state.apply_mpo(build_parity_projector_mpo(Leg::Lower, params.L), config.trunc);
  }
  state.canonicalize_to(0);
  state.set_log_norm(0.0);
  return state;
}

}  // namespace choimps
