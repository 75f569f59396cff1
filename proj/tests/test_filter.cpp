#include "choimps/filter.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <random>

#include "choimps/dmrg.hpp"
#include "dense_oracle.hpp"

using namespace choimps;

namespace {

TruncationPolicy exact_policy() { return TruncationPolicy{256, 1e-13}; }

// Product of random two-site gates over a random product state: a generic
// entangled ladder vector with unit norm and zero log_norm.
MpsState make_entangled_ladder(long L, unsigned long seed) {
  MpsState s = random_product_state(2 * L, seed);
  std::mt19937_64 rng(seed + 17);
  for (long i = 0; i + 1 < 2 * L; ++i)
    s.apply_two_site_gate(i, Tensor::random({4, 4}, rng), exact_policy());
  s.canonicalize_to(0);
  s.set_log_norm(0.0);
  return s;
}

// Doubled-basis index of the diagonal configuration (c, c): every chain bit
// lands on both legs of its rung.
long dup_index(long c, long L) {
  long idx = 0;
  for (long k = 0; k < L; ++k) {
    const long bit = (c >> (L - 1 - k)) & 1;
    idx |= bit << (2 * L - 1 - 2 * k);
    idx |= bit << (2 * L - 2 - 2 * k);
  }
  return idx;
}

double dense_trace(const Eigen::VectorXd& v, long L) {
  double t = 0.0;
  for (long c = 0; c < (1L << L); ++c) t += v[dup_index(c, L)];
  return t;
}

// (1-p) rho + p K rho K applied in the doubled basis, channel by channel.
// Bit flips on both legs of each rung for the X channel; a diagonal four-Z
// sign on each plaquette (the last wraps) for the ZZ channel.  Implemented
// from the mixture form directly, independent of the exponential-filter
// identity used by the library.
Eigen::VectorXd x_channel(Eigen::VectorXd v, long L, double p) {
  for (long j = 0; j < L; ++j) {
    const long mask = (1L << (2 * L - 1 - 2 * j)) | (1L << (2 * L - 2 - 2 * j));
    Eigen::VectorXd out(v.size());
    for (long idx = 0; idx < v.size(); ++idx)
      out[idx] = (1.0 - p) * v[idx] + p * v[idx ^ mask];
    v = std::move(out);
  }
  return v;
}

Eigen::VectorXd zz_channel(Eigen::VectorXd v, long L, double p) {
  for (long j = 0; j < L; ++j) {
    long mask = 0;
    for (long t = 0; t < 4; ++t) mask |= 1L << (2 * L - 1 - ((2 * j + t) % (2 * L)));
    for (long idx = 0; idx < v.size(); ++idx) {
      const int sign = std::popcount(static_cast<unsigned long long>(idx & mask)) % 2 ? -1 : 1;
      v[idx] = (1.0 - p) * v[idx] + p * sign * v[idx];
    }
  }
  return v;
}

void expect_vectors_close(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_LT((a - b).norm(), tol * std::max(1.0, b.norm()));
}

}  // namespace

TEST(Filter, XLayerMatchesMixtureChannelUpToPrefactor) {
  const long L = 3;
  const double p = 0.13;
  MpsState state = make_entangled_ladder(L, 41);
  const Eigen::VectorXd before = oracle::mps_to_dense(state);

  const ChannelSpec spec = ChannelSpec::general(0.0, p, L);
  apply_x_layer(state, spec, exact_policy());

  const Eigen::VectorXd expected =
      x_channel(before, L, p) / std::pow(1.0 - 2.0 * p, 0.5 * static_cast<double>(L));
  expect_vectors_close(oracle::mps_to_dense(state), expected, 1e-10);
}

TEST(Filter, ZzLayerMatchesMixtureChannelUpToPrefactor) {
  const long L = 3;
  const double p = 0.21;
  MpsState state = make_entangled_ladder(L, 42);
  const Eigen::VectorXd before = oracle::mps_to_dense(state);

  const ChannelSpec spec = ChannelSpec::general(p, 0.0, L);
  apply_zz_layer(state, spec, exact_policy());

  const Eigen::VectorXd expected =
      zz_channel(before, L, p) / std::pow(1.0 - 2.0 * p, 0.5 * static_cast<double>(L));
  expect_vectors_close(oracle::mps_to_dense(state), expected, 1e-10);
}

TEST(Filter, FullFilterMatchesMixtureChannel) {
  const long L = 3;
  const double p_zz = 0.17, p_x = 0.29;
  const MpsState rho0 = make_entangled_ladder(L, 43);
  const Eigen::VectorXd before = oracle::mps_to_dense(rho0);

  const ChannelSpec spec = ChannelSpec::general(p_zz, p_x, L);
  const FilteredState out = filter(rho0, spec, exact_policy());

  const Eigen::VectorXd expected = zz_channel(x_channel(before, L, p_x), L, p_zz);
  expect_vectors_close(oracle::mps_to_dense(out.state), expected, 1e-10);
  ASSERT_EQ(out.layer_discarded_weights.size(), 2u);
  EXPECT_DOUBLE_EQ(out.log_prefactor_applied, spec.log_prefactor);
}

TEST(Filter, SaturatedChannelsActAsProjectors) {
  const long L = 3;
  const MpsState rho0 = make_entangled_ladder(L, 44);
  const Eigen::VectorXd before = oracle::mps_to_dense(rho0);

  const ChannelSpec spec = ChannelSpec::general(0.5, 0.5, L);
  EXPECT_EQ(spec.log_prefactor, 0.0);
  const FilteredState once = filter(rho0, spec, exact_policy());
  expect_vectors_close(oracle::mps_to_dense(once.state),
                       zz_channel(x_channel(before, L, 0.5), L, 0.5), 1e-10);

  // Idempotence: the saturated point is a projector.
  const FilteredState twice = filter(once.state, spec, exact_policy());
  expect_vectors_close(oracle::mps_to_dense(twice.state), oracle::mps_to_dense(once.state),
                       1e-10);
}

TEST(Filter, PrefactorRestoresTracePreservation) {
  const long L = 4;
  const ModelParams params{1.0, 1.0, L, true};
  DmrgConfig cfg;
  cfg.trunc = exact_policy();
  cfg.energy_tol = 1e-10;
  const MpsState rho0 = prepare_initial_choi_state(params, cfg, nullptr, false);
  const double t0 = dense_trace(oracle::mps_to_dense(rho0), L);
  ASSERT_GT(std::abs(t0), 0.1);

  for (auto [p_zz, p_x] : {std::pair{0.12, 0.31}, {0.3, 0.5}, {0.5, 0.0}}) {
    const FilteredState out = filter(rho0, ChannelSpec::general(p_zz, p_x, L), exact_policy());
    const double t1 = dense_trace(oracle::mps_to_dense(out.state), L);
    EXPECT_NEAR(t1 / t0, 1.0, 1e-9) << "p_zz=" << p_zz << " p_x=" << p_x;
  }
}

TEST(Filter, ZzOnlySpecLeavesXLayerIdle) {
  const long L = 3;
  MpsState state = make_entangled_ladder(L, 45);
  const Eigen::VectorXd before = oracle::mps_to_dense(state);

  const ChannelSpec spec = ChannelSpec::zz_only(0.2, L);
  const double discarded = apply_x_layer(state, spec, exact_policy());
  EXPECT_EQ(discarded, 0.0);
  expect_vectors_close(oracle::mps_to_dense(state), before, 1e-14);
}

TEST(Filter, RecordsTruncationWhenBondDimensionIsCapped) {
  const long L = 4;
  const MpsState rho0 = make_entangled_ladder(L, 46);
  const FilteredState out = filter(rho0, ChannelSpec::general(0.25, 0.25, L),
                                   TruncationPolicy{2, 1e-13});
  ASSERT_EQ(out.layer_discarded_weights.size(), 2u);
  for (double w : out.layer_discarded_weights) {
    EXPECT_GE(w, 0.0);
    EXPECT_TRUE(std::isfinite(w));
  }
  EXPECT_GT(out.layer_discarded_weights[0] + out.layer_discarded_weights[1], 0.0);
  EXPECT_LE(out.state.max_bond_dim(), 2);
}

TEST(Filter, ThrowsWhenChannelLengthMismatchesState) {
  const MpsState rho0 = make_entangled_ladder(3, 47);
  EXPECT_THROW(filter(rho0, ChannelSpec::general(0.1, 0.1, 4), exact_policy()),
               std::invalid_argument);
}
