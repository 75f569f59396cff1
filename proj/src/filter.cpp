#include "choimps/filter.hpp"

#include <cmath>
#include <stdexcept>

namespace choimps {

double apply_x_layer(MpsState& state, const ChannelSpec& channel, const TruncationPolicy& pol) {
  if (channel.tau_x == 0.0) return 0.0;
  const Tensor gate = build_x_rung_gate(channel.tau_x);
  double discarded = 0.0;
  for (long j = 0; j < channel.L; ++j)
    discarded += state.apply_two_site_gate(ladder_site(j, Leg::Upper), gate, pol);
  return discarded;
}

double apply_zz_layer(MpsState& state, const ChannelSpec& channel, const TruncationPolicy& pol) {
  if (channel.tau_zz == 0.0) return 0.0;
  double discarded = 0.0;
  for (long j = 0; j < channel.L; ++j)
    discarded += state.apply_mpo(build_zz_plaquette_mpo(channel.tau_zz, j, channel.L), pol);
  return discarded;
}

FilteredState filter(const MpsState& rho0, const ChannelSpec& channel,
                     const TruncationPolicy& pol) {
  if (2 * channel.L != rho0.n_sites())
    throw std::invalid_argument("filter: channel length does not match the ladder");
  FilteredState out{rho0, channel, {}, 0.0};
  out.layer_discarded_weights.push_back(apply_x_layer(out.state, channel, pol));
  out.layer_discarded_weights.push_back(apply_zz_layer(out.state, channel, pol));
  out.state.add_log_norm(channel.log_prefactor);
  out.log_prefactor_applied = channel.log_prefactor;
  return out;
}

}  // namespace choimps
