#pragma once

#include <vector>

#include "choimps/lattice.hpp"
#include "choimps/mps.hpp"

namespace choimps {

// A ladder state after decoherence filtering, together with the channel that
// produced it.  The state's log_norm includes the analytic channel prefactor
// exactly once; layer_discarded_weights records the truncation error of each
// filtering layer in application order (X layer first, then ZZ).
struct FilteredState {
  MpsState state;
  ChannelSpec channel;
  std::vector<double> layer_discarded_weights;
  double log_prefactor_applied = 0.0;
};

// Applies the bit-flip filter e^{tau_x X(x)X} on every rung (saturated: the
// rung projector).  Returns the summed relative discarded weight.
double apply_x_layer(MpsState& state, const ChannelSpec& channel, const TruncationPolicy& pol);

// Applies the ZZ filter e^{tau_zz ZZZZ} on every plaquette, j = 0 .. L-1 in
// order (the last one wraps around the boundary).  Returns the summed
// relative discarded weight.
double apply_zz_layer(MpsState& state, const ChannelSpec& channel, const TruncationPolicy& pol);

// Full decoherence point: X layer, then ZZ layer, then the analytic
// prefactor folded into log_norm.  The input state should be the normalized
// pre-decoherence ladder state.
FilteredState filter(const MpsState& rho0, const ChannelSpec& channel,
                     const TruncationPolicy& pol);

}  // namespace choimps
