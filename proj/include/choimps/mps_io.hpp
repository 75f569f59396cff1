#pragma once

#include <string>

#include "choimps/mps.hpp"

namespace choimps {

// Binary snapshot of an MpsState (little-endian, versioned header).  Layout:
//   magic "CMPS", u32 version, i64 n_sites, f64 log_norm, i64 center,
//   then per site: i64 rank, i64 dims[rank], f64 data[prod(dims)].
void save_mps(const MpsState& state, const std::string& path);
MpsState load_mps(const std::string& path);  // throws std::runtime_error on
                                             // bad magic/version/truncation

}  // namespace choimps
