#include "choimps/mps_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace choimps {

namespace {

constexpr char kMagic[4] = {'C', 'M', 'P', 'S'};
constexpr uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  // Little-endian hosts only (static_assert guards the assumption).
  static_assert(std::endian::native == std::endian::little);
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw std::runtime_error("load_mps: truncated file");
  return v;
}

}  // namespace

void save_mps(const MpsState& state, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_mps: cannot open " + path);
  os.write(kMagic, 4);
  put<uint32_t>(os, kVersion);
  put<int64_t>(os, state.n_sites());
  put<double>(os, state.log_norm());
  put<int64_t>(os, state.center());
  for (long i = 0; i < state.n_sites(); ++i) {
    const Tensor& t = state.site(i);
    put<int64_t>(os, t.rank());
    for (long k = 0; k < t.rank(); ++k) put<int64_t>(os, t.dim(k));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(sizeof(double)) * t.size());
  }
  if (!os) throw std::runtime_error("save_mps: write failed for " + path);
}

MpsState load_mps(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_mps: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("load_mps: bad magic in " + path);
  const auto version = get<uint32_t>(is);
  if (version != kVersion)
    throw std::runtime_error("load_mps: unsupported version " + std::to_string(version));

  const auto n = get<int64_t>(is);
  if (n < 1 || n > (1 << 20)) throw std::runtime_error("load_mps: implausible site count");
  const double log_norm = get<double>(is);
  const auto center = get<int64_t>(is);

  std::vector<Tensor> sites;
  sites.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    const auto rank = get<int64_t>(is);
    if (rank != 3) throw std::runtime_error("load_mps: site tensor must be rank 3");
    std::vector<long> dims(3);
    for (auto& d : dims) {
      d = static_cast<long>(get<int64_t>(is));
      if (d < 1 || d > (1 << 20)) throw std::runtime_error("load_mps: implausible dimension");
    }
    Tensor t(dims);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(sizeof(double)) * t.size());
    if (!is) throw std::runtime_error("load_mps: truncated file");
    sites.push_back(std::move(t));
  }

  MpsState s(std::move(sites), log_norm);
  if (center >= 0) {
    if (center >= n) throw std::runtime_error("load_mps: center out of range");
    s.assume_center(center);  // tensors were saved in canonical form
  }
  return s;
}

}  // namespace choimps
