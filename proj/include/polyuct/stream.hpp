#pragma once

#include <cstdint>
#include <initializer_list>

namespace polyuct {

namespace detail {
// 64-bit finalizer with full avalanche (the SplitMix64 mixer).
inline std::uint64_t fmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
}  // namespace detail

/// Derives a stream key from a master seed and a path of identifiers
/// (state hash, action, visit index, replica, ...). Draws on distinct paths
/// are decorrelated and reproducible regardless of the order in which the
/// paths are visited.
inline std::uint64_t derive_key(std::uint64_t master,
                                std::initializer_list<std::uint64_t> path) {
  std::uint64_t k = detail::fmix64(master + detail::kGamma);
  for (std::uint64_t id : path) {
    k = detail::fmix64(k ^ detail::fmix64(id + 0x632be59bd9b4e019ULL));
  }
  return k;
}

/// Counter-based stream: the key selects the stream, the counter walks it.
/// No state beyond the counter, so replicas can be re-run independently.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() {
    state_ += detail::kGamma;
    return detail::fmix64(state_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [-w, w].
  double next_symmetric(double w) { return w * (2.0 * next_unit() - 1.0); }

 private:
  std::uint64_t state_;
};

/// Single uniform draw at a (key, counter) coordinate.
inline double unit_draw(std::uint64_t key, std::uint64_t counter) {
  return static_cast<double>(
             detail::fmix64(key + counter * detail::kGamma + detail::kGamma) >> 11) *
         0x1.0p-53;
}

}  // namespace polyuct
