#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>

namespace linnash {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// FNV-1a; stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace detail

//! Where a random stream comes from: (master seed, replica index, purpose).
struct SeedLineage {
  std::uint64_t master = 0;
  std::uint64_t replica = 0;
  std::string purpose;

  std::uint64_t derived_seed() const {
    std::uint64_t h = detail::splitmix64(master);
    h = detail::splitmix64(h ^ detail::splitmix64(replica + 0x632BE59BD9B4E019ULL));
    return detail::splitmix64(h ^ detail::fnv1a(purpose));
  }

  std::string to_string() const {
    return std::to_string(master) + "/" + std::to_string(replica) + "/" + purpose;
  }
};

//! A reproducible random stream keyed by its lineage. Streams with different
//! lineages are seeded through a 64-bit mixer, so there is no sequential
//! coupling between replicas. Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master, std::uint64_t replica, std::string purpose)
      : RngStream(SeedLineage{master, replica, std::move(purpose)}) {}

  explicit RngStream(SeedLineage lineage)
      : lineage_(std::move(lineage)), engine_(lineage_.derived_seed()) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return engine_(); }

  //! Independent child stream for a sub-purpose.
  RngStream child(std::string_view purpose) const {
    return RngStream(SeedLineage{lineage_.master, lineage_.replica,
                                 lineage_.purpose + "/" + std::string(purpose)});
  }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool fair_coin() { return (engine_() >> 63) != 0; }
  double normal() { return normal_(engine_); }

  const SeedLineage& lineage() const noexcept { return lineage_; }

 private:
  SeedLineage lineage_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace linnash
