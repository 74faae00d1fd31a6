#ifndef PERP_RNG_HPP
#define PERP_RNG_HPP

#include <array>
#include <cstdint>

namespace perp {

/// splitmix64 finalizer; bijective 64-bit mix used for sub-key derivation.
inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

/// Philox 4x64 counter-based generator, 10 rounds.
///
/// A keyed bijection of a 256-bit counter. Distinct keys give independent
/// streams, which is what makes replica-parallel simulation reproducible:
/// every (seed, replica, stream) triple owns a private generator and the
/// merge order of results cannot affect the draws.
class Philox4x64 {
 public:
  using result_type = std::uint64_t;

  Philox4x64() : Philox4x64(0, 0) {}
  Philox4x64(std::uint64_t key0, std::uint64_t key1) : key_{key0, key1} {}

  /// One application of the 10-round bijection.
  static std::array<std::uint64_t, 4> block(std::array<std::uint64_t, 4> ctr,
                                            std::array<std::uint64_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      const auto p0 = mulhilo(kMult0, ctr[0]);
      const auto p1 = mulhilo(kMult1, ctr[2]);
      ctr = {p1.hi ^ ctr[1] ^ key[0], p1.lo, p0.hi ^ ctr[3] ^ key[1], p0.lo};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

  std::uint64_t next_u64() {
    if (pos_ == 4) {
      increment_counter();
      buf_ = block(counter_, key_);
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~0ULL; }
  std::uint64_t operator()() { return next_u64(); }

 private:
  struct HiLo {
    std::uint64_t hi;
    std::uint64_t lo;
  };

  static HiLo mulhilo(std::uint64_t a, std::uint64_t b) {
    const unsigned __int128 p =
        static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
    return {static_cast<std::uint64_t>(p >> 64), static_cast<std::uint64_t>(p)};
  }

  void increment_counter() {
    for (int i = 0; i < 4; ++i) {
      if (++counter_[i] != 0) break;
    }
  }

  static constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ULL;
  static constexpr std::uint64_t kMult1 = 0xCA5A826395121157ULL;
  static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_{0, 0, 0, 0};
  std::array<std::uint64_t, 4> buf_{};
  int pos_ = 4;
};

/// Logical sub-streams of one experiment. Each consumer owns a stream so
/// that changing, say, how the initial value is drawn cannot shift the
/// draws used by the path itself.
enum class Stream : std::uint64_t {
  path = 0,
  stationary_init = 1,
  stationary_sample = 2,
  conditional = 3,
};

/// Mixed sub-key for a (replica, stream) pair. The pre-mix value is
/// injective for stream < 2^62 / replica < 2^32, and mix64 is bijective.
inline std::uint64_t derive_subkey(std::uint64_t replica, Stream stream) {
  const std::uint64_t tag =
      static_cast<std::uint64_t>(stream) * 0x9E3779B97F4A7C15ULL + replica;
  return mix64(tag);
}

/// Generator for one (seed, replica, stream) triple. key0 carries the user
/// seed verbatim, key1 the derived sub-key.
inline Philox4x64 replica_rng(std::uint64_t seed, std::uint64_t replica,
                              Stream stream) {
  return Philox4x64(seed, derive_subkey(replica, stream));
}

}  // namespace perp

#endif  // PERP_RNG_HPP
