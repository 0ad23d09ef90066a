#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace bbm {

// Purpose tags for stream derivation. Every random draw in the toolkit comes
// from a stream keyed by (master seed, object id, purpose), so results do not
// depend on the order in which objects are processed.
enum class Purpose : std::uint32_t {
  kLifetime = 1,
  kMotion = 2,
  kCrossing = 3,
  kReplica = 4,
  kGamma = 5,
  kProposal = 6,
  kBirths = 7,
  kPoisson = 8,
  kResample = 9,
  kPilot = 10,
  kInner = 11,
  kAux = 12,
};

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }
};

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Derive a child seed; used for replica-level and sub-experiment seeds.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, Purpose tag) {
  return mix64(mix64(seed ^ (static_cast<std::uint64_t>(tag) << 56)) + index);
}

// A deterministic stream of variates for one (seed, id, purpose) triple.
// The state is a 32-bit block counter; each block yields two uniforms.
class Stream {
 public:
  Stream() = default;
  Stream(std::uint64_t seed, std::uint64_t id, Purpose tag, std::uint32_t counter = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        id_(id),
        tag_(static_cast<std::uint32_t>(tag)),
        counter_(counter) {}

  std::uint32_t counter() const { return counter_; }

  // Two uniforms in (0, 1) from one block.
  std::array<double, 2> uniform_pair() {
    const auto out = Philox4x32::block(
        {counter_++, tag_, static_cast<std::uint32_t>(id_), static_cast<std::uint32_t>(id_ >> 32)},
        key_);
    const std::uint64_t a = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    const std::uint64_t b = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    return {to_unit(a), to_unit(b)};
  }

  double uniform() {
    if (has_spare_u_) {
      has_spare_u_ = false;
      return spare_u_;
    }
    const auto u = uniform_pair();
    spare_u_ = u[1];
    has_spare_u_ = true;
    return u[0];
  }

  double normal() {
    if (has_spare_n_) {
      has_spare_n_ = false;
      return spare_n_;
    }
    const auto u = uniform_pair();
    const double r = std::sqrt(-2.0 * std::log(u[0]));
    const double a = 2.0 * std::numbers::pi * u[1];
    spare_n_ = r * std::sin(a);
    has_spare_n_ = true;
    return r * std::cos(a);
  }

  double exponential(double rate = 1.0) { return -std::log(uniform()) / rate; }

  // Knuth's product method; large means are split into chunks of 30.
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::uint64_t total = 0;
    // Split large means so exp(-chunk) never underflows.
    while (mean > 30.0) {
      total += poisson_small(30.0);
      mean -= 30.0;
    }
    return total + poisson_small(mean);
  }

  // Geometric skips between successes; cost is proportional to n * p, so this
  // is meant for rare events.
  std::uint64_t binomial(std::uint64_t n, double p) {
    if (p <= 0.0 || n == 0) return 0;
    if (p >= 1.0) return n;
    const double lq = std::log1p(-p);
    std::uint64_t k = 0;
    double pos = 0.0;
    const auto limit = static_cast<double>(n);
    while (true) {
      pos += std::floor(std::log(uniform()) / lq) + 1.0;
      if (pos > limit) return k;
      ++k;
    }
  }

  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  static double to_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t poisson_small(double mean) {
    const double limit = std::exp(-mean);
    double prod = uniform();
    std::uint64_t k = 0;
    while (prod > limit) {
      prod *= uniform();
      ++k;
    }
    return k;
  }

  Philox4x32::Key key_{};
  std::uint64_t id_ = 0;
  std::uint32_t tag_ = 0;
  std::uint32_t counter_ = 0;
  double spare_u_ = 0.0;
  double spare_n_ = 0.0;
  bool has_spare_u_ = false;
  bool has_spare_n_ = false;
};

}  // namespace bbm
