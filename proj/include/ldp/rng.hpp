#pragma once

#include <cmath>
#include <cstdint>

namespace ldp {

// Philox4x32-10 counter-based generator. Streams are keyed by
// (seed, stream id), so per-path draws are independent of scheduling and
// worker count.
class PhiloxStream {
 public:
  PhiloxStream(uint64_t seed, uint64_t stream)
      : key0_(static_cast<uint32_t>(seed)),
        key1_(static_cast<uint32_t>(seed >> 32)),
        ctr2_(static_cast<uint32_t>(stream)),
        ctr3_(static_cast<uint32_t>(stream >> 32)) {}

  // Uniform on (0, 1), 53-bit resolution, never exactly 0.
  double uniform() {
    if (have_ == 0) refill();
    const uint32_t hi = out_[--have_];
    const uint32_t lo = out_[--have_];
    const uint64_t bits = ((static_cast<uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; fully deterministic.
  double normal() {
    if (have_normal_) {
      have_normal_ = false;
      return cached_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(phi);
    have_normal_ = true;
    return r * std::cos(phi);
  }

 private:
  static void round(uint32_t& c0, uint32_t& c1, uint32_t& c2, uint32_t& c3,
                    uint32_t k0, uint32_t k1) {
    const uint64_t p0 = 0xD2511F53ull * c0;
    const uint64_t p1 = 0xCD9E8D57ull * c2;
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    const uint32_t lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    const uint32_t lo1 = static_cast<uint32_t>(p1);
    const uint32_t n0 = hi1 ^ c1 ^ k0;
    const uint32_t n1 = lo1;
    const uint32_t n2 = hi0 ^ c3 ^ k1;
    const uint32_t n3 = lo0;
    c0 = n0; c1 = n1; c2 = n2; c3 = n3;
  }

  void refill() {
    uint32_t c0 = static_cast<uint32_t>(block_);
    uint32_t c1 = static_cast<uint32_t>(block_ >> 32);
    uint32_t c2 = ctr2_;
    uint32_t c3 = ctr3_;
    uint32_t k0 = key0_;
    uint32_t k1 = key1_;
    for (int i = 0; i < 10; ++i) {
      round(c0, c1, c2, c3, k0, k1);
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out_[0] = c0; out_[1] = c1; out_[2] = c2; out_[3] = c3;
    have_ = 4;
    ++block_;
  }

  uint32_t key0_, key1_;
  uint32_t ctr2_, ctr3_;
  uint64_t block_ = 0;
  uint32_t out_[4] = {0, 0, 0, 0};
  int have_ = 0;
  bool have_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace ldp
