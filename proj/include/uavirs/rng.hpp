#pragma once

#include <complex>
#include <cstdint>

namespace uavirs::rng {

/// SplitMix64 output function.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based random stream keyed by (seed, stream_id).
///
/// Draws depend only on the key and the number of values consumed, never on
/// which thread consumes them, so per-sample substreams reproduce bit-exactly
/// under any parallel schedule.
class Substream {
  public:
    Substream(std::uint64_t seed, std::uint64_t stream_id) {
        state_ = mix64(seed + 0x9e3779b97f4a7c15ULL) ^
                 mix64(stream_id + 0xd1b54a32d192ed03ULL);
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    /// Uniform in [0, 1).
    double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; two values per transform.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // 1 - u in (0, 1] keeps the log argument away from zero.
        const double u1 = 1.0 - uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(phi);
        have_spare_ = true;
        return r * std::cos(phi);
    }

    /// Circularly-symmetric complex normal with unit total variance.
    std::complex<double> complex_normal() {
        const double u1 = 1.0 - uniform01();
        const double u2 = uniform01();
        // Re and Im each carry variance 1/2.
        const double r = std::sqrt(-std::log(u1));
        const double phi = 6.283185307179586476925286766559 * u2;
        return {r * std::cos(phi), r * std::sin(phi)};
    }

  private:
    std::uint64_t state_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace uavirs::rng
