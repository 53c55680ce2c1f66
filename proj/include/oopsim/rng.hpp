#pragma once
#include <cstdint>
#include <initializer_list>

#include "oopsim/math.hpp"

namespace oopsim {

// Counter-based random streams. Every draw is a pure function of
// (seed, stream ids..., counter), so simulations are reproducible for a
// fixed seed no matter how work is split across threads, and the same
// stream can be re-opened anywhere (common random numbers across
// parameter values fall out for free).

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Stream ids: one namespace per draw purpose so adding or skipping draws
// of one kind never shifts another kind's sequence.
enum class Stream : std::uint64_t {
    Population = 1,
    Omega = 2,
    Shock = 3,
    Signal = 4,
    Delay = 5,
    Learning = 6,
    PriorBeta = 7,
    Bootstrap = 8,
    Placebo = 9,
};

class RngStream {
  public:
    RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
        key_ = mix64(seed ^ 0x6a09e667f3bcc908ull);
        for (std::uint64_t id : ids) key_ = mix64(key_ ^ mix64(id + 0xbb67ae8584caa73bull));
    }

    std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++ + 0x3c6ef372fe94f82bull)); }

    // uniform on the open interval (0,1)
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double next_normal() { return inv_normal_cdf(next_uniform()); }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

inline std::uint64_t stream_id(Stream s) { return static_cast<std::uint64_t>(s); }

}  // namespace oopsim
