#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace inpaint {

/// splitmix64 mixing step; used to derive independent substreams from a seed.
std::uint64_t mix64(std::uint64_t x);

/// Deterministic random generator with portable distributions.
///
/// std::mt19937_64 itself is fully specified by the standard, but the
/// standard *distributions* are not; every draw here goes through our own
/// bit-to-value mapping so identical seeds give identical streams on any
/// platform or standard library.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n);

    /// uniform integer in [lo, hi] inclusive
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// standard normal via Box-Muller (deterministic draw order)
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool coin() { return (next_u64() & 1u) != 0; }

    /// Derive an independent substream keyed by (this seed, tag, indices).
    Rng fork(std::uint64_t tag, std::uint64_t a = 0, std::uint64_t b = 0) const;

  private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// FNV-1a hash of a string; used to key per-tensor init streams by name.
std::uint64_t fnv1a(const std::string& s);

}  // namespace inpaint
