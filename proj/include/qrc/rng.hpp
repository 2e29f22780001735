#pragma once

#include <cstdint>
#include <random>

namespace qrc {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

// One random stream per simulation run / thread. Streams are derived from a
// master seed and a run index, so a fan-out over runs is deterministic no
// matter how the runs are scheduled.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : eng_(seed) {}

    static RngStream derive(std::uint64_t master_seed, std::uint64_t run_index) {
        const std::uint64_t s =
            detail::splitmix64(detail::splitmix64(master_seed) ^ (run_index + 1));
        return RngStream(s);
    }

    // Uniform on (0,1), endpoints excluded.
    double uniform() {
        const std::uint64_t r = eng_();
        return (static_cast<double>(r >> 11) + 0.5) * 0x1p-53;
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t raw() { return eng_(); }

  private:
    std::mt19937_64 eng_;
};

}  // namespace qrc
