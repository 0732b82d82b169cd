#pragma once

#include <array>
#include <cstdint>

namespace bsvie {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// Stateless: every (counter, key) pair maps to an independent 128-bit block,
// so draws indexed by (path, interval, block) are reproducible for a fixed
// seed no matter how the work is scheduled across threads.
struct Philox4x32 {
    static std::array<std::uint32_t, 4> block(const std::array<std::uint32_t, 4>& counter,
                                              const std::array<std::uint32_t, 2>& key);
};

// Standard normals attached to a (path, interval) cell. Uses one Philox
// block per pair of variates via Box-Muller.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : seed_(seed) {}

    // Fills out[0..count) with N(0,1) draws for the given cell.
    void fill(std::uint64_t path, std::uint32_t interval, int count, double* out) const;

private:
    std::uint64_t seed_;
};

}  // namespace bsvie
