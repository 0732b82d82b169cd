#include "bsvie/rng.hpp"

#include <cmath>

namespace bsvie {

namespace {
constexpr std::uint32_t kWeylA = 0x9E3779B9u;
constexpr std::uint32_t kWeylB = 0xBB67AE85u;
constexpr std::uint32_t kMulA = 0xD2511F53u;
constexpr std::uint32_t kMulB = 0xCD9E8D57u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline std::array<std::uint32_t, 4> round_once(const std::array<std::uint32_t, 4>& c,
                                               const std::array<std::uint32_t, 2>& k) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMulA, c[0], hi0, lo0);
    mulhilo(kMulB, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline double u64_to_unit(std::uint64_t x) {
    // (0,1): 53 mantissa bits plus a half-ulp offset keeps log() finite.
    return static_cast<double>(x >> 11) * 0x1.0p-53 + 0x1.0p-54;
}
}  // namespace

std::array<std::uint32_t, 4> Philox4x32::block(const std::array<std::uint32_t, 4>& counter,
                                               const std::array<std::uint32_t, 2>& key) {
    std::array<std::uint32_t, 4> c = counter;
    std::array<std::uint32_t, 2> k = key;
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            k[0] += kWeylA;
            k[1] += kWeylB;
        }
        c = round_once(c, k);
    }
    return c;
}

void NormalStream::fill(std::uint64_t path, std::uint32_t interval, int count, double* out) const {
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                              static_cast<std::uint32_t>(seed_ >> 32)};
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    int produced = 0;
    std::uint32_t blk = 0;
    while (produced < count) {
        const std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(path),
                                                  static_cast<std::uint32_t>(path >> 32), interval, blk++};
        const auto w = Philox4x32::block(ctr, key);
        const double u = u64_to_unit((static_cast<std::uint64_t>(w[0]) << 32) | w[1]);
        const double v = u64_to_unit((static_cast<std::uint64_t>(w[2]) << 32) | w[3]);
        const double r = std::sqrt(-2.0 * std::log(u));
        out[produced++] = r * std::cos(kTwoPi * v);
        if (produced < count) out[produced++] = r * std::sin(kTwoPi * v);
    }
}

}  // namespace bsvie
