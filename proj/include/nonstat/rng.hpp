#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace nonstat {

/* Philox4x32-10 (Salmon, Moraes, Dror & Shaw, SC'11), used as a
   counter-based generator.

   key     = root_seed split into two 32-bit words (low word first)
   counter = (stream_id low, stream_id high, block low, block high)

   Each block yields four 32-bit words which are consumed in order; a
   64-bit draw joins two consecutive words (first word = low half). All
   derived variates (uniforms, Bernoulli, Gamma, Beta, normals) are computed
   here from those words with fixed algorithms, so a given
   (root_seed, stream_id) produces the same values on every platform. */
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t root_seed, std::uint64_t stream_id);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return next_u64(); }

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // uniform on [0, 1) with 53 random bits
    double uniform();
    // uniform on (0, 1)
    double uniform_open();
    // uniform integer in [lo, hi], unbiased (rejection on 64-bit draws)
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);
    bool bernoulli(double p);
    // standard normal via the Marsaglia polar method
    double normal();
    // Gamma(shape, 1): Marsaglia-Tsang, with the U^(1/shape) boost for shape < 1
    double gamma(double shape);
    // Beta(alpha, beta) as X/(X+Y) with X~Gamma(alpha), Y~Gamma(beta)
    double beta(double alpha, double beta);

    std::uint64_t root_seed() const { return m_root_seed; }
    std::uint64_t stream_id() const { return m_stream_id; }

    // raw Philox4x32-10 block function
    static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                               std::array<std::uint32_t, 2> key);

private:
    void refill();

    std::uint64_t m_root_seed;
    std::uint64_t m_stream_id;
    std::uint64_t m_block = 0;
    std::array<std::uint32_t, 4> m_buffer{};
    unsigned m_used = 4;
    bool m_has_spare_normal = false;
    double m_spare_normal = 0.0;
};

inline RngStream split_stream(std::uint64_t root_seed, std::uint64_t stream_id) {
    return RngStream(root_seed, stream_id);
}

}  // namespace nonstat
