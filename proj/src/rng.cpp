#include "nonstat/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace nonstat {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t &hi, std::uint32_t &lo) {
    std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

}  // namespace

RngStream::RngStream(std::uint64_t root_seed, std::uint64_t stream_id)
    : m_root_seed(root_seed), m_stream_id(stream_id) {}

std::array<std::uint32_t, 4> RngStream::philox(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kPhiloxW0;
            key[1] += kPhiloxW1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

void RngStream::refill() {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(m_stream_id), static_cast<std::uint32_t>(m_stream_id >> 32),
        static_cast<std::uint32_t>(m_block), static_cast<std::uint32_t>(m_block >> 32)};
    std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(m_root_seed),
                                        static_cast<std::uint32_t>(m_root_seed >> 32)};
    m_buffer = philox(ctr, key);
    ++m_block;
    m_used = 0;
}

std::uint32_t RngStream::next_u32() {
    if (m_used == 4) refill();
    return m_buffer[m_used++];
}

std::uint64_t RngStream::next_u64() {
    std::uint64_t lo = next_u32();
    std::uint64_t hi = next_u32();
    return lo | (hi << 32);
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::uniform_open() {
    for (;;) {
        double u = uniform();
        if (u > 0.0) return u;
    }
}

std::uint64_t RngStream::uniform_int(std::uint64_t lo, std::uint64_t hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    std::uint64_t span = hi - lo;
    if (span == max()) return next_u64();
    std::uint64_t range = span + 1;
    // largest multiple of range representable, minus one
    std::uint64_t limit = max() - (max() % range + 1) % range;
    for (;;) {
        std::uint64_t v = next_u64();
        if (v <= limit) return lo + v % range;
    }
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

double RngStream::normal() {
    if (m_has_spare_normal) {
        m_has_spare_normal = false;
        return m_spare_normal;
    }
    for (;;) {
        double u = 2.0 * uniform() - 1.0;
        double v = 2.0 * uniform() - 1.0;
        double s = u * u + v * v;
        if (s >= 1.0 || s == 0.0) continue;
        double scale = std::sqrt(-2.0 * std::log(s) / s);
        m_spare_normal = v * scale;
        m_has_spare_normal = true;
        return u * scale;
    }
}

double RngStream::gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
        double g = gamma(shape + 1.0);
        return g * std::pow(uniform_open(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        double u = uniform_open();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double RngStream::beta(double alpha, double beta_) {
    if (!(alpha > 0.0) || !(beta_ > 0.0)) throw std::invalid_argument("beta: parameters must be positive");
    for (;;) {
        double x = gamma(alpha);
        double y = gamma(beta_);
        if (x + y > 0.0) return x / (x + y);
    }
}

}  // namespace nonstat
