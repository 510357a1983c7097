#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nonstat {

using bit_t = std::uint8_t;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLn2 = 0.693147180559945309417232121458176568;

// Natural-log probability. Values may be -inf (probability zero).
struct LogProb {
    double value = 0.0;

    constexpr LogProb() = default;
    constexpr explicit LogProb(double v) : value(v) {}

    static LogProb zero() { return LogProb(kNegInf); }
    static LogProb one() { return LogProb(0.0); }
    static LogProb from_prob(double p) { return LogProb(std::log(p)); }

    double prob() const { return std::exp(value); }

    friend LogProb operator*(LogProb a, LogProb b) { return LogProb(a.value + b.value); }
    friend LogProb operator/(LogProb a, LogProb b) { return LogProb(a.value - b.value); }
    friend bool operator==(LogProb a, LogProb b) = default;
};

// ln(e^a + e^b) without overflow or underflow.
inline double logspace_add(double a, double b) {
    if (a < b) std::swap(a, b);
    if (a == kNegInf) return kNegInf;
    return a + std::log1p(std::exp(b - a));
}

inline LogProb logspace_add(LogProb a, LogProb b) { return LogProb(logspace_add(a.value, b.value)); }

// ln(sum_i e^{v_i}); -inf for an empty range.
double logspace_sum(const std::vector<double> &values);

inline constexpr double nats_to_bits(double nats) { return nats / kLn2; }
inline constexpr double bits_to_nats(double bits) { return bits * kLn2; }

/* A finite binary string. Public accessors use 1-based time indices
   (x_1 ... x_n); storage is 0-based. */
class BinarySequence {
public:
    BinarySequence() = default;
    explicit BinarySequence(std::vector<bit_t> symbols);

    // parses a string of '0' and '1' characters
    static BinarySequence parse(std::string_view text);

    std::size_t size() const { return m_symbols.size(); }
    bool empty() const { return m_symbols.empty(); }

    // x_t for 1 <= t <= size()
    bit_t at(std::size_t t) const;

    void push_back(bit_t b);

    // x_{a:b}, inclusive and 1-based
    BinarySequence slice(std::size_t a, std::size_t b) const;

    std::size_t count_ones() const;
    std::string to_string() const;
    std::uint64_t hash() const;

    const std::vector<bit_t> &symbols() const { return m_symbols; }

    auto begin() const { return m_symbols.begin(); }
    auto end() const { return m_symbols.end(); }

    friend bool operator==(const BinarySequence &, const BinarySequence &) = default;

private:
    std::vector<bit_t> m_symbols;
};

// closed interval [a, b] of 1-based time indices
struct Segment {
    std::size_t a = 1;
    std::size_t b = 1;

    std::size_t length() const { return b - a + 1; }
    bool contains(std::size_t t) const { return a <= t && t <= b; }

    friend bool operator==(const Segment &, const Segment &) = default;
};

/* Ordered, gap-free, non-overlapping cover of 1..n by segments. The
   constructor validates and throws std::invalid_argument otherwise. */
class TemporalPartition {
public:
    TemporalPartition() = default;
    TemporalPartition(std::vector<Segment> segments, std::size_t n);

    // the partition {(1,n)}
    static TemporalPartition single(std::size_t n);

    // builds a partition from the sorted end indices b_1 < b_2 < ... < b_k = n
    static TemporalPartition from_ends(const std::vector<std::size_t> &ends);

    // empty string when valid, otherwise a description of the first violation
    static std::string check(const std::vector<Segment> &segments, std::size_t n);

    std::size_t length() const { return m_n; }
    std::size_t num_segments() const { return m_segments.size(); }
    std::size_t num_switches() const { return m_segments.empty() ? 0 : m_segments.size() - 1; }
    const std::vector<Segment> &segments() const { return m_segments; }
    const Segment &segment(std::size_t i) const { return m_segments.at(i); }

    // index (0-based) of the segment containing time t
    std::size_t segment_index(std::size_t t) const;

    // the segment end indices b < n, i.e. switching-points after time b
    std::vector<std::size_t> boundaries() const;

    std::vector<std::size_t> ends() const;

    friend bool operator==(const TemporalPartition &, const TemporalPartition &) = default;

private:
    std::vector<Segment> m_segments;
    std::size_t m_n = 0;
};

std::string to_string(const TemporalPartition &partition);

}  // namespace nonstat
