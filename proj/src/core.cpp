#include "nonstat/core.hpp"

#include <algorithm>
#include <sstream>

namespace nonstat {

double logspace_sum(const std::vector<double> &values) {
    if (values.empty()) return kNegInf;
    double peak = *std::max_element(values.begin(), values.end());
    if (peak == kNegInf) return kNegInf;
    double acc = 0.0;
    for (double v : values) acc += std::exp(v - peak);
    return peak + std::log(acc);
}

BinarySequence::BinarySequence(std::vector<bit_t> symbols) : m_symbols(std::move(symbols)) {
    for (bit_t b : m_symbols) {
        if (b > 1) throw std::invalid_argument("BinarySequence: symbols must be 0 or 1");
    }
}

BinarySequence BinarySequence::parse(std::string_view text) {
    std::vector<bit_t> symbols;
    symbols.reserve(text.size());
    for (char c : text) {
        if (c != '0' && c != '1')
            throw std::invalid_argument("BinarySequence: unexpected character '" + std::string(1, c) + "'");
        symbols.push_back(static_cast<bit_t>(c - '0'));
    }
    return BinarySequence(std::move(symbols));
}

bit_t BinarySequence::at(std::size_t t) const {
    if (t == 0 || t > m_symbols.size()) throw std::out_of_range("BinarySequence: time index out of range");
    return m_symbols[t - 1];
}

void BinarySequence::push_back(bit_t b) {
    if (b > 1) throw std::invalid_argument("BinarySequence: symbols must be 0 or 1");
    m_symbols.push_back(b);
}

BinarySequence BinarySequence::slice(std::size_t a, std::size_t b) const {
    if (a == 0 || b < a || b > m_symbols.size())
        throw std::out_of_range("BinarySequence: invalid slice");
    return BinarySequence(std::vector<bit_t>(m_symbols.begin() + (a - 1), m_symbols.begin() + b));
}

std::size_t BinarySequence::count_ones() const {
    return static_cast<std::size_t>(std::count(m_symbols.begin(), m_symbols.end(), bit_t{1}));
}

std::string BinarySequence::to_string() const {
    std::string s(m_symbols.size(), '0');
    for (std::size_t i = 0; i < m_symbols.size(); ++i) s[i] = static_cast<char>('0' + m_symbols[i]);
    return s;
}

// FNV-1a over the symbols, with the length mixed in
std::uint64_t BinarySequence::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (bit_t b : m_symbols) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    h ^= m_symbols.size();
    h *= 0x100000001b3ULL;
    return h;
}

TemporalPartition::TemporalPartition(std::vector<Segment> segments, std::size_t n)
    : m_segments(std::move(segments)), m_n(n) {
    std::string err = check(m_segments, m_n);
    if (!err.empty()) throw std::invalid_argument("TemporalPartition: " + err);
}

TemporalPartition TemporalPartition::single(std::size_t n) {
    if (n == 0) return TemporalPartition({}, 0);
    return TemporalPartition({Segment{1, n}}, n);
}

TemporalPartition TemporalPartition::from_ends(const std::vector<std::size_t> &ends) {
    std::vector<Segment> segments;
    segments.reserve(ends.size());
    std::size_t start = 1;
    for (std::size_t b : ends) {
        segments.push_back(Segment{start, b});
        start = b + 1;
    }
    std::size_t n = ends.empty() ? 0 : ends.back();
    return TemporalPartition(std::move(segments), n);
}

std::string TemporalPartition::check(const std::vector<Segment> &segments, std::size_t n) {
    if (segments.empty()) return n == 0 ? "" : "no segments for non-empty range";
    std::size_t expected_start = 1;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const Segment &s = segments[i];
        if (s.a < 1) return "segment " + std::to_string(i) + " starts before 1";
        if (s.a > s.b) return "segment " + std::to_string(i) + " has a > b";
        if (s.a != expected_start)
            return "segment " + std::to_string(i) + " starts at " + std::to_string(s.a) + ", expected " +
                   std::to_string(expected_start);
        expected_start = s.b + 1;
    }
    if (segments.back().b != n)
        return "last segment ends at " + std::to_string(segments.back().b) + ", expected " + std::to_string(n);
    return "";
}

std::size_t TemporalPartition::segment_index(std::size_t t) const {
    if (t == 0 || t > m_n) throw std::out_of_range("TemporalPartition: time index out of range");
    auto it = std::lower_bound(m_segments.begin(), m_segments.end(), t,
                               [](const Segment &s, std::size_t v) { return s.b < v; });
    return static_cast<std::size_t>(it - m_segments.begin());
}

std::vector<std::size_t> TemporalPartition::boundaries() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i + 1 < m_segments.size(); ++i) out.push_back(m_segments[i].b);
    return out;
}

std::vector<std::size_t> TemporalPartition::ends() const {
    std::vector<std::size_t> out;
    out.reserve(m_segments.size());
    for (const Segment &s : m_segments) out.push_back(s.b);
    return out;
}

std::string to_string(const TemporalPartition &partition) {
    std::ostringstream oss;
    oss << "{";
    for (std::size_t i = 0; i < partition.num_segments(); ++i) {
        if (i) oss << ",";
        oss << "(" << partition.segment(i).a << "," << partition.segment(i).b << ")";
    }
    oss << "}";
    return oss.str();
}

}  // namespace nonstat
