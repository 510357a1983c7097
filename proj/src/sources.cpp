#include "nonstat/sources.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>
#include <utility>

namespace nonstat {

std::string to_string(PriorKind kind) {
    switch (kind) {
        case PriorKind::regular: return "regular";
        case PriorKind::uniform: return "uniform";
        case PriorKind::ptw: return "ptw";
        case PriorKind::lin: return "lin";
    }
    return "?";
}

PriorKind parse_prior_kind(const std::string &name) {
    if (name == "regular") return PriorKind::regular;
    if (name == "uniform") return PriorKind::uniform;
    if (name == "ptw") return PriorKind::ptw;
    if (name == "lin") return PriorKind::lin;
    throw std::invalid_argument("unknown prior '" + name + "'");
}

PriorSpec PriorSpec::regular(std::size_t n, std::size_t period) {
    PriorSpec p;
    p.kind = PriorKind::regular;
    p.n = n;
    p.period = period;
    p.validate();
    return p;
}

PriorSpec PriorSpec::uniform(std::size_t n, std::size_t max_len) {
    PriorSpec p;
    p.kind = PriorKind::uniform;
    p.n = n;
    p.max_len = max_len;
    p.validate();
    return p;
}

PriorSpec PriorSpec::ptw(unsigned depth) {
    if (depth > 40) throw std::invalid_argument("ptw prior: depth too large");
    PriorSpec p;
    p.kind = PriorKind::ptw;
    p.depth = depth;
    p.n = std::size_t{1} << depth;
    return p;
}

PriorSpec PriorSpec::lin(std::size_t n) {
    PriorSpec p;
    p.kind = PriorKind::lin;
    p.n = n;
    p.validate();
    return p;
}

void PriorSpec::validate() const {
    if (n < 1) throw std::invalid_argument("prior: length must be at least 1");
    switch (kind) {
        case PriorKind::regular:
            if (period < 1 || period > n)
                throw std::invalid_argument("regular prior: period must satisfy 1 <= period <= length");
            break;
        case PriorKind::uniform:
            if (max_len < 1) throw std::invalid_argument("uniform prior: max segment length must be >= 1");
            break;
        case PriorKind::ptw:
            if (depth > 40 || n != (std::size_t{1} << depth))
                throw std::invalid_argument("ptw prior: length must equal 2^depth");
            break;
        case PriorKind::lin: break;
    }
}

std::string PriorSpec::label() const {
    switch (kind) {
        case PriorKind::regular: return "regular:" + std::to_string(period);
        case PriorKind::uniform: return "uniform:" + std::to_string(max_len);
        case PriorKind::ptw: return "ptw:" + std::to_string(depth);
        case PriorKind::lin: return "lin";
    }
    return "?";
}

PiecewiseSource::PiecewiseSource(TemporalPartition partition, std::vector<double> biases)
    : m_partition(std::move(partition)), m_biases(std::move(biases)) {
    if (m_biases.size() != m_partition.num_segments())
        throw std::invalid_argument("PiecewiseSource: need exactly one bias per segment");
    for (double theta : m_biases) {
        if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("PiecewiseSource: bias outside [0,1]");
    }
}

double PiecewiseSource::bias_at(std::size_t t) const { return m_biases[m_partition.segment_index(t)]; }

TemporalPartition sample_ptw_partition(unsigned depth, RngStream &rng) {
    if (depth > 40) throw std::invalid_argument("sample_ptw_partition: depth too large");

    // explicit stack of (offset, depth) nodes; the right child is pushed first
    // so segments come out in time order
    struct Node {
        std::size_t offset;
        unsigned depth;
    };
    std::vector<Node> stack{{0, depth}};
    std::vector<Segment> segments;
    while (!stack.empty()) {
        Node node = stack.back();
        stack.pop_back();
        if (node.depth == 0) {
            segments.push_back({node.offset + 1, node.offset + 1});
            continue;
        }
        std::size_t half = std::size_t{1} << (node.depth - 1);
        if (!rng.bernoulli(0.5)) {
            segments.push_back({node.offset + 1, node.offset + 2 * half});
        } else {
            stack.push_back({node.offset + half, node.depth - 1});
            stack.push_back({node.offset, node.depth - 1});
        }
    }
    return TemporalPartition(std::move(segments), std::size_t{1} << depth);
}

TemporalPartition sample_lin_partition(std::size_t n, RngStream &rng) {
    if (n < 1) throw std::invalid_argument("sample_lin_partition: n must be >= 1");
    std::vector<Segment> segments;
    std::size_t t = 1, start = 1;
    while (t < n) {
        double switch_prob = 0.5 / static_cast<double>(t - start + 1);
        if (rng.bernoulli(switch_prob)) {
            segments.push_back({start, t});
            start = t + 1;
        }
        ++t;
    }
    segments.push_back({start, t});
    return TemporalPartition(std::move(segments), n);
}

TemporalPartition regular_partition(std::size_t n, std::size_t period) {
    if (period < 1 || period > n)
        throw std::invalid_argument("regular_partition: period must satisfy 1 <= period <= n");
    std::vector<Segment> segments;
    for (std::size_t a = 1; a <= n; a += period) segments.push_back({a, std::min(n, a + period - 1)});
    return TemporalPartition(std::move(segments), n);
}

TemporalPartition sample_uniform_partition(std::size_t n, std::size_t max_len, RngStream &rng) {
    if (n < 1 || max_len < 1) throw std::invalid_argument("sample_uniform_partition: n and max_len must be >= 1");
    std::vector<Segment> segments;
    std::size_t covered = 0;
    while (covered < n) {
        std::size_t len = rng.uniform_int(1, max_len);
        std::size_t b = std::min(n, covered + len);
        segments.push_back({covered + 1, b});
        covered = b;
    }
    return TemporalPartition(std::move(segments), n);
}

TemporalPartition sample_partition(const PriorSpec &prior, RngStream &rng) {
    prior.validate();
    switch (prior.kind) {
        case PriorKind::regular: return regular_partition(prior.n, prior.period);
        case PriorKind::uniform: return sample_uniform_partition(prior.n, prior.max_len, rng);
        case PriorKind::ptw: return sample_ptw_partition(prior.depth, rng);
        case PriorKind::lin: return sample_lin_partition(prior.n, rng);
    }
    throw std::logic_error("sample_partition: unhandled prior");
}

PiecewiseSource attach_biases(const TemporalPartition &partition, double alpha, double beta, RngStream &rng) {
    if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("attach_biases: alpha and beta must be > 0");
    std::vector<double> biases;
    biases.reserve(partition.num_segments());
    for (std::size_t i = 0; i < partition.num_segments(); ++i) {
        double theta;
        do {
            theta = rng.beta(alpha, beta);
        } while (theta <= 0.0 || theta >= 1.0);
        biases.push_back(theta);
    }
    return PiecewiseSource(partition, std::move(biases));
}

BinarySequence sample_sequence(const PiecewiseSource &source, RngStream &rng) {
    std::vector<bit_t> symbols;
    symbols.reserve(source.length());
    const auto &segments = source.partition().segments();
    for (std::size_t i = 0; i < segments.size(); ++i) {
        double theta = source.biases()[i];
        for (std::size_t t = segments[i].a; t <= segments[i].b; ++t)
            symbols.push_back(rng.bernoulli(theta) ? 1 : 0);
    }
    return BinarySequence(std::move(symbols));
}

SampledSequence sample_from_prior(const PriorSpec &prior, std::uint64_t root_seed, std::size_t seq_id,
                                  double alpha, double beta) {
    RngStream rng = split_stream(root_seed, seq_id);
    SampledSequence out;
    out.seq_id = seq_id;
    out.source = attach_biases(sample_partition(prior, rng), alpha, beta, rng);
    out.symbols = sample_sequence(out.source, rng);
    return out;
}

void write_sequence_csv_header(std::ostream &os) {
    os << "seq_id,n,symbols,num_segments,segment_ends,biases\n";
}

void write_sequence_csv_row(std::ostream &os, const SampledSequence &s) {
    std::ostringstream ends, biases;
    biases << std::setprecision(17);
    const auto &part = s.source.partition();
    for (std::size_t i = 0; i < part.num_segments(); ++i) {
        if (i) {
            ends << ';';
            biases << ';';
        }
        ends << part.segment(i).b;
        biases << s.source.biases()[i];
    }
    os << s.seq_id << ',' << s.symbols.size() << ',' << s.symbols.to_string() << ',' << part.num_segments() << ','
       << ends.str() << ',' << biases.str() << '\n';
}

}  // namespace nonstat
