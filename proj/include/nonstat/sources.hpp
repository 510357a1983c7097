#pragma once

#include "nonstat/core.hpp"
#include "nonstat/rng.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace nonstat {

enum class PriorKind { regular, uniform, ptw, lin };

std::string to_string(PriorKind kind);
PriorKind parse_prior_kind(const std::string &name);

/* A distribution over temporal partitions of 1..n.
   regular: fixed period; uniform: i.i.d. Uniform{1..max_len} segment
   lengths; ptw: the partition tree prior of depth d (n = 2^d); lin: the
   linear transition diagram prior. */
struct PriorSpec {
    PriorKind kind = PriorKind::ptw;
    std::size_t n = 1;
    std::size_t period = 1;
    std::size_t max_len = 1;
    unsigned depth = 0;

    static PriorSpec regular(std::size_t n, std::size_t period);
    static PriorSpec uniform(std::size_t n, std::size_t max_len);
    static PriorSpec ptw(unsigned depth);
    static PriorSpec lin(std::size_t n);

    // throws std::invalid_argument when the kind-specific invariant fails
    void validate() const;

    // compact label, e.g. "ptw:5", "regular:8", "uniform:32", "lin"
    std::string label() const;
};

/* One Bernoulli bias per segment of a temporal partition. */
class PiecewiseSource {
public:
    PiecewiseSource() = default;
    PiecewiseSource(TemporalPartition partition, std::vector<double> biases);

    const TemporalPartition &partition() const { return m_partition; }
    const std::vector<double> &biases() const { return m_biases; }
    std::size_t length() const { return m_partition.length(); }

    // theta_{f(t)} for 1-based t
    double bias_at(std::size_t t) const;

private:
    TemporalPartition m_partition;
    std::vector<double> m_biases;
};

TemporalPartition sample_ptw_partition(unsigned depth, RngStream &rng);
TemporalPartition sample_lin_partition(std::size_t n, RngStream &rng);
TemporalPartition regular_partition(std::size_t n, std::size_t period);
TemporalPartition sample_uniform_partition(std::size_t n, std::size_t max_len, RngStream &rng);

// dispatch on the prior kind
TemporalPartition sample_partition(const PriorSpec &prior, RngStream &rng);

// independent Beta(alpha, beta) bias per segment; exact 0 or 1 draws are redrawn
PiecewiseSource attach_biases(const TemporalPartition &partition, double alpha, double beta, RngStream &rng);

BinarySequence sample_sequence(const PiecewiseSource &source, RngStream &rng);

inline constexpr double kBetaPrior = 0.5;

struct SampledSequence {
    std::size_t seq_id = 0;
    PiecewiseSource source;
    BinarySequence symbols;
};

/* Draws partition, biases and symbols for sequence seq_id from the single
   stream split_stream(root_seed, seq_id), in that order. */
SampledSequence sample_from_prior(const PriorSpec &prior, std::uint64_t root_seed, std::size_t seq_id,
                                  double alpha = kBetaPrior, double beta = kBetaPrior);

// CSV: seq_id,n,symbols,num_segments,segment_ends,biases
void write_sequence_csv_header(std::ostream &os);
void write_sequence_csv_row(std::ostream &os, const SampledSequence &s);

}  // namespace nonstat
