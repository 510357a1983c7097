#pragma once

#include "nonstat/core.hpp"

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace nonstat {

/* Sequential probability assignment over {0,1}.

   Usage per step: call predict() to obtain Pr(next = 1 | history), then
   update() with the observed symbol. log_marginal() is ln of the
   probability assigned to every symbol consumed since the last reset(). */
class SequentialPredictor {
public:
    virtual ~SequentialPredictor() = default;

    virtual double predict() const = 0;
    virtual void update(bit_t b) = 0;
    virtual LogProb log_marginal() const = 0;
    virtual void reset() = 0;
    virtual std::unique_ptr<SequentialPredictor> clone() const = 0;
    virtual std::string name() const = 0;

    // number of symbols consumed since the last reset
    virtual std::size_t time() const = 0;

    double prob(bit_t b) const {
        double p1 = predict();
        return b ? p1 : 1.0 - p1;
    }
};

// consumes every symbol of x in order
void feed(SequentialPredictor &predictor, const BinarySequence &x);

// ln probability the predictor assigns to x, starting from a reset copy
LogProb log_marginal_of(const SequentialPredictor &predictor, const BinarySequence &x);

// Krichevsky-Trofimov sufficient statistics
struct KtState {
    std::uint64_t zeros = 0;
    std::uint64_t ones = 0;

    std::uint64_t total() const { return zeros + ones; }
    void add(bit_t b) { b ? ++ones : ++zeros; }
};

// (ones + 1/2) / (zeros + ones + 1)
inline double kt_predict(const KtState &s) {
    return (static_cast<double>(s.ones) + 0.5) / (static_cast<double>(s.total()) + 1.0);
}

inline double kt_prob(const KtState &s, bit_t b) {
    double p1 = kt_predict(s);
    return b ? p1 : 1.0 - p1;
}

LogProb kt_log_marginal(const BinarySequence &x);

// product of independent KT marginals, one per segment
LogProb kt_oracle_log_marginal(const BinarySequence &x, const TemporalPartition &partition);

class KtPredictor final : public SequentialPredictor {
public:
    double predict() const override { return kt_predict(m_state); }
    void update(bit_t b) override;
    LogProb log_marginal() const override { return LogProb(m_log_marginal); }
    void reset() override;
    std::unique_ptr<SequentialPredictor> clone() const override { return std::make_unique<KtPredictor>(*this); }
    std::string name() const override { return "kt"; }
    std::size_t time() const override { return m_state.total(); }

    const KtState &state() const { return m_state; }

private:
    KtState m_state;
    double m_log_marginal = 0.0;
};

// KT estimator whose counts reset at the known switching-points
class KtOraclePredictor final : public SequentialPredictor {
public:
    explicit KtOraclePredictor(TemporalPartition partition);

    double predict() const override;
    void update(bit_t b) override;
    LogProb log_marginal() const override { return LogProb(m_log_marginal); }
    void reset() override;
    std::unique_ptr<SequentialPredictor> clone() const override { return std::make_unique<KtOraclePredictor>(*this); }
    std::string name() const override { return "kt_oracle"; }
    std::size_t time() const override { return m_t; }

private:
    TemporalPartition m_partition;
    std::size_t m_segment = 0;
    std::size_t m_t = 0;
    KtState m_state;
    double m_log_marginal = 0.0;
};

/* Partition Tree Weighting over KT segments, for sequences of length up to
   2^depth.

   One node per tree level (0 = root covering 2^depth symbols, depth = leaf).
   Each node holds the KT statistics of the current block at that level, the
   weighted log-probability of the block, and a buffered log-probability of
   the completed left sibling. At time t the levels below the most
   significant bit that changed between t-1 and t-2 start a new block. */
class PtwPredictor final : public SequentialPredictor {
public:
    explicit PtwPredictor(unsigned depth);

    double predict() const override;
    void update(bit_t b) override;
    LogProb log_marginal() const override { return LogProb(m_nodes[0].log_weighted); }
    void reset() override;
    std::unique_ptr<SequentialPredictor> clone() const override { return std::make_unique<PtwPredictor>(*this); }
    std::string name() const override { return "ptw:" + std::to_string(m_depth); }
    std::size_t time() const override { return m_t; }

    unsigned depth() const { return m_depth; }
    std::size_t capacity() const { return std::size_t{1} << m_depth; }

private:
    struct Node {
        KtState kt;
        double log_kt = 0.0;
        double log_weighted = 0.0;
        double log_buffer = 0.0;
    };

    // level whose block boundary is crossed when consuming the symbol at
    // 1-based time t
    unsigned split_level(std::size_t t) const;
    // consumes b into nodes and returns the root log_weighted
    double advance(std::vector<Node> &nodes, bit_t b) const;

    unsigned m_depth;
    std::size_t m_t = 0;
    std::vector<Node> m_nodes;
    mutable std::vector<Node> m_scratch;
};

/* Exact mixture over all temporal partitions with the switching law
   Pr(new segment after time t | segment started at t_c) = (1/2)/(t - t_c + 1),
   and KT within each segment. One hypothesis per possible start of the
   current segment; transitions are applied lazily at the next update so
   exactly t hypotheses are alive after t symbols. */
class LinPredictor final : public SequentialPredictor {
public:
    struct Hypothesis {
        std::size_t start;   // 1-based start of the current segment
        double log_weight;   // normalized posterior
        KtState kt;
    };

    // prune_threshold > 0 drops hypotheses with posterior below it (inexact)
    explicit LinPredictor(double prune_threshold = 0.0);

    double predict() const override;
    void update(bit_t b) override;
    LogProb log_marginal() const override { return LogProb(m_log_marginal); }
    void reset() override;
    std::unique_ptr<SequentialPredictor> clone() const override { return std::make_unique<LinPredictor>(*this); }
    std::string name() const override { return "lin"; }
    std::size_t time() const override { return m_t; }

    const std::vector<Hypothesis> &hypotheses() const { return m_hyps; }

    static double switch_probability(std::size_t t, std::size_t start) {
        return 0.5 / static_cast<double>(t - start + 1);
    }

private:
    double m_prune_threshold;
    std::size_t m_t = 0;
    double m_log_marginal = 0.0;
    std::vector<Hypothesis> m_hyps;
    mutable std::vector<double> m_scratch;
};

/* Bayesian mixture xi(x) = sum_i w_i rho_i(x). Predictions are the
   posterior-weighted average of the component predictions. */
class MixturePredictor final : public SequentialPredictor {
public:
    using Component = std::pair<double, std::unique_ptr<SequentialPredictor>>;

    explicit MixturePredictor(std::vector<Component> components);
    MixturePredictor(const MixturePredictor &other);
    MixturePredictor &operator=(const MixturePredictor &) = delete;

    double predict() const override;
    void update(bit_t b) override;
    LogProb log_marginal() const override;
    void reset() override;
    std::unique_ptr<SequentialPredictor> clone() const override { return std::make_unique<MixturePredictor>(*this); }
    std::string name() const override;
    std::size_t time() const override { return m_components.front().second->time(); }

    std::size_t size() const { return m_components.size(); }
    const SequentialPredictor &component(std::size_t i) const { return *m_components.at(i).second; }
    double prior_weight(std::size_t i) const { return m_components.at(i).first; }
    std::vector<double> posterior_weights() const;

private:
    std::vector<Component> m_components;
    std::vector<double> m_log_prior;
};

// memoryless predictor
class ConstantPredictor final : public SequentialPredictor {
public:
    explicit ConstantPredictor(double p1);

    double predict() const override { return m_p1; }
    void update(bit_t b) override;
    LogProb log_marginal() const override { return LogProb(m_log_marginal); }
    void reset() override;
    std::unique_ptr<SequentialPredictor> clone() const override { return std::make_unique<ConstantPredictor>(*this); }
    std::string name() const override;
    std::size_t time() const override { return m_t; }

private:
    double m_p1;
    std::size_t m_t = 0;
    double m_log_marginal = 0.0;
};

std::unique_ptr<SequentialPredictor> constant_predictor(double p1);
std::unique_ptr<SequentialPredictor> mixture_predictor(std::vector<MixturePredictor::Component> components);

/* Verification oracles. */

// top-down PTW_d = 1/2 KT + 1/2 PTW_{d-1} PTW_{d-1}; requires |x| = 2^d, d <= 6
LogProb brute_force_ptw(const BinarySequence &x, unsigned depth);

// prior weight of a partition under the linear switching law
LogProb lin_prior_weight(const TemporalPartition &partition);

// visits each of the 2^{n-1} temporal partitions of 1..n (n <= 20)
void for_each_partition(std::size_t n, const std::function<void(const TemporalPartition &)> &fn);

// exact sum over all temporal partitions; requires 1 <= |x| <= 14
LogProb brute_force_lin(const BinarySequence &x);

}  // namespace nonstat
