#pragma once

#include "nonstat/core.hpp"
#include "nonstat/predictors.hpp"
#include "nonstat/sources.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace nonstat {

// Bad names, flags or values supplied by a caller; the CLI maps it to exit code 2.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline constexpr double kReportClamp = 1e-12;

// clamps p into [1e-12, 1 - 1e-12]
double clamp_for_report(double p);

/* KL(Bernoulli(theta) || Bernoulli(p)) in bits, with 0 log 0 = 0: the
   expected excess log loss at one step given the history. */
double instantaneous_regret(double theta, double p);

// log2 mu(x) - log2 pi(x) for the realized symbol x
double realized_regret(double theta, double p, bit_t x);

enum class RegretMode { expected, realized };

struct TraceStep {
    std::size_t t = 0;
    double theta = 0.0;
    double p1 = 0.0;
    double regret_bits = 0.0;
    double cum_regret_bits = 0.0;
};

struct RegretTrace {
    std::size_t seq_id = 0;
    std::vector<TraceStep> steps;

    double total() const { return steps.empty() ? 0.0 : steps.back().cum_regret_bits; }
};

/* Runs predictor over x from its current state, recording p_t before each
   update. Regret is measured against the source's true per-step bias. */
RegretTrace trace(SequentialPredictor &predictor, const PiecewiseSource &source, const BinarySequence &x,
                  std::size_t seq_id = 0, RegretMode mode = RegretMode::expected);

/* Predictor construction per sequence. Factories receive the source so the
   KT oracle can read the true partition and the bias oracle the true biases;
   every other predictor ignores it. */
using PredictorFactory = std::function<std::unique_ptr<SequentialPredictor>(const PiecewiseSource &)>;

struct NamedPredictor {
    std::string name;
    PredictorFactory make;
};

/* Registry names:
     kt | kt_oracle | bias_oracle | ptw:<d> | lin | lin:<prune threshold>
     const:<p> | model:<path> | mix:<w>*<name>|<w>*<name>...  (weights optional, default uniform)
   Throws UsageError for unknown names or malformed parameters. */
NamedPredictor make_predictor(const std::string &spec);

// comma-separated list of registry names
std::vector<NamedPredictor> parse_predictor_list(const std::string &list);

// predicts the true bias of the current segment: zero regret
class BiasOraclePredictor final : public SequentialPredictor {
public:
    explicit BiasOraclePredictor(PiecewiseSource source);

    double predict() const override;
    void update(bit_t b) override;
    LogProb log_marginal() const override { return LogProb(m_log_marginal); }
    void reset() override;
    std::unique_ptr<SequentialPredictor> clone() const override { return std::make_unique<BiasOraclePredictor>(*this); }
    std::string name() const override { return "bias_oracle"; }
    std::size_t time() const override { return m_t; }

private:
    PiecewiseSource m_source;
    std::size_t m_t = 0;
    double m_log_marginal = 0.0;
};

struct EvalSummary {
    std::string predictor;
    std::string prior;
    std::size_t length = 0;
    std::size_t num_seqs = 0;
    double mean_cum_regret_bits = 0.0;
    double stderr_bits = 0.0;  // sample std / sqrt(num_seqs)
    double wall_ms = 0.0;
};

struct EvalOptions {
    std::size_t num_seqs = 10000;
    std::uint64_t root_seed = 0;
    RegretMode mode = RegretMode::expected;
    unsigned threads = 0;  // 0: hardware concurrency
};

struct EvalReport {
    // sorted by mean cumulative regret, ascending
    std::vector<EvalSummary> summaries;
    // per predictor in input order: final cumulative regret of each sequence, by seq_id
    std::vector<std::vector<double>> per_sequence;
    // per predictor in input order: hash of the symbols that predictor consumed, by seq_id
    std::vector<std::vector<std::uint64_t>> consumed_hashes;
    std::vector<std::string> names;  // input order

    const EvalSummary &summary(const std::string &predictor) const;
    const std::vector<double> &regrets(const std::string &predictor) const;
};

/* Samples num_seqs (source, sequence) pairs from the prior, sequence i from
   stream (root_seed, i), and runs every predictor on identical sequences.
   Results are reduced in seq_id order, independent of thread scheduling. */
EvalReport evaluate(const std::vector<NamedPredictor> &predictors, const PriorSpec &prior, const EvalOptions &options);

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

MeanStderr mean_and_stderr(const std::vector<double> &values);
// statistics of a[i] - b[i]
MeanStderr paired_difference(const std::vector<double> &a, const std::vector<double> &b);

void write_eval_csv(std::ostream &os, const std::vector<EvalSummary> &summaries);
void write_trace_csv_header(std::ostream &os);
void write_trace_csv_rows(std::ostream &os, const std::string &predictor, const RegretTrace &trace);

}  // namespace nonstat
