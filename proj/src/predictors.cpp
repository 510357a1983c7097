#include "nonstat/predictors.hpp"

#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

namespace nonstat {

namespace {

const double kLogHalf = std::log(0.5);

}  // namespace

void feed(SequentialPredictor &predictor, const BinarySequence &x) {
    for (bit_t b : x) predictor.update(b);
}

LogProb log_marginal_of(const SequentialPredictor &predictor, const BinarySequence &x) {
    auto copy = predictor.clone();
    copy->reset();
    feed(*copy, x);
    return copy->log_marginal();
}

LogProb kt_log_marginal(const BinarySequence &x) {
    KtState s;
    double lp = 0.0;
    for (bit_t b : x) {
        lp += std::log(kt_prob(s, b));
        s.add(b);
    }
    return LogProb(lp);
}

LogProb kt_oracle_log_marginal(const BinarySequence &x, const TemporalPartition &partition) {
    if (partition.length() != x.size())
        throw std::invalid_argument("kt_oracle_log_marginal: partition length does not match sequence length");
    double lp = 0.0;
    for (const Segment &s : partition.segments()) lp += kt_log_marginal(x.slice(s.a, s.b)).value;
    return LogProb(lp);
}

// KtPredictor

void KtPredictor::update(bit_t b) {
    m_log_marginal += std::log(kt_prob(m_state, b));
    m_state.add(b);
}

void KtPredictor::reset() {
    m_state = KtState{};
    m_log_marginal = 0.0;
}

// KtOraclePredictor

KtOraclePredictor::KtOraclePredictor(TemporalPartition partition) : m_partition(std::move(partition)) {}

double KtOraclePredictor::predict() const {
    // the next symbol may open a new segment
    std::size_t next = m_t + 1;
    if (next <= m_partition.length() && m_partition.segment(m_segment).b < next) return 0.5;
    return kt_predict(m_state);
}

void KtOraclePredictor::update(bit_t b) {
    std::size_t next = m_t + 1;
    if (next > m_partition.length())
        throw std::out_of_range("kt_oracle: sequence is longer than the known partition");
    if (m_partition.segment(m_segment).b < next) {
        ++m_segment;
        m_state = KtState{};
    }
    m_log_marginal += std::log(kt_prob(m_state, b));
    m_state.add(b);
    m_t = next;
}

void KtOraclePredictor::reset() {
    m_segment = 0;
    m_t = 0;
    m_state = KtState{};
    m_log_marginal = 0.0;
}

// PtwPredictor

PtwPredictor::PtwPredictor(unsigned depth) : m_depth(depth), m_nodes(depth + 1), m_scratch(depth + 1) {
    if (depth > 60) throw std::invalid_argument("ptw: depth must be <= 60");
}

unsigned PtwPredictor::split_level(std::size_t t) const {
    if (t <= 1) return 0;
    std::uint64_t changed = static_cast<std::uint64_t>(t - 1) ^ static_cast<std::uint64_t>(t - 2);
    unsigned msb = static_cast<unsigned>(std::bit_width(changed)) - 1;
    return m_depth - 1 - msb;
}

double PtwPredictor::advance(std::vector<Node> &nodes, bit_t b) const {
    const std::size_t t = m_t + 1;
    if (m_depth > 0) {
        unsigned level = split_level(t);
        nodes[level].log_buffer = nodes[level + 1].log_weighted;
        for (unsigned j = level + 1; j <= m_depth; ++j) nodes[j] = Node{};
    }

    Node &leaf = nodes[m_depth];
    leaf.log_kt += std::log(kt_prob(leaf.kt, b));
    leaf.kt.add(b);
    leaf.log_weighted = leaf.log_kt;

    for (unsigned j = m_depth; j-- > 0;) {
        Node &n = nodes[j];
        n.log_kt += std::log(kt_prob(n.kt, b));
        n.kt.add(b);
        double stop = kLogHalf + n.log_kt;
        double split = kLogHalf + nodes[j + 1].log_weighted + n.log_buffer;
        n.log_weighted = logspace_add(stop, split);
    }
    return nodes[0].log_weighted;
}

double PtwPredictor::predict() const {
    if (m_t >= capacity()) throw std::out_of_range("ptw: predictor has consumed 2^depth symbols");
    m_scratch = m_nodes;
    double with_one = advance(m_scratch, 1);
    return std::exp(with_one - m_nodes[0].log_weighted);
}

void PtwPredictor::update(bit_t b) {
    if (m_t >= capacity())
        throw std::out_of_range("ptw: cannot consume more than 2^depth = " + std::to_string(capacity()) + " symbols");
    advance(m_nodes, b);
    ++m_t;
}

void PtwPredictor::reset() {
    m_t = 0;
    std::fill(m_nodes.begin(), m_nodes.end(), Node{});
}

// LinPredictor

LinPredictor::LinPredictor(double prune_threshold) : m_prune_threshold(prune_threshold) {
    if (prune_threshold < 0.0 || prune_threshold >= 1.0)
        throw std::invalid_argument("lin: prune threshold must be in [0,1)");
}

double LinPredictor::predict() const {
    if (m_t == 0) return 0.5;
    double stay = 0.0, moved = 0.0;
    for (const Hypothesis &h : m_hyps) {
        double w = std::exp(h.log_weight);
        double s = switch_probability(m_t, h.start);
        stay += w * (1.0 - s) * kt_predict(h.kt);
        moved += w * s;
    }
    return stay + 0.5 * moved;
}

void LinPredictor::update(bit_t b) {
    if (m_t == 0) {
        m_hyps.assign(1, Hypothesis{1, 0.0, KtState{}});
    } else {
        // switch mass flows into a segment starting at m_t + 1
        m_scratch.clear();
        for (Hypothesis &h : m_hyps) {
            double s = switch_probability(m_t, h.start);
            m_scratch.push_back(h.log_weight + std::log(s));
            h.log_weight += std::log1p(-s);
        }
        m_hyps.push_back(Hypothesis{m_t + 1, logspace_sum(m_scratch), KtState{}});
    }

    m_scratch.clear();
    for (Hypothesis &h : m_hyps) {
        h.log_weight += std::log(kt_prob(h.kt, b));
        h.kt.add(b);
        m_scratch.push_back(h.log_weight);
    }
    double norm = logspace_sum(m_scratch);
    m_log_marginal += norm;
    for (Hypothesis &h : m_hyps) h.log_weight -= norm;

    if (m_prune_threshold > 0.0) {
        const double cut = std::log(m_prune_threshold);
        std::erase_if(m_hyps, [cut](const Hypothesis &h) { return h.log_weight < cut; });
        m_scratch.clear();
        for (const Hypothesis &h : m_hyps) m_scratch.push_back(h.log_weight);
        double renorm = logspace_sum(m_scratch);
        for (Hypothesis &h : m_hyps) h.log_weight -= renorm;
    }
    ++m_t;
}

void LinPredictor::reset() {
    m_t = 0;
    m_log_marginal = 0.0;
    m_hyps.clear();
}

// MixturePredictor

MixturePredictor::MixturePredictor(std::vector<Component> components) : m_components(std::move(components)) {
    if (m_components.empty()) throw std::invalid_argument("mixture: at least one component is required");
    double total = 0.0;
    for (const auto &[w, p] : m_components) {
        if (!p) throw std::invalid_argument("mixture: null component");
        if (!(w > 0.0)) throw std::invalid_argument("mixture: weights must be positive");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("mixture: weights must sum to 1");
    for (const auto &c : m_components) m_log_prior.push_back(std::log(c.first));
}

MixturePredictor::MixturePredictor(const MixturePredictor &other) : m_log_prior(other.m_log_prior) {
    for (const auto &[w, p] : other.m_components) m_components.emplace_back(w, p->clone());
}

std::vector<double> MixturePredictor::posterior_weights() const {
    std::vector<double> logs;
    for (std::size_t i = 0; i < m_components.size(); ++i)
        logs.push_back(m_log_prior[i] + m_components[i].second->log_marginal().value);
    double norm = logspace_sum(logs);
    for (double &v : logs) v = std::exp(v - norm);
    return logs;
}

double MixturePredictor::predict() const {
    std::vector<double> post = posterior_weights();
    double p = 0.0;
    for (std::size_t i = 0; i < m_components.size(); ++i) p += post[i] * m_components[i].second->predict();
    return p;
}

void MixturePredictor::update(bit_t b) {
    for (auto &c : m_components) c.second->update(b);
}

LogProb MixturePredictor::log_marginal() const {
    std::vector<double> logs;
    for (std::size_t i = 0; i < m_components.size(); ++i)
        logs.push_back(m_log_prior[i] + m_components[i].second->log_marginal().value);
    return LogProb(logspace_sum(logs));
}

void MixturePredictor::reset() {
    for (auto &c : m_components) c.second->reset();
}

std::string MixturePredictor::name() const {
    std::ostringstream oss;
    oss << "mix:";
    for (std::size_t i = 0; i < m_components.size(); ++i) {
        if (i) oss << '|';
        oss << m_components[i].first << '*' << m_components[i].second->name();
    }
    return oss.str();
}

// ConstantPredictor

ConstantPredictor::ConstantPredictor(double p1) : m_p1(p1) {
    if (!(p1 > 0.0 && p1 < 1.0)) throw std::invalid_argument("constant predictor: p must lie in (0,1)");
}

void ConstantPredictor::update(bit_t b) {
    m_log_marginal += std::log(b ? m_p1 : 1.0 - m_p1);
    ++m_t;
}

void ConstantPredictor::reset() {
    m_t = 0;
    m_log_marginal = 0.0;
}

std::string ConstantPredictor::name() const {
    std::ostringstream oss;
    oss << "const:" << m_p1;
    return oss.str();
}

std::unique_ptr<SequentialPredictor> constant_predictor(double p1) { return std::make_unique<ConstantPredictor>(p1); }

std::unique_ptr<SequentialPredictor> mixture_predictor(std::vector<MixturePredictor::Component> components) {
    return std::make_unique<MixturePredictor>(std::move(components));
}

// Oracles

namespace {

double ptw_recursive(const BinarySequence &x, std::size_t a, unsigned depth) {
    std::size_t len = std::size_t{1} << depth;
    double kt = kt_log_marginal(x.slice(a, a + len - 1)).value;
    if (depth == 0) return kt;
    std::size_t half = len / 2;
    double split = ptw_recursive(x, a, depth - 1) + ptw_recursive(x, a + half, depth - 1);
    return logspace_add(kLogHalf + kt, kLogHalf + split);
}

}  // namespace

LogProb brute_force_ptw(const BinarySequence &x, unsigned depth) {
    if (depth > 6) throw std::invalid_argument("brute_force_ptw: depth above test-scale guard (6)");
    if (x.size() != (std::size_t{1} << depth))
        throw std::invalid_argument("brute_force_ptw: sequence length must equal 2^depth");
    return LogProb(ptw_recursive(x, 1, depth));
}

LogProb lin_prior_weight(const TemporalPartition &partition) {
    double lw = 0.0;
    std::size_t n = partition.length();
    for (const Segment &s : partition.segments()) {
        for (std::size_t t = s.a; t < s.b; ++t) lw += std::log1p(-LinPredictor::switch_probability(t, s.a));
        if (s.b < n) lw += std::log(LinPredictor::switch_probability(s.b, s.a));
    }
    return LogProb(lw);
}

void for_each_partition(std::size_t n, const std::function<void(const TemporalPartition &)> &fn) {
    if (n < 1 || n > 20) throw std::invalid_argument("for_each_partition: n must be in [1, 20]");
    const std::uint64_t count = std::uint64_t{1} << (n - 1);
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        // bit t-1 set: switching-point after time t
        std::vector<std::size_t> ends;
        for (std::size_t t = 1; t < n; ++t)
            if (mask >> (t - 1) & 1u) ends.push_back(t);
        ends.push_back(n);
        fn(TemporalPartition::from_ends(ends));
    }
}

LogProb brute_force_lin(const BinarySequence &x) {
    if (x.empty() || x.size() > 14) throw std::invalid_argument("brute_force_lin: need 1 <= |x| <= 14");
    std::vector<double> terms;
    for_each_partition(x.size(), [&](const TemporalPartition &p) {
        terms.push_back(lin_prior_weight(p).value + kt_oracle_log_marginal(x, p).value);
    });
    return LogProb(logspace_sum(terms));
}

}  // namespace nonstat
