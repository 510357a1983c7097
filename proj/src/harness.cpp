#include "nonstat/harness.hpp"

#include "nonstat/meta.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <ostream>
#include <thread>

namespace nonstat {

double clamp_for_report(double p) { return std::clamp(p, kReportClamp, 1.0 - kReportClamp); }

namespace {

// a log2(a / b) with 0 log 0 = 0
double xlog2_ratio(double a, double b) { return a > 0.0 ? a * std::log2(a / b) : 0.0; }

}  // namespace

double instantaneous_regret(double theta, double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("instantaneous_regret: p must lie in (0,1)");
    if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("instantaneous_regret: theta must lie in [0,1]");
    double kl = xlog2_ratio(theta, p) + xlog2_ratio(1.0 - theta, 1.0 - p);
    return std::max(kl, 0.0);
}

double realized_regret(double theta, double p, bit_t x) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("realized_regret: p must lie in (0,1)");
    double mu = x ? theta : 1.0 - theta;
    double pi = x ? p : 1.0 - p;
    return std::log2(mu) - std::log2(pi);
}

RegretTrace trace(SequentialPredictor &predictor, const PiecewiseSource &source, const BinarySequence &x,
                  std::size_t seq_id, RegretMode mode) {
    if (source.length() != x.size()) throw std::invalid_argument("trace: source and sequence lengths differ");
    RegretTrace out;
    out.seq_id = seq_id;
    out.steps.reserve(x.size());
    double cum = 0.0;
    for (std::size_t t = 1; t <= x.size(); ++t) {
        const double theta = source.bias_at(t);
        const double p = clamp_for_report(predictor.predict());
        const bit_t b = x.at(t);
        const double r = mode == RegretMode::expected ? instantaneous_regret(theta, p) : realized_regret(theta, p, b);
        cum += r;
        out.steps.push_back(TraceStep{t, theta, p, r, cum});
        predictor.update(b);
    }
    return out;
}

// BiasOraclePredictor

BiasOraclePredictor::BiasOraclePredictor(PiecewiseSource source) : m_source(std::move(source)) {}

double BiasOraclePredictor::predict() const {
    if (m_t >= m_source.length()) return 0.5;
    return m_source.bias_at(m_t + 1);
}

void BiasOraclePredictor::update(bit_t b) {
    m_log_marginal += std::log(prob(b));
    ++m_t;
}

void BiasOraclePredictor::reset() {
    m_t = 0;
    m_log_marginal = 0.0;
}

// registry

namespace {

double parse_double(const std::string &text, const std::string &what) {
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception &) {
        throw UsageError("invalid " + what + " '" + text + "'");
    }
}

unsigned parse_unsigned(const std::string &text, const std::string &what) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
        throw UsageError("invalid " + what + " '" + text + "'");
    return static_cast<unsigned>(std::stoul(text));
}

std::vector<std::string> split(const std::string &text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
        std::size_t pos = text.find(sep, start);
        parts.push_back(text.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return parts;
}

NamedPredictor make_mixture(const std::string &spec, const std::string &body) {
    std::vector<std::string> parts = split(body, '|');
    std::vector<double> weights;
    std::vector<NamedPredictor> components;
    bool any_weight = false, all_weight = true;
    for (const std::string &part : parts) {
        std::size_t star = part.find('*');
        // a '*' only separates a weight when what precedes it is numeric
        if (star != std::string::npos && part.substr(0, star).find_first_not_of("0123456789.eE+-") == std::string::npos &&
            star > 0) {
            weights.push_back(parse_double(part.substr(0, star), "mixture weight"));
            components.push_back(make_predictor(part.substr(star + 1)));
            any_weight = true;
        } else {
            weights.push_back(0.0);
            components.push_back(make_predictor(part));
            all_weight = false;
        }
    }
    if (any_weight && !all_weight) throw UsageError("mixture '" + spec + "': give weights for all components or none");
    if (!any_weight) std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(weights.size()));
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw UsageError("mixture '" + spec + "': weights must be positive");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw UsageError("mixture '" + spec + "': weights must sum to 1");

    return NamedPredictor{spec, [weights, components](const PiecewiseSource &source) {
                              std::vector<MixturePredictor::Component> parts;
                              for (std::size_t i = 0; i < components.size(); ++i)
                                  parts.emplace_back(weights[i], components[i].make(source));
                              return mixture_predictor(std::move(parts));
                          }};
}

}  // namespace

NamedPredictor make_predictor(const std::string &spec) {
    const std::size_t colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    const bool has_arg = colon != std::string::npos;

    if (head == "kt" && !has_arg)
        return {spec, [](const PiecewiseSource &) { return std::make_unique<KtPredictor>(); }};
    if (head == "kt_oracle" && !has_arg)
        return {spec, [](const PiecewiseSource &s) { return std::make_unique<KtOraclePredictor>(s.partition()); }};
    if (head == "bias_oracle" && !has_arg)
        return {spec, [](const PiecewiseSource &s) { return std::make_unique<BiasOraclePredictor>(s); }};
    if (head == "lin") {
        double prune = has_arg ? parse_double(arg, "lin prune threshold") : 0.0;
        if (prune < 0.0 || prune >= 1.0) throw UsageError("lin prune threshold must lie in [0,1)");
        return {spec, [prune](const PiecewiseSource &) { return std::make_unique<LinPredictor>(prune); }};
    }
    if (head == "ptw" && has_arg) {
        unsigned depth = parse_unsigned(arg, "ptw depth");
        if (depth > 60) throw UsageError("ptw depth must be <= 60");
        return {spec, [depth](const PiecewiseSource &) { return std::make_unique<PtwPredictor>(depth); }};
    }
    if (head == "const" && has_arg) {
        double p = parse_double(arg, "constant probability");
        if (!(p > 0.0 && p < 1.0)) throw UsageError("const:<p> requires p in (0,1)");
        return {spec, [p](const PiecewiseSource &) { return constant_predictor(p); }};
    }
    if (head == "model" && has_arg) {
        auto model = std::make_shared<const meta::RecurrentModel>(meta::load_model(arg));
        return {spec, [model, spec](const PiecewiseSource &) {
                    return std::make_unique<meta::RecurrentPredictor>(model, spec);
                }};
    }
    if (head == "mix" && has_arg) return make_mixture(spec, arg);
    throw UsageError("unknown predictor '" + spec + "'");
}

std::vector<NamedPredictor> parse_predictor_list(const std::string &list) {
    std::vector<NamedPredictor> out;
    if (list.empty()) return out;
    for (const std::string &name : split(list, ',')) {
        if (name.empty()) throw UsageError("empty predictor name in list '" + list + "'");
        out.push_back(make_predictor(name));
    }
    return out;
}

// evaluation

namespace {

// forwards to an inner predictor and keeps the symbols it was fed
class RecordingPredictor final : public SequentialPredictor {
public:
    explicit RecordingPredictor(std::unique_ptr<SequentialPredictor> inner) : m_inner(std::move(inner)) {}

    double predict() const override { return m_inner->predict(); }
    void update(bit_t b) override {
        m_consumed.push_back(b);
        m_inner->update(b);
    }
    LogProb log_marginal() const override { return m_inner->log_marginal(); }
    void reset() override {
        m_consumed = BinarySequence();
        m_inner->reset();
    }
    std::unique_ptr<SequentialPredictor> clone() const override {
        auto copy = std::make_unique<RecordingPredictor>(m_inner->clone());
        copy->m_consumed = m_consumed;
        return copy;
    }
    std::string name() const override { return m_inner->name(); }
    std::size_t time() const override { return m_inner->time(); }

    const BinarySequence &consumed() const { return m_consumed; }

private:
    std::unique_ptr<SequentialPredictor> m_inner;
    BinarySequence m_consumed;
};

}  // namespace

MeanStderr mean_and_stderr(const std::vector<double> &values) {
    MeanStderr out;
    if (values.empty()) return out;
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / n;
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - out.mean) * (v - out.mean);
        out.stderr_ = std::sqrt(sq / (n - 1.0)) / std::sqrt(n);
    }
    return out;
}

MeanStderr paired_difference(const std::vector<double> &a, const std::vector<double> &b) {
    if (a.size() != b.size()) throw std::invalid_argument("paired_difference: sizes differ");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return mean_and_stderr(d);
}

const EvalSummary &EvalReport::summary(const std::string &predictor) const {
    for (const EvalSummary &s : summaries)
        if (s.predictor == predictor) return s;
    throw std::out_of_range("no summary for predictor '" + predictor + "'");
}

const std::vector<double> &EvalReport::regrets(const std::string &predictor) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == predictor) return per_sequence[i];
    throw std::out_of_range("no results for predictor '" + predictor + "'");
}

EvalReport evaluate(const std::vector<NamedPredictor> &predictors, const PriorSpec &prior, const EvalOptions &options) {
    if (predictors.empty()) throw UsageError("evaluate: no predictors given");
    prior.validate();
    const std::size_t num_pred = predictors.size();
    const std::size_t num_seqs = options.num_seqs;

    EvalReport report;
    report.per_sequence.assign(num_pred, std::vector<double>(num_seqs, 0.0));
    report.consumed_hashes.assign(num_pred, std::vector<std::uint64_t>(num_seqs, 0));
    for (const auto &p : predictors) report.names.push_back(p.name);

    unsigned workers = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(num_seqs, 1)));
    // wall time per worker per predictor, summed afterwards in worker order
    std::vector<std::vector<double>> wall(workers, std::vector<double>(num_pred, 0.0));
    std::vector<std::exception_ptr> errors(workers);

    auto run = [&](unsigned w) {
        std::size_t seq_id = w;
        try {
            for (; seq_id < num_seqs; seq_id += workers) {
                SampledSequence s = sample_from_prior(prior, options.root_seed, seq_id);
                for (std::size_t k = 0; k < num_pred; ++k) {
                    auto start = std::chrono::steady_clock::now();
                    RecordingPredictor predictor(predictors[k].make(s.source));
                    RegretTrace tr = trace(predictor, s.source, s.symbols, seq_id, options.mode);
                    auto stop = std::chrono::steady_clock::now();
                    wall[w][k] += std::chrono::duration<double, std::milli>(stop - start).count();
                    report.per_sequence[k][seq_id] = tr.total();
                    report.consumed_hashes[k][seq_id] = predictor.consumed().hash();
                }
            }
        } catch (const std::exception &e) {
            errors[w] = std::make_exception_ptr(
                std::runtime_error("sequence " + std::to_string(seq_id) + ": " + e.what()));
        }
    };

    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto &t : pool) t.join();
    }
    for (auto &e : errors)
        if (e) std::rethrow_exception(e);

    for (std::size_t k = 0; k < num_pred; ++k) {
        MeanStderr ms = mean_and_stderr(report.per_sequence[k]);
        double ms_total = 0.0;
        for (unsigned w = 0; w < workers; ++w) ms_total += wall[w][k];
        report.summaries.push_back(EvalSummary{predictors[k].name, prior.label(), prior.n, num_seqs, ms.mean,
                                               ms.stderr_, ms_total});
    }
    std::stable_sort(report.summaries.begin(), report.summaries.end(), [](const EvalSummary &a, const EvalSummary &b) {
        return a.mean_cum_regret_bits < b.mean_cum_regret_bits;
    });
    return report;
}

void write_eval_csv(std::ostream &os, const std::vector<EvalSummary> &summaries) {
    os << "predictor,prior,length,num_seqs,mean_cum_regret_bits,stderr_bits,wall_ms\n";
    for (const EvalSummary &s : summaries) {
        os << s.predictor << ',' << s.prior << ',' << s.length << ',' << s.num_seqs << ',' << std::setprecision(17)
           << s.mean_cum_regret_bits << ',' << s.stderr_bits << ',' << std::setprecision(6) << std::fixed << s.wall_ms
           << std::defaultfloat << '\n';
    }
}

void write_trace_csv_header(std::ostream &os) { os << "predictor,seq_id,t,theta,p1,regret_bits,cum_regret_bits\n"; }

void write_trace_csv_rows(std::ostream &os, const std::string &predictor, const RegretTrace &tr) {
    os << std::setprecision(17);
    for (const TraceStep &s : tr.steps)
        os << predictor << ',' << tr.seq_id << ',' << s.t << ',' << s.theta << ',' << s.p1 << ',' << s.regret_bits << ','
           << s.cum_regret_bits << '\n';
    os << std::defaultfloat << std::setprecision(6);
}

}  // namespace nonstat
