#include "nonstat/cli.hpp"

#include "nonstat/harness.hpp"
#include "nonstat/meta.hpp"
#include "nonstat/sources.hpp"
#include "nonstat/stats.hpp"

#include <CLI11.hpp>

#include <bit>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

namespace nonstat {

namespace {

struct PriorOptions {
    std::string kind;
    std::optional<std::size_t> length;
    std::optional<std::size_t> period;
    std::optional<std::size_t> max_len;
    std::optional<unsigned> depth;
};

void add_prior_options(CLI::App *cmd, PriorOptions &o) {
    cmd->add_option("--prior", o.kind, "Switching-point prior")
        ->required()
        ->check(CLI::IsMember({"regular", "uniform", "ptw", "lin"}));
    cmd->add_option("--length", o.length, "Sequence length");
    cmd->add_option("--period", o.period, "Segment length of the regular prior");
    cmd->add_option("--max-len", o.max_len, "Maximum segment length of the uniform prior (default: length)");
    cmd->add_option("--depth", o.depth, "Depth of the ptw prior (length = 2^depth)");
}

PriorSpec resolve_prior(const PriorOptions &o) {
    const PriorKind kind = parse_prior_kind(o.kind);
    try {
        switch (kind) {
            case PriorKind::ptw: {
                unsigned depth;
                if (o.depth) {
                    depth = *o.depth;
                } else if (o.length && std::has_single_bit(*o.length)) {
                    depth = static_cast<unsigned>(std::countr_zero(*o.length));
                } else {
                    throw UsageError("ptw prior needs --depth (or a power-of-two --length)");
                }
                PriorSpec p = PriorSpec::ptw(depth);
                if (o.length && *o.length != p.n)
                    throw UsageError("ptw prior: --length " + std::to_string(*o.length) + " differs from 2^depth = " +
                                     std::to_string(p.n));
                return p;
            }
            case PriorKind::regular:
                if (!o.length || !o.period) throw UsageError("regular prior needs --length and --period");
                return PriorSpec::regular(*o.length, *o.period);
            case PriorKind::uniform:
                if (!o.length) throw UsageError("uniform prior needs --length");
                return PriorSpec::uniform(*o.length, o.max_len.value_or(*o.length));
            case PriorKind::lin:
                if (!o.length) throw UsageError("lin prior needs --length");
                return PriorSpec::lin(*o.length);
        }
    } catch (const UsageError &) {
        throw;
    } catch (const std::invalid_argument &e) {
        throw UsageError(e.what());
    }
    throw UsageError("unknown prior");
}

// "-" selects the standard output stream
class Output {
public:
    Output(const std::string &path, std::ostream &fallback) {
        if (path == "-") {
            m_os = &fallback;
        } else {
            m_file = std::make_unique<std::ofstream>(path);
            if (!*m_file) throw std::runtime_error("cannot open '" + path + "' for writing");
            m_os = m_file.get();
        }
    }
    std::ostream &stream() { return *m_os; }
    void finish() {
        m_os->flush();
        if (!*m_os) throw std::runtime_error("write failed");
    }

private:
    std::unique_ptr<std::ofstream> m_file;
    std::ostream *m_os;
};

void write_header(std::ostream &os, const std::string &command,
                  const std::vector<std::pair<std::string, std::string>> &entries) {
    os << "# nonstat " << command << '\n';
    for (const auto &[k, v] : entries) os << "# " << k << '=' << v << '\n';
}

std::vector<std::pair<std::string, std::string>> prior_entries(const PriorSpec &p) {
    return {{"prior", p.label()}, {"length", std::to_string(p.n)}};
}

std::string locations_path(const std::string &out) {
    if (out == "-") return "-";
    std::filesystem::path p(out);
    std::filesystem::path stem = p.parent_path() / p.stem();
    return stem.string() + "_locations" + (p.has_extension() ? p.extension().string() : std::string(".csv"));
}

// subcommands

struct SampleArgs {
    PriorOptions prior;
    std::size_t num = 1;
    std::uint64_t seed = 0;
    std::string out = "-";
};

int cmd_sample(const SampleArgs &a, std::ostream &out) {
    PriorSpec prior = resolve_prior(a.prior);
    Output o(a.out, out);
    write_header(o.stream(), "sample",
                 {{"prior", prior.label()}, {"length", std::to_string(prior.n)}, {"num", std::to_string(a.num)},
                  {"root_seed", std::to_string(a.seed)}, {"beta_prior", "0.5,0.5"}});
    write_sequence_csv_header(o.stream());
    for (std::size_t i = 0; i < a.num; ++i) write_sequence_csv_row(o.stream(), sample_from_prior(prior, a.seed, i));
    o.finish();
    return kExitOk;
}

struct StatsArgs {
    unsigned depth = 0;
    std::size_t samples = 10000;
    std::uint64_t seed = 0;
    std::string out = "-";
    std::string locations_out;
};

int cmd_stats(const StatsArgs &a, std::ostream &out) {
    if (a.depth > 20) throw UsageError("stats: --depth must be <= 20");
    if (a.samples == 0) throw UsageError("stats: --samples must be positive");
    const std::size_t n = std::size_t{1} << a.depth;

    std::vector<TemporalPartition> parts;
    parts.reserve(a.samples);
    for (std::size_t i = 0; i < a.samples; ++i) {
        RngStream rng = split_stream(a.seed, i);
        parts.push_back(sample_ptw_partition(a.depth, rng));
    }
    SwitchHistograms h = empirical_switch_stats(parts);
    SwitchCountPmf pmf = ptw_switch_count_pmf(a.depth, n - 1);
    const double k_samples = static_cast<double>(a.samples);
    const std::vector<std::pair<std::string, std::string>> entries = {
        {"depth", std::to_string(a.depth)}, {"length", std::to_string(n)}, {"samples", std::to_string(a.samples)},
        {"root_seed", std::to_string(a.seed)}, {"empirical_mean_switches", std::to_string(h.mean_switches)},
        {"analytic_mean_switches", std::to_string(expected_switches(a.depth, 0.5))}};

    Output o(a.out, out);
    write_header(o.stream(), "stats", entries);
    o.stream() << "k,analytic_p,empirical_p,stderr\n" << std::setprecision(17);
    for (std::size_t k = 0; k < n; ++k) {
        double emp = k < h.counts.size() ? h.counts[k] : 0.0;
        o.stream() << k << ',' << pmf[k] << ',' << emp << ',' << std::sqrt(emp * (1.0 - emp) / k_samples) << '\n';
    }
    o.finish();

    Output lo(a.locations_out.empty() ? locations_path(a.out) : a.locations_out, out);
    write_header(lo.stream(), "stats", entries);
    lo.stream() << "t,analytic_loc_p,empirical_loc_p\n" << std::setprecision(17);
    for (std::size_t t = 1; t < n; ++t)
        lo.stream() << t << ',' << switch_location_probability(a.depth, t) << ',' << h.locations[t - 1] << '\n';
    lo.finish();
    return kExitOk;
}

struct EvalArgs {
    PriorOptions prior;
    std::size_t num = 10000;
    std::uint64_t seed = 0;
    std::string predictors;
    std::string out = "-";
    bool realized = false;
    unsigned threads = 0;
};

int cmd_eval(const EvalArgs &a, std::ostream &out) {
    PriorSpec prior = resolve_prior(a.prior);
    std::vector<NamedPredictor> preds = parse_predictor_list(a.predictors);
    if (preds.empty()) throw UsageError("eval: --predictors must name at least one predictor");
    EvalOptions opts{a.num, a.seed, a.realized ? RegretMode::realized : RegretMode::expected, a.threads};
    EvalReport report = evaluate(preds, prior, opts);

    Output o(a.out, out);
    auto entries = prior_entries(prior);
    entries.push_back({"num", std::to_string(a.num)});
    entries.push_back({"root_seed", std::to_string(a.seed)});
    entries.push_back({"predictors", a.predictors});
    entries.push_back({"regret", a.realized ? "realized" : "expected"});
    write_header(o.stream(), "eval", entries);
    write_eval_csv(o.stream(), report.summaries);
    o.finish();
    return kExitOk;
}

struct TraceArgs {
    PriorOptions prior;
    std::uint64_t seed = 0;
    std::size_t seq_id = 0;
    std::string predictors;
    std::string out = "-";
    bool realized = false;
};

int cmd_trace(const TraceArgs &a, std::ostream &out) {
    PriorSpec prior = resolve_prior(a.prior);
    std::vector<NamedPredictor> preds = parse_predictor_list(a.predictors);
    if (preds.empty()) throw UsageError("trace: --predictors must name at least one predictor");
    SampledSequence s = sample_from_prior(prior, a.seed, a.seq_id);
    const RegretMode mode = a.realized ? RegretMode::realized : RegretMode::expected;

    Output o(a.out, out);
    auto entries = prior_entries(prior);
    entries.push_back({"root_seed", std::to_string(a.seed)});
    entries.push_back({"seq_id", std::to_string(a.seq_id)});
    entries.push_back({"predictors", a.predictors});
    entries.push_back({"regret", a.realized ? "realized" : "expected"});
    entries.push_back({"partition", to_string(s.source.partition())});
    write_header(o.stream(), "trace", entries);
    write_trace_csv_header(o.stream());
    for (const NamedPredictor &p : preds) {
        auto predictor = p.make(s.source);
        write_trace_csv_rows(o.stream(), p.name, trace(*predictor, s.source, s.symbols, s.seq_id, mode));
    }
    o.finish();
    return kExitOk;
}

struct TrainArgs {
    PriorOptions prior;
    std::string arch = "lstm";
    std::size_t hidden = 32;
    std::vector<std::size_t> readout = {32, 32};
    std::size_t steps = 20000;
    std::size_t batch = 32;
    double lr = 1e-3;
    double clip = 1.0;
    std::uint64_t seed = 0;
    std::string out;
    std::string curve;
    std::size_t log_every = 0;
};

int cmd_train(const TrainArgs &a, std::ostream &out, std::ostream &err) {
    meta::TrainingConfig cfg;
    cfg.prior = resolve_prior(a.prior);
    cfg.arch.cell = meta::parse_cell_kind(a.arch);
    cfg.arch.hidden_size = a.hidden;
    cfg.arch.readout_sizes = a.readout;
    cfg.steps = a.steps;
    cfg.batch_size = a.batch;
    cfg.learning_rate = a.lr;
    cfg.grad_clip_norm = a.clip;
    cfg.seed = a.seed;
    try {
        cfg.validate();
    } catch (const std::invalid_argument &e) {
        throw UsageError(e.what());
    }

    meta::TrainResult result = meta::train(cfg, [&](std::size_t step, double loss) {
        if (a.log_every && (step + 1) % a.log_every == 0)
            err << "step " << step + 1 << " loss " << std::setprecision(6) << loss << '\n';
    });
    meta::save_model(result.model, a.out);

    if (!a.curve.empty()) {
        Output o(a.curve, out);
        auto entries = prior_entries(cfg.prior);
        entries.push_back({"arch", a.arch});
        entries.push_back({"hidden_size", std::to_string(a.hidden)});
        entries.push_back({"steps", std::to_string(a.steps)});
        entries.push_back({"batch", std::to_string(a.batch)});
        entries.push_back({"learning_rate", std::to_string(a.lr)});
        entries.push_back({"root_seed", std::to_string(a.seed)});
        write_header(o.stream(), "train", entries);
        o.stream() << "step,mean_loss_nats\n" << std::setprecision(17);
        for (std::size_t s = 0; s < result.curve.size(); ++s) o.stream() << s << ',' << result.curve[s] << '\n';
        o.finish();
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Bayes-optimal and meta-learned prediction of piecewise-stationary binary sources", "nonstat"};
    app.require_subcommand(1);

    SampleArgs sample;
    auto *c_sample = app.add_subcommand("sample", "Sample partitions, biases and sequences from a prior (CSV)");
    add_prior_options(c_sample, sample.prior);
    c_sample->add_option("--num", sample.num, "Number of sequences");
    c_sample->add_option("--seed", sample.seed, "Root seed");
    c_sample->add_option("--out", sample.out, "Output CSV ('-' for stdout)");

    StatsArgs stats;
    auto *c_stats = app.add_subcommand("stats", "Analytic and empirical switching-point statistics of the ptw prior");
    c_stats->add_option("--depth", stats.depth, "Tree depth")->required();
    c_stats->add_option("--samples", stats.samples, "Number of sampled partitions");
    c_stats->add_option("--seed", stats.seed, "Root seed");
    c_stats->add_option("--out", stats.out, "Switch-count CSV ('-' for stdout)");
    c_stats->add_option("--locations-out", stats.locations_out, "Switch-location CSV (default: <out>_locations.csv)");

    EvalArgs eval;
    auto *c_eval = app.add_subcommand("eval", "Mean cumulative regret of predictors on sequences from a prior");
    add_prior_options(c_eval, eval.prior);
    c_eval->add_option("--num", eval.num, "Number of sequences");
    c_eval->add_option("--seed", eval.seed, "Root seed");
    c_eval->add_option("--predictors", eval.predictors, "Comma-separated predictor names");
    c_eval->add_option("--out", eval.out, "Output CSV ('-' for stdout)");
    c_eval->add_flag("--realized", eval.realized, "Use realized log-loss differences instead of expected regret");
    c_eval->add_option("--threads", eval.threads, "Worker threads (0: all cores)");

    TraceArgs tr;
    auto *c_trace = app.add_subcommand("trace", "Per-step regret of predictors on one sampled sequence");
    add_prior_options(c_trace, tr.prior);
    c_trace->add_option("--seed", tr.seed, "Root seed");
    c_trace->add_option("--seq-id", tr.seq_id, "Sequence index within the seed");
    c_trace->add_option("--predictors", tr.predictors, "Comma-separated predictor names");
    c_trace->add_option("--out", tr.out, "Output CSV ('-' for stdout)");
    c_trace->add_flag("--realized", tr.realized, "Use realized log-loss differences instead of expected regret");

    TrainArgs train;
    auto *c_train = app.add_subcommand("train", "Meta-train a recurrent predictor on a prior with log loss");
    add_prior_options(c_train, train.prior);
    c_train->add_option("--arch", train.arch, "Recurrent cell")->check(CLI::IsMember({"rnn", "lstm"}));
    c_train->add_option("--hidden", train.hidden, "Hidden units");
    c_train->add_option("--readout", train.readout, "Read-out layer sizes")->delimiter(',');
    c_train->add_option("--steps", train.steps, "Optimizer steps");
    c_train->add_option("--batch", train.batch, "Sequences per step");
    c_train->add_option("--lr", train.lr, "Adam learning rate");
    c_train->add_option("--clip", train.clip, "Global gradient-norm clip");
    c_train->add_option("--seed", train.seed, "Root seed");
    c_train->add_option("--out", train.out, "Model JSON path")->required();
    c_train->add_option("--curve", train.curve, "Training-curve CSV");
    c_train->add_option("--log-every", train.log_every, "Print the loss every N steps to stderr");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*c_sample) return cmd_sample(sample, out);
        if (*c_stats) return cmd_stats(stats, out);
        if (*c_eval) return cmd_eval(eval, out);
        if (*c_trace) return cmd_trace(tr, out);
        if (*c_train) return cmd_train(train, out, err);
    } catch (const UsageError &e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace nonstat
