#pragma once

#include "nonstat/core.hpp"
#include "nonstat/predictors.hpp"
#include "nonstat/rng.hpp"
#include "nonstat/sources.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nonstat::meta {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr int kModelFileVersion = 1;
inline constexpr std::size_t kInputSize = 2;  // one-hot of the previous symbol

enum class CellKind { plain, gated };

std::string to_string(CellKind cell);  // "rnn" / "lstm"
CellKind parse_cell_kind(const std::string &name);

struct Architecture {
    CellKind cell = CellKind::gated;
    std::size_t hidden_size = 32;
    std::vector<std::size_t> readout_sizes = {32, 32};

    friend bool operator==(const Architecture &, const Architecture &) = default;
};

// one tensor per parameter group, in the fixed order of parameter_names()
using ParameterSet = std::vector<Matrix>;

ParameterSet zeros_like(const ParameterSet &params);
double global_norm(const ParameterSet &params);
void scale(ParameterSet &params, double factor);
// a += factor * b
void axpy(ParameterSet &a, double factor, const ParameterSet &b);

struct TrainingConfig {
    PriorSpec prior = PriorSpec::ptw(5);
    Architecture arch;
    std::size_t batch_size = 32;
    std::size_t steps = 20000;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double grad_clip_norm = 1.0;
    std::uint64_t seed = 0;

    std::size_t seq_len() const { return prior.n; }
    void validate() const;
};

/* Single recurrent layer (tanh RNN or LSTM) over the one-hot previous
   symbol, a ReLU read-out stack, and a sigmoid output unit giving
   Pr(x_t = 1 | x_{<t}).

   Gated cell pre-activations are stacked [input; forget; output; candidate]. */
class RecurrentModel {
public:
    RecurrentModel() = default;

    // all parameters zero: predicts 1/2 everywhere
    static RecurrentModel zeros(const Architecture &arch);

    /* Glorot-uniform input and read-out weights, orthogonal recurrent
       blocks, forget-gate bias 1, remaining biases 0. */
    static RecurrentModel initialize(const Architecture &arch, RngStream &rng);

    const Architecture &arch() const { return m_arch; }
    const ParameterSet &parameters() const { return m_params; }
    ParameterSet &parameters() { return m_params; }
    std::vector<std::string> parameter_names() const;
    std::size_t num_parameters() const;

    const Matrix &input_weights() const { return m_params[0]; }
    const Matrix &recurrent_weights() const { return m_params[1]; }
    const Matrix &cell_bias() const { return m_params[2]; }
    std::size_t num_readout_layers() const { return m_arch.readout_sizes.size(); }
    const Matrix &readout_weights(std::size_t l) const { return m_params[3 + 2 * l]; }
    const Matrix &readout_bias(std::size_t l) const { return m_params[4 + 2 * l]; }
    const Matrix &output_weights() const { return m_params[m_params.size() - 2]; }
    const Matrix &output_bias() const { return m_params.back(); }

    std::size_t gate_rows() const;

    // throws std::invalid_argument on inconsistent shapes or non-finite values
    void validate() const;

    std::optional<TrainingConfig> training_config;
    std::uint64_t root_seed = 0;

private:
    explicit RecurrentModel(const Architecture &arch);

    Architecture m_arch;
    ParameterSet m_params;
};

// Recurrent state for a batch: one column per sequence.
struct RecurrentState {
    Matrix h;
    Matrix c;  // unused by the plain cell
};

RecurrentState initial_state(const RecurrentModel &model, std::size_t batch);

struct StepCache {
    Matrix input;        // kInputSize x B
    Matrix h_prev, c_prev;
    Matrix gates;        // activated gates (gated) or h (plain)
    Matrix c, tanh_c;    // gated only
    Matrix h;
    std::vector<Matrix> readout;  // post-ReLU activations, one per read-out layer
    Matrix logit;        // 1 x B
    Matrix p1;           // 1 x B
};

/* Advances the recurrent state by one step and returns the next-symbol
   prediction. `input` holds the previous symbols (zero columns at t = 1). */
StepCache step(const RecurrentModel &model, const Matrix &input, RecurrentState &state);

Matrix encode_inputs(const std::vector<const BinarySequence *> &batch, std::size_t t);

struct ForwardResult {
    // probs[b][t-1] = p_t for sequence b
    std::vector<std::vector<double>> probs;
    std::vector<StepCache> cache;  // one per time step
    std::vector<const BinarySequence *> batch;
    double loss = 0.0;             // mean NLL in nats over batch and time
};

// all sequences in a batch must share one length
ForwardResult forward(const RecurrentModel &model, const std::vector<const BinarySequence *> &batch);
ForwardResult forward(const RecurrentModel &model, const BinarySequence &x);

// mean negative log-likelihood in nats
double log_loss(const std::vector<double> &p1, const BinarySequence &x);

// exact gradients of the forward pass's mean log loss
ParameterSet backward(const RecurrentModel &model, const ForwardResult &fwd);

struct AdamState {
    ParameterSet m;
    ParameterSet v;
    std::uint64_t step = 0;

    static AdamState for_parameters(const ParameterSet &params);
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double grad_clip_norm = 1.0;  // <= 0 disables clipping
};

// clips the global norm of grads (in place) then applies one bias-corrected Adam step
void adam_step(ParameterSet &params, ParameterSet &grads, AdamState &state, const AdamConfig &config);

struct TrainResult {
    RecurrentModel model;
    std::vector<double> curve;  // mean training loss per step, nats
};

using TrainCallback = std::function<void(std::size_t step, double loss)>;

/* Data for step s uses sequences s*batch .. s*batch + batch - 1 drawn with
   root seed config.seed; initialization uses stream kInitStream. */
TrainResult train(const TrainingConfig &config, const TrainCallback &callback = {});

inline constexpr std::uint64_t kInitStream = std::uint64_t{1} << 62;

/* SequentialPredictor view of a model. Works for any sequence length. */
class RecurrentPredictor final : public SequentialPredictor {
public:
    explicit RecurrentPredictor(std::shared_ptr<const RecurrentModel> model, std::string label = "model");

    double predict() const override { return m_p1; }
    void update(bit_t b) override;
    LogProb log_marginal() const override { return LogProb(m_log_marginal); }
    void reset() override;
    std::unique_ptr<SequentialPredictor> clone() const override {
        return std::make_unique<RecurrentPredictor>(*this);
    }
    std::string name() const override { return m_label; }
    std::size_t time() const override { return m_t; }

private:
    std::shared_ptr<const RecurrentModel> m_model;
    std::string m_label;
    RecurrentState m_state;
    double m_p1 = 0.5;
    double m_logit = 0.0;
    double m_log_marginal = 0.0;
    std::size_t m_t = 0;
};

std::unique_ptr<SequentialPredictor> as_predictor(RecurrentModel model, std::string label = "model");

// versioned JSON model file
std::string to_json(const RecurrentModel &model);
RecurrentModel from_json(const std::string &text);
void save_model(const RecurrentModel &model, const std::string &path);
RecurrentModel load_model(const std::string &path);

}  // namespace nonstat::meta
