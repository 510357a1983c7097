#include "nonstat/meta.hpp"

#include <cmath>

namespace nonstat::meta {

AdamState AdamState::for_parameters(const ParameterSet &params) {
    return AdamState{zeros_like(params), zeros_like(params), 0};
}

void adam_step(ParameterSet &params, ParameterSet &grads, AdamState &state, const AdamConfig &config) {
    if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size())
        throw std::invalid_argument("adam_step: parameter, gradient and moment sets differ in size");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].rows() != grads[i].rows() || params[i].cols() != grads[i].cols())
            throw std::invalid_argument("adam_step: gradient shape mismatch");
    }

    if (config.grad_clip_norm > 0.0) {
        double norm = global_norm(grads);
        if (norm > config.grad_clip_norm) scale(grads, config.grad_clip_norm / norm);
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(config.beta1, t);
    const double correction2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grads[i];
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grads[i].cwiseAbs2();
        auto m_hat = state.m[i].array() / correction1;
        auto v_hat = state.v[i].array() / correction2;
        params[i].array() -= config.learning_rate * m_hat / (v_hat.sqrt() + config.eps);
    }
}

TrainResult train(const TrainingConfig &config, const TrainCallback &callback) {
    config.validate();

    RngStream init_rng = split_stream(config.seed, kInitStream);
    TrainResult result{RecurrentModel::initialize(config.arch, init_rng), {}};
    result.model.training_config = config;
    result.model.root_seed = config.seed;
    result.curve.reserve(config.steps);

    AdamState adam = AdamState::for_parameters(result.model.parameters());
    const AdamConfig adam_config{config.learning_rate, config.beta1, config.beta2, config.adam_eps,
                                 config.grad_clip_norm};

    std::vector<BinarySequence> batch(config.batch_size);
    std::vector<const BinarySequence *> views(config.batch_size);
    for (std::size_t s = 0; s < config.steps; ++s) {
        for (std::size_t b = 0; b < config.batch_size; ++b) {
            batch[b] = sample_from_prior(config.prior, config.seed, s * config.batch_size + b).symbols;
            views[b] = &batch[b];
        }
        ForwardResult fwd;
        try {
            fwd = forward(result.model, views);
        } catch (const std::runtime_error &e) {
            throw std::runtime_error("training diverged at step " + std::to_string(s) + ": " + e.what());
        }
        if (!std::isfinite(fwd.loss))
            throw std::runtime_error("training diverged at step " + std::to_string(s) + ": non-finite loss");
        ParameterSet grads = backward(result.model, fwd);
        adam_step(result.model.parameters(), grads, adam, adam_config);
        result.curve.push_back(fwd.loss);
        if (callback) callback(s, fwd.loss);
    }
    return result;
}

}  // namespace nonstat::meta
