#include "nonstat/meta.hpp"

#include <cmath>

namespace nonstat::meta {

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// ln(1 + e^z)
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void require_finite(const Matrix &m, const char *what) {
    if (!m.allFinite()) throw std::runtime_error(std::string("non-finite activation in ") + what);
}

}  // namespace

RecurrentState initial_state(const RecurrentModel &model, std::size_t batch) {
    const auto h = static_cast<Eigen::Index>(model.arch().hidden_size);
    const auto b = static_cast<Eigen::Index>(batch);
    RecurrentState s;
    s.h = Matrix::Zero(h, b);
    if (model.arch().cell == CellKind::gated) s.c = Matrix::Zero(h, b);
    return s;
}

StepCache step(const RecurrentModel &model, const Matrix &input, RecurrentState &state) {
    const auto hidden = static_cast<Eigen::Index>(model.arch().hidden_size);
    StepCache sc;
    sc.input = input;
    sc.h_prev = state.h;

    Matrix pre = model.input_weights() * input + model.recurrent_weights() * state.h;
    pre.colwise() += model.cell_bias().col(0);

    if (model.arch().cell == CellKind::gated) {
        sc.c_prev = state.c;
        sc.gates.resize(pre.rows(), pre.cols());
        sc.gates.topRows(3 * hidden) = pre.topRows(3 * hidden).unaryExpr([](double z) { return sigmoid(z); });
        sc.gates.bottomRows(hidden) = pre.bottomRows(hidden).array().tanh();
        auto in = sc.gates.middleRows(0, hidden).array();
        auto forget = sc.gates.middleRows(hidden, hidden).array();
        auto out = sc.gates.middleRows(2 * hidden, hidden).array();
        auto cand = sc.gates.middleRows(3 * hidden, hidden).array();
        sc.c = (forget * state.c.array() + in * cand).matrix();
        sc.tanh_c = sc.c.array().tanh().matrix();
        sc.h = (out * sc.tanh_c.array()).matrix();
        state.c = sc.c;
    } else {
        sc.h = pre.array().tanh().matrix();
        sc.gates = sc.h;
    }
    require_finite(sc.h, "recurrent cell");
    state.h = sc.h;

    const Matrix *z = &sc.h;
    sc.readout.reserve(model.num_readout_layers());
    for (std::size_t l = 0; l < model.num_readout_layers(); ++l) {
        Matrix a = model.readout_weights(l) * *z;
        a.colwise() += model.readout_bias(l).col(0);
        sc.readout.push_back(a.cwiseMax(0.0));
        z = &sc.readout.back();
    }
    sc.logit = model.output_weights() * *z;
    sc.logit.array() += model.output_bias()(0, 0);
    require_finite(sc.logit, "output unit");
    sc.p1 = sc.logit.unaryExpr([](double v) { return sigmoid(v); });
    return sc;
}

Matrix encode_inputs(const std::vector<const BinarySequence *> &batch, std::size_t t) {
    Matrix input = Matrix::Zero(kInputSize, static_cast<Eigen::Index>(batch.size()));
    if (t > 1) {
        for (std::size_t b = 0; b < batch.size(); ++b)
            input(batch[b]->at(t - 1), static_cast<Eigen::Index>(b)) = 1.0;
    }
    return input;
}

ForwardResult forward(const RecurrentModel &model, const std::vector<const BinarySequence *> &batch) {
    if (batch.empty()) throw std::invalid_argument("forward: empty batch");
    const std::size_t len = batch.front()->size();
    for (const BinarySequence *x : batch)
        if (x->size() != len) throw std::invalid_argument("forward: sequences in a batch must share one length");

    ForwardResult fr;
    fr.batch = batch;
    fr.probs.assign(batch.size(), std::vector<double>(len));
    fr.cache.reserve(len);
    RecurrentState state = initial_state(model, batch.size());
    double nll = 0.0;
    for (std::size_t t = 1; t <= len; ++t) {
        fr.cache.push_back(step(model, encode_inputs(batch, t), state));
        const StepCache &sc = fr.cache.back();
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const double z = sc.logit(0, static_cast<Eigen::Index>(b));
            fr.probs[b][t - 1] = sc.p1(0, static_cast<Eigen::Index>(b));
            // -ln sigma(z) = softplus(-z), -ln(1 - sigma(z)) = softplus(z)
            nll += batch[b]->at(t) ? softplus(-z) : softplus(z);
        }
    }
    if (len > 0) fr.loss = nll / static_cast<double>(len * batch.size());
    if (!std::isfinite(fr.loss)) throw std::runtime_error("forward: non-finite loss");
    return fr;
}

ForwardResult forward(const RecurrentModel &model, const BinarySequence &x) {
    return forward(model, std::vector<const BinarySequence *>{&x});
}

double log_loss(const std::vector<double> &p1, const BinarySequence &x) {
    if (p1.size() != x.size()) throw std::invalid_argument("log_loss: length mismatch");
    if (x.empty()) return 0.0;
    double nll = 0.0;
    for (std::size_t t = 1; t <= x.size(); ++t) nll -= std::log(x.at(t) ? p1[t - 1] : 1.0 - p1[t - 1]);
    return nll / static_cast<double>(x.size());
}

ParameterSet backward(const RecurrentModel &model, const ForwardResult &fwd) {
    const auto &batch = fwd.batch;
    const std::size_t len = fwd.cache.size();
    ParameterSet grads = zeros_like(model.parameters());
    if (len == 0) return grads;

    const auto hidden = static_cast<Eigen::Index>(model.arch().hidden_size);
    const auto width = static_cast<Eigen::Index>(batch.size());
    const bool gated = model.arch().cell == CellKind::gated;
    const double norm = 1.0 / static_cast<double>(len * batch.size());
    const std::size_t layers = model.num_readout_layers();

    Matrix &g_in = grads[0];
    Matrix &g_rec = grads[1];
    Matrix &g_bias = grads[2];
    Matrix &g_out_w = grads[grads.size() - 2];
    Matrix &g_out_b = grads.back();

    Matrix dh_next = Matrix::Zero(hidden, width);
    Matrix dc_next = gated ? Matrix::Zero(hidden, width) : Matrix();

    for (std::size_t t = len; t-- > 0;) {
        const StepCache &sc = fwd.cache[t];

        Matrix dlogit(1, width);
        for (Eigen::Index b = 0; b < width; ++b)
            dlogit(0, b) = (sc.p1(0, b) - static_cast<double>(batch[static_cast<std::size_t>(b)]->at(t + 1))) * norm;

        const Matrix &top = layers ? sc.readout.back() : sc.h;
        g_out_w.noalias() += dlogit * top.transpose();
        g_out_b(0, 0) += dlogit.sum();
        Matrix dz = model.output_weights().transpose() * dlogit;

        for (std::size_t l = layers; l-- > 0;) {
            Matrix dpre = (dz.array() * (sc.readout[l].array() > 0.0).cast<double>()).matrix();
            const Matrix &below = l ? sc.readout[l - 1] : sc.h;
            grads[3 + 2 * l].noalias() += dpre * below.transpose();
            grads[4 + 2 * l] += dpre.rowwise().sum();
            dz = model.readout_weights(l).transpose() * dpre;
        }

        Matrix dh = dz + dh_next;
        Matrix dpre;
        if (gated) {
            auto in = sc.gates.middleRows(0, hidden).array();
            auto forget = sc.gates.middleRows(hidden, hidden).array();
            auto out = sc.gates.middleRows(2 * hidden, hidden).array();
            auto cand = sc.gates.middleRows(3 * hidden, hidden).array();
            auto tc = sc.tanh_c.array();

            Matrix dc = (dh.array() * out * (1.0 - tc.square()) + dc_next.array()).matrix();
            dpre.resize(4 * hidden, width);
            dpre.middleRows(0, hidden) = (dc.array() * cand * in * (1.0 - in)).matrix();
            dpre.middleRows(hidden, hidden) = (dc.array() * sc.c_prev.array() * forget * (1.0 - forget)).matrix();
            dpre.middleRows(2 * hidden, hidden) = (dh.array() * tc * out * (1.0 - out)).matrix();
            dpre.middleRows(3 * hidden, hidden) = (dc.array() * in * (1.0 - cand.square())).matrix();
            dc_next = (dc.array() * forget).matrix();
        } else {
            dpre = (dh.array() * (1.0 - sc.h.array().square())).matrix();
        }

        g_in.noalias() += dpre * sc.input.transpose();
        g_rec.noalias() += dpre * sc.h_prev.transpose();
        g_bias += dpre.rowwise().sum();
        dh_next = model.recurrent_weights().transpose() * dpre;
    }
    return grads;
}

// RecurrentPredictor

RecurrentPredictor::RecurrentPredictor(std::shared_ptr<const RecurrentModel> model, std::string label)
    : m_model(std::move(model)), m_label(std::move(label)) {
    if (!m_model) throw std::invalid_argument("recurrent predictor: null model");
    reset();
}

void RecurrentPredictor::reset() {
    m_state = initial_state(*m_model, 1);
    m_log_marginal = 0.0;
    m_t = 0;
    StepCache sc = step(*m_model, Matrix::Zero(kInputSize, 1), m_state);
    m_p1 = sc.p1(0, 0);
    m_logit = sc.logit(0, 0);
}

void RecurrentPredictor::update(bit_t b) {
    m_log_marginal -= b ? softplus(-m_logit) : softplus(m_logit);
    Matrix input = Matrix::Zero(kInputSize, 1);
    input(b, 0) = 1.0;
    StepCache sc = step(*m_model, input, m_state);
    m_p1 = sc.p1(0, 0);
    m_logit = sc.logit(0, 0);
    ++m_t;
}

std::unique_ptr<SequentialPredictor> as_predictor(RecurrentModel model, std::string label) {
    return std::make_unique<RecurrentPredictor>(std::make_shared<const RecurrentModel>(std::move(model)),
                                                std::move(label));
}

}  // namespace nonstat::meta
