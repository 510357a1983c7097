#include "nonstat/meta.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace nonstat::meta {

using nlohmann::json;

std::string to_string(CellKind cell) { return cell == CellKind::gated ? "lstm" : "rnn"; }

CellKind parse_cell_kind(const std::string &name) {
    if (name == "lstm" || name == "gated") return CellKind::gated;
    if (name == "rnn" || name == "plain") return CellKind::plain;
    throw std::invalid_argument("unknown architecture '" + name + "' (expected rnn or lstm)");
}

ParameterSet zeros_like(const ParameterSet &params) {
    ParameterSet out;
    out.reserve(params.size());
    for (const Matrix &m : params) out.push_back(Matrix::Zero(m.rows(), m.cols()));
    return out;
}

double global_norm(const ParameterSet &params) {
    double sq = 0.0;
    for (const Matrix &m : params) sq += m.squaredNorm();
    return std::sqrt(sq);
}

void scale(ParameterSet &params, double factor) {
    for (Matrix &m : params) m *= factor;
}

void axpy(ParameterSet &a, double factor, const ParameterSet &b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += factor * b[i];
}

void TrainingConfig::validate() const {
    prior.validate();
    if (arch.hidden_size == 0) throw std::invalid_argument("training: hidden size must be positive");
    for (std::size_t s : arch.readout_sizes)
        if (s == 0) throw std::invalid_argument("training: read-out layer sizes must be positive");
    if (batch_size == 0) throw std::invalid_argument("training: batch size must be positive");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("training: learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw std::invalid_argument("training: Adam betas must lie in [0,1)");
    if (!(adam_eps > 0.0)) throw std::invalid_argument("training: Adam epsilon must be positive");
    if (!(grad_clip_norm > 0.0)) throw std::invalid_argument("training: gradient clip norm must be positive");
}

RecurrentModel::RecurrentModel(const Architecture &arch) : m_arch(arch) {
    if (arch.hidden_size == 0) throw std::invalid_argument("model: hidden size must be positive");
    const auto hidden = static_cast<Eigen::Index>(arch.hidden_size);
    const auto gates = static_cast<Eigen::Index>(gate_rows());
    m_params.push_back(Matrix::Zero(gates, kInputSize));
    m_params.push_back(Matrix::Zero(gates, hidden));
    m_params.push_back(Matrix::Zero(gates, 1));
    Eigen::Index prev = hidden;
    for (std::size_t size : arch.readout_sizes) {
        if (size == 0) throw std::invalid_argument("model: read-out layer sizes must be positive");
        const auto rows = static_cast<Eigen::Index>(size);
        m_params.push_back(Matrix::Zero(rows, prev));
        m_params.push_back(Matrix::Zero(rows, 1));
        prev = rows;
    }
    m_params.push_back(Matrix::Zero(1, prev));
    m_params.push_back(Matrix::Zero(1, 1));
}

std::size_t RecurrentModel::gate_rows() const {
    return m_arch.cell == CellKind::gated ? 4 * m_arch.hidden_size : m_arch.hidden_size;
}

RecurrentModel RecurrentModel::zeros(const Architecture &arch) { return RecurrentModel(arch); }

namespace {

void glorot_uniform(Matrix &w, RngStream &rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index c = 0; c < w.cols(); ++c)
        for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
}

Matrix orthogonal(Eigen::Index n, RngStream &rng) {
    Matrix g(n, n);
    for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index r = 0; r < n; ++r) g(r, c) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    Matrix rmat = qr.matrixQR().triangularView<Eigen::Upper>();
    // sign fix makes the distribution uniform over the orthogonal group
    for (Eigen::Index i = 0; i < n; ++i)
        if (rmat(i, i) < 0) q.col(i) *= -1.0;
    return q;
}

}  // namespace

RecurrentModel RecurrentModel::initialize(const Architecture &arch, RngStream &rng) {
    RecurrentModel model(arch);
    const auto hidden = static_cast<Eigen::Index>(arch.hidden_size);
    auto &p = model.m_params;

    glorot_uniform(p[0], rng);
    for (Eigen::Index block = 0; block < p[1].rows() / hidden; ++block)
        p[1].block(block * hidden, 0, hidden, hidden) = orthogonal(hidden, rng);
    if (arch.cell == CellKind::gated) p[2].block(hidden, 0, hidden, 1).setOnes();

    for (std::size_t l = 0; l < arch.readout_sizes.size(); ++l) glorot_uniform(p[3 + 2 * l], rng);
    glorot_uniform(p[p.size() - 2], rng);
    return model;
}

std::vector<std::string> RecurrentModel::parameter_names() const {
    std::vector<std::string> names = {"cell.input_weights", "cell.recurrent_weights", "cell.bias"};
    for (std::size_t l = 0; l < m_arch.readout_sizes.size(); ++l) {
        names.push_back("readout." + std::to_string(l) + ".weights");
        names.push_back("readout." + std::to_string(l) + ".bias");
    }
    names.push_back("output.weights");
    names.push_back("output.bias");
    return names;
}

std::size_t RecurrentModel::num_parameters() const {
    std::size_t n = 0;
    for (const Matrix &m : m_params) n += static_cast<std::size_t>(m.size());
    return n;
}

void RecurrentModel::validate() const {
    RecurrentModel reference(m_arch);
    if (reference.m_params.size() != m_params.size())
        throw std::invalid_argument("model: wrong number of parameter tensors");
    auto names = parameter_names();
    for (std::size_t i = 0; i < m_params.size(); ++i) {
        if (m_params[i].rows() != reference.m_params[i].rows() || m_params[i].cols() != reference.m_params[i].cols())
            throw std::invalid_argument("model: tensor '" + names[i] + "' has a shape inconsistent with the architecture");
        if (!m_params[i].allFinite()) throw std::invalid_argument("model: tensor '" + names[i] + "' is not finite");
    }
}

// serialization

namespace {

json config_to_json(const TrainingConfig &c) {
    return json{{"prior", {{"kind", to_string(c.prior.kind)},
                           {"length", c.prior.n},
                           {"period", c.prior.period},
                           {"max_len", c.prior.max_len},
                           {"depth", c.prior.depth}}},
                {"seq_len", c.seq_len()},
                {"batch_size", c.batch_size},
                {"steps", c.steps},
                {"learning_rate", c.learning_rate},
                {"adam_betas", {c.beta1, c.beta2}},
                {"adam_eps", c.adam_eps},
                {"grad_clip_norm", c.grad_clip_norm},
                {"seed", c.seed}};
}

TrainingConfig config_from_json(const json &j, const Architecture &arch) {
    TrainingConfig c;
    const json &p = j.at("prior");
    c.prior.kind = parse_prior_kind(p.at("kind").get<std::string>());
    c.prior.n = p.at("length").get<std::size_t>();
    c.prior.period = p.at("period").get<std::size_t>();
    c.prior.max_len = p.at("max_len").get<std::size_t>();
    c.prior.depth = p.at("depth").get<unsigned>();
    c.arch = arch;
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.steps = j.at("steps").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.at("adam_betas").at(0).get<double>();
    c.beta2 = j.at("adam_betas").at(1).get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.grad_clip_norm = j.at("grad_clip_norm").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace

std::string to_json(const RecurrentModel &model) {
    json params = json::object();
    auto names = model.parameter_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        const Matrix &m = model.parameters()[i];
        std::vector<double> data;
        data.reserve(static_cast<std::size_t>(m.size()));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
        params[names[i]] = json{{"shape", {m.rows(), m.cols()}}, {"data", data}};
    }
    json doc{{"version", kModelFileVersion},
             {"arch", to_string(model.arch().cell)},
             {"hidden_size", model.arch().hidden_size},
             {"readout_sizes", model.arch().readout_sizes},
             {"parameters", params},
             {"training_config", model.training_config ? config_to_json(*model.training_config) : json(nullptr)},
             {"root_seed", model.root_seed}};
    return doc.dump(1);
}

RecurrentModel from_json(const std::string &text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception &e) {
        throw std::invalid_argument(std::string("model file: ") + e.what());
    }
    try {
        int version = doc.at("version").get<int>();
        if (version != kModelFileVersion)
            throw std::invalid_argument("model file: unsupported version " + std::to_string(version));
        Architecture arch;
        arch.cell = parse_cell_kind(doc.at("arch").get<std::string>());
        arch.hidden_size = doc.at("hidden_size").get<std::size_t>();
        arch.readout_sizes = doc.at("readout_sizes").get<std::vector<std::size_t>>();

        RecurrentModel model = RecurrentModel::zeros(arch);
        auto names = model.parameter_names();
        const json &params = doc.at("parameters");
        if (params.size() != names.size()) throw std::invalid_argument("model file: unexpected parameter tensors");
        for (std::size_t i = 0; i < names.size(); ++i) {
            const json &t = params.at(names[i]);
            auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
            auto data = t.at("data").get<std::vector<double>>();
            Matrix &m = model.parameters()[i];
            if (shape.size() != 2 || shape[0] != m.rows() || shape[1] != m.cols())
                throw std::invalid_argument("model file: tensor '" + names[i] + "' has the wrong shape");
            if (data.size() != static_cast<std::size_t>(m.size()))
                throw std::invalid_argument("model file: tensor '" + names[i] + "' has the wrong element count");
            std::size_t k = 0;
            for (Eigen::Index r = 0; r < m.rows(); ++r)
                for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data[k++];
        }
        model.validate();
        if (!doc.at("training_config").is_null())
            model.training_config = config_from_json(doc.at("training_config"), arch);
        model.root_seed = doc.at("root_seed").get<std::uint64_t>();
        return model;
    } catch (const json::exception &e) {
        throw std::invalid_argument(std::string("model file: ") + e.what());
    }
}

void save_model(const RecurrentModel &model, const std::string &path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os << to_json(model) << '\n';
    if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

RecurrentModel load_model(const std::string &path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open model file '" + path + "'");
    std::ostringstream buf;
    buf << is.rdbuf();
    return from_json(buf.str());
}

}  // namespace nonstat::meta
