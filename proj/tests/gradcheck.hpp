#pragma once

#include "nonstat/meta.hpp"

#include <algorithm>
#include <cmath>

namespace nonstat::testing {

struct GradCheckResult {
    double max_rel_error = 0.0;   // over entries that exceed the absolute floor
    double max_abs_error = 0.0;
    double max_rel_error_large = 0.0;  // over entries with |gradient| > 1e-3
    std::size_t failures = 0;     // entries failing both criteria
    std::size_t entries = 0;
};

// random small model with every parameter jittered so no entry is structurally zero
inline meta::RecurrentModel random_small_model(meta::CellKind cell, RngStream &rng) {
    meta::Architecture arch;
    arch.cell = cell;
    arch.hidden_size = 4;
    arch.readout_sizes = {3, 4};
    meta::RecurrentModel model = meta::RecurrentModel::initialize(arch, rng);
    for (auto &p : model.parameters())
        for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] += 0.3 * rng.normal();
    return model;
}

inline BinarySequence random_sequence(RngStream &rng, std::size_t n) {
    std::vector<bit_t> s(n);
    for (auto &b : s) b = rng.bernoulli(0.5) ? 1 : 0;
    return BinarySequence(std::move(s));
}

/* Central differences with step h against backward(); an entry passes when
   its relative error is below rel_tol or its absolute error below abs_tol. */
inline GradCheckResult gradient_check(const meta::RecurrentModel &model,
                                      const std::vector<const BinarySequence *> &batch, double h = 1e-5,
                                      double rel_tol = 1e-4, double abs_tol = 1e-7) {
    GradCheckResult out;
    meta::ParameterSet analytic = meta::backward(model, meta::forward(model, batch));
    meta::RecurrentModel probe = model;
    for (std::size_t k = 0; k < probe.parameters().size(); ++k) {
        meta::Matrix &p = probe.parameters()[k];
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            const double saved = p.data()[i];
            p.data()[i] = saved + h;
            const double up = meta::forward(probe, batch).loss;
            p.data()[i] = saved - h;
            const double down = meta::forward(probe, batch).loss;
            p.data()[i] = saved;

            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[k].data()[i];
            const double abs_err = std::abs(a - numeric);
            const double scale = std::max(std::abs(a), std::abs(numeric));
            const double rel_err = scale > 0.0 ? abs_err / scale : 0.0;
            out.max_abs_error = std::max(out.max_abs_error, abs_err);
            if (abs_err > abs_tol) out.max_rel_error = std::max(out.max_rel_error, rel_err);
            if (scale > 1e-3) out.max_rel_error_large = std::max(out.max_rel_error_large, rel_err);
            if (rel_err >= rel_tol && abs_err >= abs_tol) ++out.failures;
            ++out.entries;
        }
    }
    return out;
}

}  // namespace nonstat::testing
