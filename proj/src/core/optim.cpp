// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/optim.hpp"

#include <cmath>

#include "core/error.hpp"

namespace duration {

AdamState AdamState::for_parameters(const ParameterSet& params, AdamHyper hyper) {
    AdamState s;
    s.hyper = hyper;
    for (std::size_t i = 0; i < params.size(); ++i) {
        s.first_moment.emplace_back(params[i].rows(), params[i].cols());
        s.second_moment.emplace_back(params[i].rows(), params[i].cols());
    }
    return s;
}

void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state) {
    require(grads.size() == params.size() && state.first_moment.size() == params.size(),
            ErrorKind::InvalidArgument, "adam_step: parameter/gradient/state count mismatch");
    for (std::size_t p = 0; p < params.size(); ++p) {
        require(grads[p].same_shape(params[p]) && state.first_moment[p].same_shape(params[p]),
                ErrorKind::InvalidArgument, "adam_step: shape mismatch for '" + params.name(p) + "'");
        if (!all_finite(grads[p].values()))
            fail(ErrorKind::Numeric, "non-finite gradient for '" + params.name(p) + "', step aborted");
    }

    const auto& h = state.hyper;
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(h.beta1, t);
    const double correction2 = 1.0 - std::pow(h.beta2, t);

    for (std::size_t p = 0; p < params.size(); ++p) {
        auto w = params[p].values();
        auto g = grads[p].values();
        auto m = state.first_moment[p].values();
        auto v = state.second_moment[p].values();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
            v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            w[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
        }
    }
}

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(fan_in, fan_out);
    for (auto& x : w.values()) x = dist(rng);
    return w;
}

}  // namespace duration
