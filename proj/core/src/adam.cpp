#include "roundtrip/adam.hpp"

#include "roundtrip/errors.hpp"

#include <cmath>

namespace roundtrip {

AdamState::AdamState(AdamHyper hyper, std::span<const std::size_t> block_sizes) : hyper_(hyper) {
    if (!(hyper.beta1 > 0.0 && hyper.beta1 < 1.0 && hyper.beta2 > 0.0 && hyper.beta2 < 1.0)) {
        throw InputError("Adam betas must lie in (0, 1)");
    }
    if (!(hyper.learning_rate > 0.0) || !(hyper.epsilon > 0.0)) {
        throw InputError("Adam learning rate and epsilon must be positive");
    }
    for (std::size_t n : block_sizes) {
        first_moment_.emplace_back(n, 0.0);
        second_moment_.emplace_back(n, 0.0);
    }
}

AdamState AdamState::for_network(const Mlp& net, AdamHyper hyper) {
    std::vector<std::size_t> sizes;
    for (const auto& layer : net.layers()) {
        sizes.push_back(layer.weights.size());
        sizes.push_back(layer.bias.size());
    }
    return AdamState(hyper, sizes);
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.first_moment_.size()) {
        throw ShapeError("adam_step: parameter, gradient and state block counts differ");
    }
    for (std::size_t b = 0; b < params.size(); ++b) {
        if (params[b].size() != grads[b].size() ||
            params[b].size() != state.first_moment_[b].size()) {
            throw ShapeError("adam_step: block " + std::to_string(b) + " size mismatch");
        }
    }

    bool all_zero = true;
    for (const auto& g : grads) {
        for (double v : g) {
            all_zero = all_zero && v == 0.0;
        }
    }

    ++state.step_count_;
    const auto& h = state.hyper_;
    const double t = static_cast<double>(state.step_count_);
    const double correction1 = 1.0 - std::pow(h.beta1, t);
    const double correction2 = 1.0 - std::pow(h.beta2, t);

    for (std::size_t b = 0; b < params.size(); ++b) {
        auto p = params[b];
        auto g = grads[b];
        auto& m = state.first_moment_[b];
        auto& v = state.second_moment_[b];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
            v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
            if (all_zero) {
                // moments still decay, but a zero gradient never moves a parameter
                continue;
            }
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            p[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
        }
    }
}

void adam_step(Mlp& net, const MlpGradient& grads, AdamState& state) {
    const auto params = net.parameter_blocks();
    const auto g = grads.blocks();
    adam_step(std::span<const std::span<double>>(params), std::span<const std::span<const double>>(g),
              state);
}

} // namespace roundtrip
