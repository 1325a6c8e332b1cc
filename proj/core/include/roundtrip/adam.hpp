#pragma once

#include "roundtrip/mlp.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace roundtrip {

struct AdamHyper {
    double learning_rate = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment accumulators for one parameter set, one buffer per parameter block.
class AdamState {
public:
    AdamState() = default;
    AdamState(AdamHyper hyper, std::span<const std::size_t> block_sizes);
    static AdamState for_network(const Mlp& net, AdamHyper hyper = {});

    const AdamHyper& hyper() const noexcept { return hyper_; }
    std::uint64_t step_count() const noexcept { return step_count_; }

private:
    friend void adam_step(std::span<const std::span<double>>, std::span<const std::span<const double>>,
                          AdamState&);

    AdamHyper hyper_;
    std::uint64_t step_count_ = 0;
    std::vector<std::vector<double>> first_moment_;
    std::vector<std::vector<double>> second_moment_;
};

/// One bias-corrected Adam update over matching parameter and gradient blocks.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state);

void adam_step(Mlp& net, const MlpGradient& grads, AdamState& state);

} // namespace roundtrip
