#include "roundtrip/model.hpp"

#include "roundtrip/errors.hpp"

#include <cmath>

namespace roundtrip {

Architecture Architecture::paper() {
    return {{10, 512}, {10, 256}, {4, 256}, {2, 128}};
}

Architecture Architecture::small() {
    return {{4, 128}, {4, 64}, {3, 64}, {2, 32}};
}

std::optional<Architecture> Architecture::preset(const std::string& name) {
    if (name == "paper") {
        return paper();
    }
    if (name == "small") {
        return small();
    }
    return std::nullopt;
}

std::vector<std::size_t> layer_dims(const NetSpec& spec, std::size_t in, std::size_t out) {
    if (spec.depth == 0) {
        throw InputError("network depth must be at least 1");
    }
    if (spec.depth > 1 && spec.width == 0) {
        throw InputError("hidden width must be positive");
    }
    std::vector<std::size_t> dims{in};
    for (std::size_t i = 0; i + 1 < spec.depth; ++i) {
        dims.push_back(spec.width);
    }
    dims.push_back(out);
    return dims;
}

void RoundtripConfig::validate() const {
    if (latent_dim == 0) {
        throw InputError("latent dimension must be at least 1");
    }
    if (!(alpha >= 0.0) || !(beta >= 0.0)) {
        throw InputError("alpha and beta must be non-negative");
    }
    if (fixed_sigma) {
        if (!(*fixed_sigma > 0.0) || !std::isfinite(*fixed_sigma)) {
            throw InputError("fixed sigma must be positive");
        }
    } else if (sigma_grid.empty()) {
        throw InputError("sigma grid is empty");
    }
    for (double s : sigma_grid) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw InputError("sigma grid entries must be positive");
        }
    }
    if (batch_size == 0) {
        throw InputError("batch size must be positive");
    }
    if (val_is_samples == 0) {
        throw InputError("validation importance samples must be positive");
    }
    if (!(proposal.dof > 0.0) || !(proposal.scale > 0.0)) {
        throw InputError("proposal dof and scale must be positive");
    }
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
        throw InputError("leaky ReLU slope must lie in (0, 1)");
    }
    for (const NetSpec* spec : {&arch.g, &arch.h, &arch.dx, &arch.dz}) {
        if (spec->depth == 0 || (spec->depth > 1 && spec->width == 0)) {
            throw InputError("every network needs depth >= 1 and a positive hidden width");
        }
    }
    // constructing a state validates the Adam hyperparameters
    (void)AdamState(adam, {});
}

void RoundtripModel::validate() const {
    if (g.depth() == 0 || h.depth() == 0) {
        throw ShapeError("model networks are empty");
    }
    if (g.input_dim() != h.output_dim() || g.output_dim() != h.input_dim()) {
        throw ShapeError("G and H dimensions are not mutually inverse");
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw InputError("model sigma must be positive");
    }
    if (!norm.is_identity() && (norm.dim() != data_dim() || norm.maxs.size() != norm.mins.size())) {
        throw ShapeError("normalization statistics do not match the data dimension");
    }
}

} // namespace roundtrip
