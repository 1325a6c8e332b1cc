#pragma once

#include "roundtrip/adam.hpp"
#include "roundtrip/dataset.hpp"
#include "roundtrip/mlp.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace roundtrip {

/// Fully-connected stack: `depth` dense layers in total, the first depth - 1
/// of them hidden with `width` units, the last one projecting to the output.
struct NetSpec {
    std::size_t depth = 1;
    std::size_t width = 0;

    friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

struct Architecture {
    NetSpec g;
    NetSpec h;
    NetSpec dx;
    NetSpec dz;

    /// G 10x512, H 10x256, D_x 4x256, D_z 2x128.
    static Architecture paper();
    /// G 4x128, H 4x64, D_x 3x64, D_z 2x32.
    static Architecture small();
    static std::optional<Architecture> preset(const std::string& name);
};

/// Spherical multivariate Student's t used as the importance proposal.
struct ProposalParams {
    double dof = 5.0;
    double scale = 1.0;
};

struct RoundtripConfig {
    std::size_t latent_dim = 1;
    /// Data dimension; 0 means "take it from the training data".
    std::size_t data_dim = 0;
    double alpha = 10.0;
    double beta = 10.0;
    std::vector<double> sigma_grid{0.01, 0.05, 0.1, 0.2, 0.4, 0.5};
    /// Skip selection and use this value.
    std::optional<double> fixed_sigma;
    std::size_t pretrain_epochs = 20;
    std::size_t batch_size = 64;
    /// 0 means ceil(train rows / batch size).
    std::size_t iterations_per_epoch = 0;
    std::size_t patience_epochs = 10;
    std::size_t max_epochs = 200;
    std::size_t val_is_samples = 2000;
    /// Validation rows used for model selection; 0 means all.
    std::size_t val_max_points = 0;
    ProposalParams proposal;
    AdamHyper adam;
    double leaky_slope = 0.2;
    InitScheme init = InitScheme::HeNormal;
    Architecture arch = Architecture::paper();
    std::uint64_t seed = 0;

    /// Throws InputError describing the first violated constraint.
    void validate() const;
};

/// The trained pair of mappings plus the noise scale and the normalization
/// that was applied to the training data.
struct RoundtripModel {
    Mlp g;  // latent (m) -> data (n)
    Mlp h;  // data (n) -> latent (m)
    double sigma = 1.0;
    NormStats norm;

    std::size_t latent_dim() const noexcept { return g.input_dim(); }
    std::size_t data_dim() const noexcept { return g.output_dim(); }
    void validate() const;

    friend bool operator==(const RoundtripModel&, const RoundtripModel&) = default;
};

/// Dimension list {in, width x (depth - 1), out} for a NetSpec.
std::vector<std::size_t> layer_dims(const NetSpec& spec, std::size_t in, std::size_t out);

} // namespace roundtrip
