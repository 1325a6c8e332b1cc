#pragma once

#include "roundtrip/matrix.hpp"
#include "roundtrip/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace roundtrip {

enum class ActivationKind : std::uint8_t {
    Identity = 0,
    LeakyRelu = 1,
    Sigmoid = 2,
};

struct Activation {
    ActivationKind kind = ActivationKind::Identity;
    /// Negative-side slope; only meaningful for LeakyRelu.
    double slope = 0.0;

    static Activation identity() { return {ActivationKind::Identity, 0.0}; }
    static Activation leaky_relu(double slope = 0.2);
    static Activation sigmoid() { return {ActivationKind::Sigmoid, 0.0}; }

    double apply(double pre) const noexcept;
    /// d post / d pre, given both sides of the activation.
    double derivative(double pre, double post) const noexcept;

    friend bool operator==(const Activation&, const Activation&) = default;
};

/// y = act(W x + b), with W stored out x in.
struct DenseLayer {
    Matrix weights;
    std::vector<double> bias;
    Activation activation;

    std::size_t in_dim() const noexcept { return weights.cols(); }
    std::size_t out_dim() const noexcept { return weights.rows(); }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// A chain of dense layers. Dimensions are checked at construction.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<DenseLayer> layers);

    std::size_t input_dim() const noexcept;
    std::size_t output_dim() const noexcept;
    std::size_t depth() const noexcept { return layers_.size(); }
    std::size_t parameter_count() const noexcept;

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }

    /// Mutable views over every weight and bias buffer, layer by layer
    /// (weights first). Shapes cannot be changed through them.
    std::vector<std::span<double>> parameter_blocks();

    friend bool operator==(const Mlp&, const Mlp&) = default;

private:
    std::vector<DenseLayer> layers_;
};

struct LayerGradient {
    Matrix weights;
    std::vector<double> bias;
};

/// Parameter gradients with the same layout as an Mlp.
struct MlpGradient {
    std::vector<LayerGradient> layers;

    static MlpGradient zeros_like(const Mlp& net);
    std::vector<std::span<const double>> blocks() const;
    MlpGradient& operator+=(const MlpGradient& other);
};

/// Everything backward() needs from a forward pass.
struct ForwardTrace {
    std::vector<Matrix> inputs;   // input to layer l
    std::vector<Matrix> preacts;  // W x + b of layer l
    Matrix output;
};

struct BackwardResult {
    MlpGradient params;
    Matrix input_grad;
};

Matrix forward(const Mlp& net, const Matrix& batch);
ForwardTrace forward_trace(const Mlp& net, const Matrix& batch);

/// Gradients of a loss whose derivative w.r.t. the network output is `upstream`.
BackwardResult backward(const Mlp& net, const ForwardTrace& trace, const Matrix& upstream);
/// Recomputes the forward pass.
BackwardResult backward(const Mlp& net, const Matrix& batch, const Matrix& upstream);
/// Only the input gradient; skips the parameter gradient products.
Matrix backward_input(const Mlp& net, const ForwardTrace& trace, const Matrix& upstream);

/// Directional derivative J(z) v by forward-mode propagation.
std::vector<double> jvp(const Mlp& net, std::span<const double> z, std::span<const double> v);

/// Jacobian d output / d input at z, shape output_dim x input_dim.
/// Built from input_dim forward-mode tangents propagated together.
Matrix jacobian(const Mlp& net, std::span<const double> z);
/// Same Jacobian from output_dim reverse-mode passes.
Matrix jacobian_reverse(const Mlp& net, std::span<const double> z);

enum class InitScheme : std::uint8_t {
    /// N(0, 2 / fan_in)
    HeNormal,
    /// N(0, 2 / (fan_in + fan_out))
    XavierNormal,
};

double init_variance(InitScheme scheme, std::size_t fan_in, std::size_t fan_out) noexcept;

/// Layer sizes `dims` = {in, hidden..., out}. Hidden layers use `hidden`,
/// the last layer uses `output`. Weights are drawn from `scheme`, biases are zero.
Mlp init_mlp(std::span<const std::size_t> dims, Activation hidden, Activation output, Rng& rng,
             InitScheme scheme = InitScheme::HeNormal);

} // namespace roundtrip
