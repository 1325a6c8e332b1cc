#include "roundtrip/mlp.hpp"

#include "roundtrip/errors.hpp"

#include <cmath>
#include <string>

namespace roundtrip {

Activation Activation::leaky_relu(double slope) {
    if (!(slope > 0.0 && slope < 1.0)) {
        throw InputError("leaky ReLU slope must lie in (0, 1), got " + std::to_string(slope));
    }
    return {ActivationKind::LeakyRelu, slope};
}

double Activation::apply(double pre) const noexcept {
    switch (kind) {
    case ActivationKind::LeakyRelu:
        return pre > 0.0 ? pre : slope * pre;
    case ActivationKind::Sigmoid:
        return 1.0 / (1.0 + std::exp(-pre));
    case ActivationKind::Identity:
        break;
    }
    return pre;
}

double Activation::derivative(double pre, double post) const noexcept {
    switch (kind) {
    case ActivationKind::LeakyRelu:
        return pre > 0.0 ? 1.0 : slope;
    case ActivationKind::Sigmoid:
        return post * (1.0 - post);
    case ActivationKind::Identity:
        break;
    }
    return 1.0;
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) {
        throw ShapeError("an Mlp needs at least one layer");
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        if (layer.bias.size() != layer.out_dim()) {
            throw ShapeError("layer " + std::to_string(l) + ": bias length " +
                             std::to_string(layer.bias.size()) + " != output dim " +
                             std::to_string(layer.out_dim()));
        }
        if (layer.in_dim() == 0 || layer.out_dim() == 0) {
            throw ShapeError("layer " + std::to_string(l) + " has a zero dimension");
        }
        if (l > 0 && layers_[l - 1].out_dim() != layer.in_dim()) {
            throw ShapeError("layer " + std::to_string(l) + " expects " +
                             std::to_string(layer.in_dim()) + " inputs but layer " +
                             std::to_string(l - 1) + " produces " +
                             std::to_string(layers_[l - 1].out_dim()));
        }
        if (layer.activation.kind == ActivationKind::LeakyRelu &&
            !(layer.activation.slope > 0.0 && layer.activation.slope < 1.0)) {
            throw InputError("layer " + std::to_string(l) + ": leaky ReLU slope outside (0, 1)");
        }
    }
}

std::size_t Mlp::input_dim() const noexcept {
    return layers_.empty() ? 0 : layers_.front().in_dim();
}

std::size_t Mlp::output_dim() const noexcept {
    return layers_.empty() ? 0 : layers_.back().out_dim();
}

std::size_t Mlp::parameter_count() const noexcept {
    std::size_t count = 0;
    for (const auto& layer : layers_) {
        count += layer.weights.size() + layer.bias.size();
    }
    return count;
}

std::vector<std::span<double>> Mlp::parameter_blocks() {
    std::vector<std::span<double>> blocks;
    blocks.reserve(2 * layers_.size());
    for (auto& layer : layers_) {
        blocks.emplace_back(layer.weights.values());
        blocks.emplace_back(layer.bias);
    }
    return blocks;
}

MlpGradient MlpGradient::zeros_like(const Mlp& net) {
    MlpGradient g;
    g.layers.reserve(net.depth());
    for (const auto& layer : net.layers()) {
        g.layers.push_back({Matrix(layer.out_dim(), layer.in_dim()),
                            std::vector<double>(layer.out_dim(), 0.0)});
    }
    return g;
}

std::vector<std::span<const double>> MlpGradient::blocks() const {
    std::vector<std::span<const double>> out;
    out.reserve(2 * layers.size());
    for (const auto& layer : layers) {
        out.emplace_back(layer.weights.values());
        out.emplace_back(layer.bias);
    }
    return out;
}

MlpGradient& MlpGradient::operator+=(const MlpGradient& other) {
    if (other.layers.size() != layers.size()) {
        throw ShapeError("gradient layer count mismatch");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        require_same_shape(layers[l].weights, other.layers[l].weights, "gradient accumulate");
        auto dst = layers[l].weights.values();
        auto src = other.layers[l].weights.values();
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] += src[i];
        }
        for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
            layers[l].bias[i] += other.layers[l].bias[i];
        }
    }
    return *this;
}

namespace {

void check_input(const Mlp& net, const Matrix& batch) {
    if (net.depth() == 0) {
        throw ShapeError("forward through an empty network");
    }
    if (batch.cols() != net.input_dim()) {
        throw ShapeError("network expects " + std::to_string(net.input_dim()) +
                         " input columns, batch has " + std::to_string(batch.cols()));
    }
}

Matrix affine(const DenseLayer& layer, const Matrix& in) {
    Matrix pre = matmul_bt(in, layer.weights);
    for (std::size_t r = 0; r < pre.rows(); ++r) {
        auto row = pre.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] += layer.bias[c];
        }
    }
    return pre;
}

Matrix activate(const Activation& act, const Matrix& pre) {
    if (act.kind == ActivationKind::Identity) {
        return pre;
    }
    Matrix post(pre.rows(), pre.cols());
    auto src = pre.values();
    auto dst = post.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = act.apply(src[i]);
    }
    return post;
}

/// upstream * act'(pre), in place.
void scale_by_derivative(const Activation& act, const Matrix& pre, const Matrix& post,
                         Matrix& delta) {
    if (act.kind == ActivationKind::Identity) {
        return;
    }
    auto p = pre.values();
    auto q = post.values();
    auto d = delta.values();
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] *= act.derivative(p[i], q[i]);
    }
}

} // namespace

Matrix forward(const Mlp& net, const Matrix& batch) {
    check_input(net, batch);
    Matrix current = batch;
    for (const auto& layer : net.layers()) {
        Matrix pre = affine(layer, current);
        if (layer.activation.kind != ActivationKind::Identity) {
            for (double& v : pre.values()) {
                v = layer.activation.apply(v);
            }
        }
        current = std::move(pre);
    }
    return current;
}

ForwardTrace forward_trace(const Mlp& net, const Matrix& batch) {
    check_input(net, batch);
    ForwardTrace trace;
    trace.inputs.reserve(net.depth());
    trace.preacts.reserve(net.depth());
    Matrix current = batch;
    for (const auto& layer : net.layers()) {
        Matrix pre = affine(layer, current);
        Matrix post = activate(layer.activation, pre);
        trace.inputs.push_back(std::move(current));
        trace.preacts.push_back(std::move(pre));
        current = std::move(post);
    }
    trace.output = std::move(current);
    return trace;
}

namespace {

template <bool WithParams>
Matrix backward_impl(const Mlp& net, const ForwardTrace& trace, const Matrix& upstream,
                     MlpGradient* grads) {
    if (trace.inputs.size() != net.depth()) {
        throw ShapeError("forward trace does not belong to this network");
    }
    require_same_shape(trace.output, upstream, "backward upstream gradient");
    Matrix delta = upstream;
    for (std::size_t l = net.depth(); l-- > 0;) {
        const auto& layer = net.layer(l);
        const Matrix& post = (l + 1 < net.depth()) ? trace.inputs[l + 1] : trace.output;
        scale_by_derivative(layer.activation, trace.preacts[l], post, delta);
        if constexpr (WithParams) {
            auto& g = grads->layers[l];
            g.weights = matmul_at(delta, trace.inputs[l]);
            for (std::size_t r = 0; r < delta.rows(); ++r) {
                auto row = delta.row(r);
                for (std::size_t c = 0; c < row.size(); ++c) {
                    g.bias[c] += row[c];
                }
            }
        }
        delta = matmul(delta, layer.weights);
    }
    return delta;
}

} // namespace

BackwardResult backward(const Mlp& net, const ForwardTrace& trace, const Matrix& upstream) {
    BackwardResult result{MlpGradient::zeros_like(net), {}};
    result.input_grad = backward_impl<true>(net, trace, upstream, &result.params);
    return result;
}

BackwardResult backward(const Mlp& net, const Matrix& batch, const Matrix& upstream) {
    return backward(net, forward_trace(net, batch), upstream);
}

Matrix backward_input(const Mlp& net, const ForwardTrace& trace, const Matrix& upstream) {
    return backward_impl<false>(net, trace, upstream, nullptr);
}

namespace {

/// Propagates the input point together with a block of tangent columns.
Matrix propagate_tangents(const Mlp& net, std::span<const double> z, Matrix tangents) {
    Matrix point = Matrix::row_vector(z);
    check_input(net, point);
    for (const auto& layer : net.layers()) {
        Matrix pre = affine(layer, point);
        Matrix next_tangents = matmul(layer.weights, tangents);
        if (layer.activation.kind != ActivationKind::Identity) {
            for (std::size_t i = 0; i < pre.cols(); ++i) {
                const double p = pre(0, i);
                const double d = layer.activation.derivative(p, layer.activation.apply(p));
                for (double& t : next_tangents.row(i)) {
                    t *= d;
                }
            }
        }
        point = activate(layer.activation, pre);
        tangents = std::move(next_tangents);
    }
    return tangents;
}

} // namespace

std::vector<double> jvp(const Mlp& net, std::span<const double> z, std::span<const double> v) {
    if (v.size() != z.size()) {
        throw ShapeError("jvp: direction length differs from point length");
    }
    Matrix tangent(v.size(), 1, std::vector<double>(v.begin(), v.end()));
    Matrix out = propagate_tangents(net, z, std::move(tangent));
    return {out.values().begin(), out.values().end()};
}

Matrix jacobian(const Mlp& net, std::span<const double> z) {
    return propagate_tangents(net, z, Matrix::identity(z.size()));
}

Matrix jacobian_reverse(const Mlp& net, std::span<const double> z) {
    const Matrix point = Matrix::row_vector(z);
    const ForwardTrace trace = forward_trace(net, point);
    const std::size_t n = net.output_dim();
    Matrix jac(n, net.input_dim());
    for (std::size_t i = 0; i < n; ++i) {
        Matrix seed(1, n);
        seed(0, i) = 1.0;
        const Matrix row = backward_input(net, trace, seed);
        std::copy(row.values().begin(), row.values().end(), jac.row(i).begin());
    }
    return jac;
}

double init_variance(InitScheme scheme, std::size_t fan_in, std::size_t fan_out) noexcept {
    switch (scheme) {
    case InitScheme::XavierNormal:
        return 2.0 / static_cast<double>(fan_in + fan_out);
    case InitScheme::HeNormal:
        break;
    }
    return 2.0 / static_cast<double>(fan_in);
}

Mlp init_mlp(std::span<const std::size_t> dims, Activation hidden, Activation output, Rng& rng,
             InitScheme scheme) {
    if (dims.size() < 2) {
        throw InputError("init_mlp needs at least an input and an output dimension");
    }
    std::vector<DenseLayer> layers;
    layers.reserve(dims.size() - 1);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t in = dims[l];
        const std::size_t out = dims[l + 1];
        if (in == 0 || out == 0) {
            throw InputError("init_mlp: zero-width layer");
        }
        const double sd = std::sqrt(init_variance(scheme, in, out));
        DenseLayer layer;
        layer.weights = Matrix(out, in);
        for (double& w : layer.weights.values()) {
            w = sd * rng.gaussian();
        }
        layer.bias.assign(out, 0.0);
        layer.activation = (l + 2 == dims.size()) ? output : hidden;
        layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
}

} // namespace roundtrip
