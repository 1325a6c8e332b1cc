#include "roundtrip/losses.hpp"

#include "roundtrip/errors.hpp"

namespace roundtrip {

namespace {

void require_nonempty(std::span<const double> v, const char* what) {
    if (v.empty()) {
        throw InputError(std::string(what) + ": empty batch");
    }
}

} // namespace

double least_squares_loss(std::span<const double> outputs, double target) {
    require_nonempty(outputs, "least-squares loss");
    double sum = 0.0;
    for (double o : outputs) {
        sum += (o - target) * (o - target);
    }
    return sum / static_cast<double>(outputs.size());
}

Matrix least_squares_grad(std::span<const double> outputs, double target) {
    require_nonempty(outputs, "least-squares gradient");
    const double scale = 2.0 / static_cast<double>(outputs.size());
    Matrix g(outputs.size(), 1);
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        g(i, 0) = scale * (outputs[i] - target);
    }
    return g;
}

DiscriminatorLosses discriminator_losses(std::span<const double> dx_on_real,
                                         std::span<const double> dx_on_fake,
                                         std::span<const double> dz_on_real,
                                         std::span<const double> dz_on_fake) {
    return {least_squares_loss(dx_on_real, 1.0) + least_squares_loss(dx_on_fake, 0.0),
            least_squares_loss(dz_on_real, 1.0) + least_squares_loss(dz_on_fake, 0.0)};
}

GeneratorAdvLosses generator_adv_losses(std::span<const double> dx_on_fake,
                                        std::span<const double> dz_on_fake) {
    return {least_squares_loss(dx_on_fake, 1.0), least_squares_loss(dz_on_fake, 1.0)};
}

double cycle_loss(const Matrix& reference, const Matrix& cycled, double weight) {
    require_same_shape(reference, cycled, "cycle loss");
    if (reference.rows() == 0) {
        throw InputError("cycle loss: empty batch");
    }
    if (weight == 0.0) {
        return 0.0;
    }
    double sum = 0.0;
    auto a = reference.values();
    auto b = cycled.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return weight * sum / static_cast<double>(reference.rows());
}

Matrix cycle_loss_grad(const Matrix& reference, const Matrix& cycled, double weight) {
    require_same_shape(reference, cycled, "cycle loss gradient");
    Matrix g(cycled.rows(), cycled.cols());
    if (weight == 0.0 || cycled.rows() == 0) {
        return g;
    }
    const double scale = -2.0 * weight / static_cast<double>(cycled.rows());
    auto a = reference.values();
    auto b = cycled.values();
    auto out = g.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = scale * (a[i] - b[i]);
    }
    return g;
}

double roundtrip_loss(const Matrix& x_batch, const Matrix& x_cycled, const Matrix& z_batch,
                      const Matrix& z_cycled, double alpha, double beta) {
    return cycle_loss(x_batch, x_cycled, alpha) + cycle_loss(z_batch, z_cycled, beta);
}

} // namespace roundtrip
