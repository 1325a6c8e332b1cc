#pragma once

#include "roundtrip/matrix.hpp"

#include <span>

namespace roundtrip {

// Least-squares adversarial objectives. Expectations are batch means; the
// discriminator outputs are one scalar per sample.

struct DiscriminatorLosses {
    double dx = 0.0;  // mean (D_x(x) - 1)^2 + mean D_x(G(z))^2
    double dz = 0.0;  // mean (D_z(z) - 1)^2 + mean D_z(H(x))^2
};

struct GeneratorAdvLosses {
    double g = 0.0;  // mean (D_x(G(z)) - 1)^2
    double h = 0.0;  // mean (D_z(H(x)) - 1)^2
};

DiscriminatorLosses discriminator_losses(std::span<const double> dx_on_real,
                                         std::span<const double> dx_on_fake,
                                         std::span<const double> dz_on_real,
                                         std::span<const double> dz_on_fake);

GeneratorAdvLosses generator_adv_losses(std::span<const double> dx_on_fake,
                                        std::span<const double> dz_on_fake);

/// alpha * mean_b ||x_b - x_cycled_b||^2 + beta * mean_b ||z_b - z_cycled_b||^2
double roundtrip_loss(const Matrix& x_batch, const Matrix& x_cycled, const Matrix& z_batch,
                      const Matrix& z_cycled, double alpha, double beta);

/// mean_b (out_b - target)^2
double least_squares_loss(std::span<const double> outputs, double target);
/// d/d out of least_squares_loss, as a B x 1 matrix.
Matrix least_squares_grad(std::span<const double> outputs, double target);

/// weight * mean_b ||reference_b - cycled_b||^2
double cycle_loss(const Matrix& reference, const Matrix& cycled, double weight);
/// d/d cycled of cycle_loss.
Matrix cycle_loss_grad(const Matrix& reference, const Matrix& cycled, double weight);

} // namespace roundtrip
