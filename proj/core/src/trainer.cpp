#include "roundtrip/trainer.hpp"

#include "roundtrip/errors.hpp"
#include "roundtrip/estimators.hpp"
#include "roundtrip/losses.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace roundtrip {

Networks make_networks(const RoundtripConfig& config, std::size_t data_dim, Rng& rng) {
    const std::size_t m = config.latent_dim;
    const std::size_t n = data_dim;
    const Activation hidden = Activation::leaky_relu(config.leaky_slope);
    const Activation linear = Activation::identity();
    Rng g_rng = rng.substream(1);
    Rng h_rng = rng.substream(2);
    Rng dx_rng = rng.substream(3);
    Rng dz_rng = rng.substream(4);
    return {
        init_mlp(layer_dims(config.arch.g, m, n), hidden, linear, g_rng, config.init),
        init_mlp(layer_dims(config.arch.h, n, m), hidden, linear, h_rng, config.init),
        init_mlp(layer_dims(config.arch.dx, n, 1), hidden, linear, dx_rng, config.init),
        init_mlp(layer_dims(config.arch.dz, m, 1), hidden, linear, dz_rng, config.init),
    };
}

Optimizers Optimizers::for_networks(const Networks& nets, const AdamHyper& hyper) {
    return {AdamState::for_network(nets.g, hyper), AdamState::for_network(nets.h, hyper),
            AdamState::for_network(nets.dx, hyper), AdamState::for_network(nets.dz, hyper)};
}

namespace {

void add_in_place(Matrix& dst, const Matrix& src) {
    require_same_shape(dst, src, "gradient sum");
    auto d = dst.values();
    auto s = src.values();
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] += s[i];
    }
}

/// Both terms of an LSGAN discriminator loss and the summed parameter gradient.
double discriminator_update(Mlp& disc, AdamState& state, const Matrix& real, const Matrix& fake,
                            bool apply) {
    const ForwardTrace on_real = forward_trace(disc, real);
    const ForwardTrace on_fake = forward_trace(disc, fake);
    const double loss = least_squares_loss(on_real.output.values(), 1.0) +
                        least_squares_loss(on_fake.output.values(), 0.0);
    if (apply) {
        MlpGradient grads =
            backward(disc, on_real, least_squares_grad(on_real.output.values(), 1.0)).params;
        grads += backward(disc, on_fake, least_squares_grad(on_fake.output.values(), 0.0)).params;
        adam_step(disc, grads, state);
    }
    return loss;
}

} // namespace

IterationLosses train_iteration(Networks& nets, Optimizers& opt, const Matrix& x_batch,
                                const Matrix& z_batch, double alpha, double beta,
                                UpdateMask mask) {
    IterationLosses losses;

    {
        const ForwardTrace g_of_z = forward_trace(nets.g, z_batch);
        const ForwardTrace h_of_x = forward_trace(nets.h, x_batch);
        const ForwardTrace dx_fake = forward_trace(nets.dx, g_of_z.output);
        const ForwardTrace dz_fake = forward_trace(nets.dz, h_of_x.output);
        const ForwardTrace h_cycle = forward_trace(nets.h, g_of_z.output);  // H(G(z))
        const ForwardTrace g_cycle = forward_trace(nets.g, h_of_x.output);  // G(H(x))

        losses.g_adv = least_squares_loss(dx_fake.output.values(), 1.0);
        losses.h_adv = least_squares_loss(dz_fake.output.values(), 1.0);
        losses.roundtrip =
            roundtrip_loss(x_batch, g_cycle.output, z_batch, h_cycle.output, alpha, beta);

        if (mask.generators) {
            // dL/dG(z): adversarial term through D_x plus latent cycle through H
            Matrix grad_x_fake =
                backward_input(nets.dx, dx_fake, least_squares_grad(dx_fake.output.values(), 1.0));
            BackwardResult through_h =
                backward(nets.h, h_cycle, cycle_loss_grad(z_batch, h_cycle.output, beta));
            add_in_place(grad_x_fake, through_h.input_grad);

            // dL/dH(x): adversarial term through D_z plus data cycle through G
            Matrix grad_z_fake =
                backward_input(nets.dz, dz_fake, least_squares_grad(dz_fake.output.values(), 1.0));
            BackwardResult through_g =
                backward(nets.g, g_cycle, cycle_loss_grad(x_batch, g_cycle.output, alpha));
            add_in_place(grad_z_fake, through_g.input_grad);

            MlpGradient g_grads = backward(nets.g, g_of_z, grad_x_fake).params;
            g_grads += through_g.params;
            MlpGradient h_grads = backward(nets.h, h_of_x, grad_z_fake).params;
            h_grads += through_h.params;

            adam_step(nets.g, g_grads, opt.g);
            adam_step(nets.h, h_grads, opt.h);
        }
    }

    const Matrix x_fake = forward(nets.g, z_batch);
    const Matrix z_fake = forward(nets.h, x_batch);
    losses.dx = discriminator_update(nets.dx, opt.dx, x_batch, x_fake, mask.discriminators);
    losses.dz = discriminator_update(nets.dz, opt.dz, z_batch, z_fake, mask.discriminators);
    return losses;
}

std::vector<double> validation_log_likelihood(const Networks& nets, const Matrix& data,
                                              std::span<const double> sigmas,
                                              const RoundtripConfig& config) {
    if (data.rows() == 0) {
        throw InputError("validation set is empty");
    }
    RoundtripModel probe{nets.g, nets.h, 1.0, {}};
    ImportanceOptions options;
    options.num_samples = config.val_is_samples;
    options.proposal = config.proposal;
    const std::uint64_t base = Rng(config.seed).substream(Stream::Validation).seed();

    const std::size_t rows =
        config.val_max_points == 0 ? data.rows() : std::min(config.val_max_points, data.rows());
    std::vector<double> totals(sigmas.size(), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto per_sigma = estimate_is_sigmas(data.row(r), probe, sigmas, options, point_seed(base, data.row(r)));
        for (std::size_t s = 0; s < sigmas.size(); ++s) {
            totals[s] += per_sigma[s];
        }
    }
    for (double& t : totals) {
        t /= static_cast<double>(rows);
    }
    return totals;
}

std::size_t select_sigma(std::span<const double> sigmas, std::span<const double> scores) {
    if (sigmas.empty() || sigmas.size() != scores.size()) {
        throw InputError("sigma selection needs one score per sigma");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < sigmas.size(); ++i) {
        const bool better = scores[i] > scores[best];
        const bool tie_smaller = scores[i] == scores[best] && sigmas[i] < sigmas[best];
        if (better || tie_smaller) {
            best = i;
        }
    }
    return best;
}

TrainResult train(const Matrix& train_data, const Matrix& validation_data,
                  const RoundtripConfig& config, const TrainHooks& hooks) {
    config.validate();
    const std::size_t n = train_data.cols();
    if (config.data_dim != 0 && config.data_dim != n) {
        throw ShapeError("configured data dimension " + std::to_string(config.data_dim) +
                         " differs from training data width " + std::to_string(n));
    }
    if (n == 0) {
        throw InputError("training data has no columns");
    }
    if (train_data.rows() < config.batch_size) {
        throw InputError("training set has " + std::to_string(train_data.rows()) +
                         " rows, fewer than the batch size " + std::to_string(config.batch_size));
    }
    if (!train_data.all_finite() || !validation_data.all_finite()) {
        throw InputError("training data contains non-finite values");
    }
    if (validation_data.cols() != n && validation_data.rows() > 0) {
        throw ShapeError("validation data width differs from training data");
    }

    const Rng root(config.seed);
    Rng init_rng = root.substream(Stream::Init);
    Networks nets = make_networks(config, n, init_rng);
    Optimizers opt = Optimizers::for_networks(nets, config.adam);
    Rng noise_rng = root.substream(Stream::LatentNoise);
    Rng data_rng = root.substream(Stream::DataShuffle);

    const std::vector<double> sigmas =
        config.fixed_sigma ? std::vector<double>{*config.fixed_sigma} : config.sigma_grid;
    const std::size_t iterations =
        config.iterations_per_epoch != 0
            ? config.iterations_per_epoch
            : (train_data.rows() + config.batch_size - 1) / config.batch_size;
    const std::size_t selection_epoch = std::min(config.pretrain_epochs, config.max_epochs);

    TrainResult result;
    TrainLog& log = result.log;
    std::optional<double> sigma;
    Mlp best_g = nets.g;
    Mlp best_h = nets.h;
    std::size_t since_improvement = 0;

    auto choose_sigma = [&](std::size_t epoch) {
        if (validation_data.rows() == 0) {
            throw InputError("sigma selection needs a non-empty validation set");
        }
        log.sigma_scores = validation_log_likelihood(nets, validation_data, sigmas, config);
        const std::size_t pick = select_sigma(sigmas, log.sigma_scores);
        sigma = sigmas[pick];
        log.chosen_sigma = *sigma;
        log.selection_epoch = epoch;
        return log.sigma_scores[pick];
    };

    if (config.max_epochs == 0) {
        // Nothing to train; still pick sigma so the model is usable.
        if (validation_data.rows() > 0) {
            choose_sigma(0);
        } else {
            log.chosen_sigma = sigmas.front();
        }
        result.model = RoundtripModel{nets.g, nets.h, log.chosen_sigma, {}};
        return result;
    }
    if (selection_epoch == 0) {
        choose_sigma(0);
    }

    const std::size_t batch = config.batch_size;
    const std::size_t m = config.latent_dim;
    std::vector<std::size_t> picks(batch);
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        double gen_sum = 0.0;
        double disc_sum = 0.0;
        for (std::size_t it = 0; it < iterations; ++it) {
            for (auto& p : picks) {
                p = data_rng.below(train_data.rows());
            }
            const Matrix x_batch = train_data.gather_rows(picks);
            const Matrix z_batch = rng_gaussian(noise_rng, batch, m);
            const IterationLosses l =
                train_iteration(nets, opt, x_batch, z_batch, config.alpha, config.beta);
            if (!std::isfinite(l.generator_total()) || !std::isfinite(l.discriminator_total())) {
                throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) +
                                     ", iteration " + std::to_string(it + 1) +
                                     " (generator " + std::to_string(l.generator_total()) +
                                     ", discriminator " + std::to_string(l.discriminator_total()) + ")");
            }
            gen_sum += l.generator_total();
            disc_sum += l.discriminator_total();
        }

        EpochRecord record;
        record.epoch = epoch;
        record.generator_loss = gen_sum / static_cast<double>(iterations);
        record.discriminator_loss = disc_sum / static_cast<double>(iterations);

        if (!sigma && epoch == selection_epoch) {
            record.val_log_likelihood = choose_sigma(epoch);
        } else if (sigma) {
            const double s = *sigma;
            record.val_log_likelihood =
                validation_log_likelihood(nets, validation_data, std::span<const double>(&s, 1), config)
                    .front();
        }
        if (sigma) {
            record.sigma = *sigma;
            if (!std::isfinite(record.val_log_likelihood)) {
                throw NumericalError("non-finite validation log-likelihood at epoch " +
                                     std::to_string(epoch));
            }
            if (record.val_log_likelihood > log.best_val_log_likelihood) {
                log.best_val_log_likelihood = record.val_log_likelihood;
                log.best_epoch = epoch;
                best_g = nets.g;
                best_h = nets.h;
                since_improvement = 0;
            } else {
                ++since_improvement;
            }
        }

        log.epochs.push_back(record);
        log.stopped_epoch = epoch;
        if (hooks.on_epoch) {
            hooks.on_epoch(record);
        }
        if (sigma && config.patience_epochs > 0 && since_improvement >= config.patience_epochs) {
            break;
        }
    }

    result.model = RoundtripModel{std::move(best_g), std::move(best_h), *sigma, {}};
    return result;
}

} // namespace roundtrip
