#pragma once

#include "roundtrip/adam.hpp"
#include "roundtrip/model.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace roundtrip {

/// The two mapping networks and their discriminators.
struct Networks {
    Mlp g;   // m -> n
    Mlp h;   // n -> m
    Mlp dx;  // n -> 1
    Mlp dz;  // m -> 1
};

Networks make_networks(const RoundtripConfig& config, std::size_t data_dim, Rng& rng);

struct Optimizers {
    AdamState g, h, dx, dz;

    static Optimizers for_networks(const Networks& nets, const AdamHyper& hyper);
};

/// Which side of the alternating update is applied.
struct UpdateMask {
    bool generators = true;
    bool discriminators = true;
};

struct IterationLosses {
    double g_adv = 0.0;
    double h_adv = 0.0;
    double roundtrip = 0.0;
    double dx = 0.0;
    double dz = 0.0;

    double generator_total() const noexcept { return g_adv + h_adv + roundtrip; }
    double discriminator_total() const noexcept { return dx + dz; }
};

/// One alternating iteration: an Adam step on G and H against
/// L_GAN(G) + L_GAN(H) + L_RT, then an Adam step on D_x and D_z against
/// L_GAN(D_x) + L_GAN(D_z) (recomputed with the updated mappings).
/// The generator losses reported are those before the generator update.
IterationLosses train_iteration(Networks& nets, Optimizers& opt, const Matrix& x_batch,
                                const Matrix& z_batch, double alpha, double beta,
                                UpdateMask mask = {});

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double generator_loss = 0.0;
    double discriminator_loss = 0.0;
    /// Mean validation log-likelihood at `sigma`; NaN while sigma is not yet
    /// selected (pretraining).
    double val_log_likelihood = std::numeric_limits<double>::quiet_NaN();
    double sigma = std::numeric_limits<double>::quiet_NaN();
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    double chosen_sigma = std::numeric_limits<double>::quiet_NaN();
    /// Validation log-likelihood of every grid sigma at the selection point.
    std::vector<double> sigma_scores;
    std::size_t selection_epoch = 0;
    std::size_t best_epoch = 0;
    std::size_t stopped_epoch = 0;
    double best_val_log_likelihood = -std::numeric_limits<double>::infinity();
};

struct TrainResult {
    RoundtripModel model;
    TrainLog log;
};

struct TrainHooks {
    std::function<void(const EpochRecord&)> on_epoch;
};

/// Alternating adversarial + roundtrip training on model-space data.
/// Sigma is chosen from the grid after `pretrain_epochs` by validation
/// log-likelihood (ties -> smallest), then training stops once validation
/// log-likelihood has not improved for `patience_epochs` epochs. The returned
/// model holds the parameters of the best validation epoch.
TrainResult train(const Matrix& train_data, const Matrix& validation_data,
                  const RoundtripConfig& config, const TrainHooks& hooks = {});

/// Mean importance-sampled log-likelihood of `data` for every sigma in `sigmas`.
std::vector<double> validation_log_likelihood(const Networks& nets, const Matrix& data,
                                              std::span<const double> sigmas,
                                              const RoundtripConfig& config);

/// Index of the best score, ties broken toward the smallest sigma.
std::size_t select_sigma(std::span<const double> sigmas, std::span<const double> scores);

} // namespace roundtrip
