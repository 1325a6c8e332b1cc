#pragma once

#include "roundtrip/matrix.hpp"
#include "roundtrip/model.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace roundtrip {

// Density evaluation for a trained model, all in log domain.
//
// Functions taking "model-space" points expect inputs already scaled with the
// model's NormStats. The point-level estimate_* and batch_estimate take raw
// points, normalize them and return log-densities of the raw variable.

/// log N(z; 0, I)
double log_base_density(std::span<const double> z);

/// log p(x | z) = log N(x; G(z), sigma^2 I), x in model space.
double log_conditional(std::span<const double> x, std::span<const double> z,
                       const RoundtripModel& model);

/// log of the mean of exp(values); -inf for an empty or all -inf input.
double log_mean_exp(std::span<const double> values);

/// Spherical location-scale Student's t on R^m.
struct StudentTProposal {
    std::vector<double> center;
    double scale = 1.0;
    double dof = 5.0;

    double log_density(std::span<const double> z) const;
    /// Fills `out` (rows x m) with independent draws.
    void sample(Rng& rng, Matrix& out) const;
};

struct ImportanceOptions {
    std::size_t num_samples = 40000;
    ProposalParams proposal;
    /// Rows of G evaluated per forward call.
    std::size_t chunk_rows = 4096;
};

struct ImportanceEstimate {
    double log_density = 0.0;
    /// Standard error of the log estimate by the delta method,
    /// sd(w) / (sqrt(N) mean(w)).
    double log_std_error = 0.0;
    double effective_sample_size = 0.0;
};

ImportanceEstimate estimate_is(std::span<const double> x, const RoundtripModel& model,
                               const ImportanceOptions& options, std::uint64_t seed);

/// Model-space importance sampling, evaluated for several noise scales from
/// one shared set of proposal draws (model.sigma is ignored).
std::vector<double> estimate_is_sigmas(std::span<const double> x_model, const RoundtripModel& model,
                                       std::span<const double> sigmas,
                                       const ImportanceOptions& options, std::uint64_t seed);

struct LaplaceIntermediates {
    std::vector<double> z_tilde;
    Matrix jacobian;          // n x m
    Matrix a;                 // J^T J
    std::vector<double> b;    // J^T (x - G(z~))
    double lambda = 0.0;      // sigma^-2
    Matrix sigma_matrix;      // (I + lambda A)^-1
    std::vector<double> mu;   // Sigma (lambda b - z~)
    double c1 = 0.0;          // |z~|^2 + lambda |x - G(z~)|^2
    double c = 0.0;           // c1 - mu^T Sigma^-1 mu
    double half_log_det_sigma = 0.0;
};

/// Quantities of the Laplace closed form at a model-space point.
LaplaceIntermediates laplace_intermediates(std::span<const double> x_model,
                                           const RoundtripModel& model);

double estimate_laplace(std::span<const double> x, const RoundtripModel& model);

enum class EstimateMethod { ImportanceSampling, Laplace };

struct BatchOptions {
    EstimateMethod method = EstimateMethod::ImportanceSampling;
    ImportanceOptions importance;
    std::uint64_t base_seed = 0;
    /// Worker threads; results do not depend on this.
    std::size_t threads = 1;
};

/// Importance-sampling seed for point x: a function of the base seed and the
/// coordinates only, so estimates do not depend on row order or threading.
std::uint64_t point_seed(std::uint64_t base_seed, std::span<const double> x);

std::vector<double> batch_estimate(const Matrix& xs, const RoundtripModel& model,
                                   const BatchOptions& options);

} // namespace roundtrip
