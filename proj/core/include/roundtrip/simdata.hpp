#pragma once

#include "roundtrip/matrix.hpp"
#include "roundtrip/rng.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace roundtrip::sim {

/// Independent Gaussian mixture: every coordinate i.i.d. from
/// (N(-1, 0.5^2) + N(0, 0.5^2) + N(1, 0.5^2)) / 3.
Matrix sample_indep_mixture(std::size_t dim, std::size_t count, Rng& rng);
double log_density_indep_mixture(std::span<const double> x);
/// Log-density of the one-dimensional factor.
double log_density_indep_mixture_1d(double x);

/// Eight equally weighted 2-D Gaussians centred at 3 (cos(pi i/4), sin(pi i/4)),
/// each elongated along its radial direction (sd 1 radially, 0.16 tangentially).
Matrix sample_octagon(std::size_t count, Rng& rng);
double log_density_octagon(std::span<const double> x);
/// Mean and covariance (row-major 2x2) of octagon component i in 1..8.
struct Gaussian2 {
    double mean[2];
    double cov[4];
};
Gaussian2 octagon_component(int i);
double log_normal2(std::span<const double> x, const Gaussian2& g);

/// Involute: r ~ U(0, 2 pi), x1 ~ N(r sin 2r, 0.4^2), x2 ~ N(r cos 2r, 0.4^2).
Matrix sample_involute(std::size_t count, Rng& rng);
inline constexpr std::size_t kDefaultInvoluteQuadrature = 10000;
/// Log of (1 / 2 pi) * integral over r of the two Gaussian factors, by the
/// trapezoid rule on `quad_points` nodes over [0, 2 pi].
double log_density_involute(std::span<const double> x,
                            std::size_t quad_points = kDefaultInvoluteQuadrature);

enum class TaskKind { IndepMixture, Octagon, Involute };

/// A named distribution with a sampler and its true log-density.
class SimTask {
public:
    static SimTask indep_mixture(std::size_t dim);
    static SimTask octagon();
    static SimTask involute(std::size_t quad_points = kDefaultInvoluteQuadrature);
    /// "indep-mixture", "octagon" or "involute".
    static std::optional<SimTask> by_name(const std::string& name, std::size_t dim = 2);

    TaskKind kind() const noexcept { return kind_; }
    std::string name() const;
    std::size_t dim() const noexcept { return dim_; }

    Matrix sample(std::size_t count, Rng& rng) const;
    double log_density(std::span<const double> x) const;
    std::vector<double> log_density(const Matrix& xs) const;
    /// Square region covering about +-4 sd of the distribution, for grids.
    std::pair<double, double> default_bounds() const;

private:
    SimTask(TaskKind kind, std::size_t dim, std::size_t quad) : kind_(kind), dim_(dim), quad_(quad) {}

    TaskKind kind_;
    std::size_t dim_;
    std::size_t quad_;
};

inline constexpr std::size_t kDefaultSampleCount = 20000;

/// Inliers from the independent mixture plus uniform outliers.
struct OutlierDataset {
    Matrix points;
    std::vector<bool> labels;  // true = outlier
    double outlier_fraction = 0.0;

    std::size_t outlier_count() const;
};

/// round(count * fraction) outliers drawn uniformly over the inliers' bounding
/// box inflated 1.5x about its centre; rows shuffled.
OutlierDataset make_outlier_dataset(std::size_t dim, std::size_t count, double outlier_fraction,
                                    Rng& rng);

} // namespace roundtrip::sim
