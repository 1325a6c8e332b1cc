#pragma once

#include "roundtrip/matrix.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace roundtrip::metrics {

/// Ranks starting at 1; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. Throws on length mismatch, fewer
/// than two values, or a constant input.
double spearman(std::span<const double> a, std::span<const double> b);

/// Arithmetic mean; throws (with the index) on any non-finite entry.
double mean_log_likelihood(std::span<const double> log_densities);

/// Outlier score of a point: its negated log-density.
std::vector<double> outlier_scores(std::span<const double> log_densities);

/// Fraction of true outliers among the k highest scores. Equal scores keep
/// input order.
double precision_at_k(std::span<const double> scores, const std::vector<bool>& labels, std::size_t k);

struct GridBounds {
    double x1_lo = 0.0;
    double x1_hi = 1.0;
    double x2_lo = 0.0;
    double x2_hi = 1.0;
};

using LogDensityFn = std::function<double(std::span<const double>)>;

/// resolution^2 rows of (x1, x2, log-density); x2 is the outer (slow) index.
/// The evaluator must be safe to call concurrently when threads > 1; the
/// output does not depend on the thread count.
Matrix render_grid(const LogDensityFn& log_density, std::size_t dim, const GridBounds& bounds,
                   std::size_t resolution = 100, std::size_t threads = 1);

void write_grid_csv(const std::filesystem::path& path, const Matrix& grid);

struct EvalReport {
    std::string task;
    std::string method;
    std::vector<double> log_densities;
    std::optional<double> spearman;
    std::optional<double> mean_log_likelihood;
    std::optional<double> precision_at_k;
    std::optional<std::size_t> k;
    /// Settings that produced the numbers (sigma, sample counts, seeds, ...).
    std::vector<std::pair<std::string, std::string>> config;

    /// Flat "key=value" lines; per-point values are not included.
    std::string to_text() const;
};

} // namespace roundtrip::metrics
