#pragma once

#include "roundtrip/matrix.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace roundtrip::kde {

enum class BandwidthRule { Silverman, Scott, Fixed };

std::string rule_name(BandwidthRule rule);
std::optional<BandwidthRule> rule_from_name(const std::string& name);

/// Product Gaussian kernel estimator with one bandwidth per dimension.
struct KdeModel {
    Matrix train_points;
    std::vector<double> bandwidths;
    BandwidthRule rule = BandwidthRule::Scott;

    std::size_t dim() const noexcept { return train_points.cols(); }
};

/// Multiplier applied to each dimension's sample sd:
/// Scott N^(-1/(d+4)), Silverman (N (d+2) / 4)^(-1/(d+4)).
double bandwidth_factor(BandwidthRule rule, std::size_t count, std::size_t dim);

/// Fits bandwidths by rule. Requires N >= 2 and a non-constant column everywhere.
KdeModel fit_kde(const Matrix& points, BandwidthRule rule);
/// Uses the given per-dimension bandwidths.
KdeModel fit_kde_fixed(const Matrix& points, std::vector<double> bandwidths);

/// log[(1/N) sum_i prod_j N(x_j; train_ij, h_j^2)], by log-sum-exp.
double kde_log_density(const KdeModel& model, std::span<const double> x);
std::vector<double> kde_log_density(const KdeModel& model, const Matrix& xs);

} // namespace roundtrip::kde
