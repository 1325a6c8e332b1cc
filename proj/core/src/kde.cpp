#include "roundtrip/kde.hpp"

#include "roundtrip/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace roundtrip::kde {

std::string rule_name(BandwidthRule rule) {
    switch (rule) {
    case BandwidthRule::Silverman:
        return "silverman";
    case BandwidthRule::Fixed:
        return "fixed";
    case BandwidthRule::Scott:
        break;
    }
    return "scott";
}

std::optional<BandwidthRule> rule_from_name(const std::string& name) {
    if (name == "silverman") {
        return BandwidthRule::Silverman;
    }
    if (name == "scott") {
        return BandwidthRule::Scott;
    }
    return std::nullopt;
}

double bandwidth_factor(BandwidthRule rule, std::size_t count, std::size_t dim) {
    const double n = static_cast<double>(count);
    const double d = static_cast<double>(dim);
    const double exponent = -1.0 / (d + 4.0);
    switch (rule) {
    case BandwidthRule::Silverman:
        return std::pow(n * (d + 2.0) / 4.0, exponent);
    case BandwidthRule::Scott:
        return std::pow(n, exponent);
    case BandwidthRule::Fixed:
        break;
    }
    throw InputError("fixed bandwidths have no rule factor");
}

KdeModel fit_kde(const Matrix& points, BandwidthRule rule) {
    if (rule == BandwidthRule::Fixed) {
        throw InputError("use fit_kde_fixed for explicit bandwidths");
    }
    const std::size_t count = points.rows();
    const std::size_t dim = points.cols();
    if (count < 2) {
        throw InputError("KDE needs at least two points");
    }
    if (dim == 0) {
        throw InputError("KDE needs at least one dimension");
    }
    const double factor = bandwidth_factor(rule, count, dim);
    std::vector<double> bandwidths(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        double mean = 0.0;
        for (std::size_t r = 0; r < count; ++r) {
            mean += points(r, j);
        }
        mean /= static_cast<double>(count);
        double ss = 0.0;
        for (std::size_t r = 0; r < count; ++r) {
            ss += (points(r, j) - mean) * (points(r, j) - mean);
        }
        const double sd = std::sqrt(ss / static_cast<double>(count - 1));
        if (!(sd > 0.0)) {
            throw InputError("KDE dimension " + std::to_string(j) + " is constant");
        }
        bandwidths[j] = factor * sd;
    }
    return {points, std::move(bandwidths), rule};
}

KdeModel fit_kde_fixed(const Matrix& points, std::vector<double> bandwidths) {
    if (points.rows() == 0 || bandwidths.size() != points.cols()) {
        throw InputError("fixed KDE needs points and one bandwidth per column");
    }
    for (double h : bandwidths) {
        if (!(h > 0.0) || !std::isfinite(h)) {
            throw InputError("KDE bandwidths must be positive");
        }
    }
    return {points, std::move(bandwidths), BandwidthRule::Fixed};
}

double kde_log_density(const KdeModel& model, std::span<const double> x) {
    const std::size_t dim = model.dim();
    if (x.size() != dim) {
        throw ShapeError("KDE query has " + std::to_string(x.size()) + " coordinates, model has " +
                         std::to_string(dim));
    }
    double log_norm = -0.5 * static_cast<double>(dim) * std::log(2.0 * std::numbers::pi);
    std::vector<double> inv(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        log_norm -= std::log(model.bandwidths[j]);
        inv[j] = 1.0 / model.bandwidths[j];
    }
    const std::size_t count = model.train_points.rows();
    std::vector<double> exponents(count);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < count; ++i) {
        const auto row = model.train_points.row(i);
        double q = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double u = (x[j] - row[j]) * inv[j];
            q += u * u;
        }
        exponents[i] = -0.5 * q;
        top = std::max(top, exponents[i]);
    }
    double sum = 0.0;
    for (double e : exponents) {
        sum += std::exp(e - top);
    }
    return log_norm + top + std::log(sum / static_cast<double>(count));
}

std::vector<double> kde_log_density(const KdeModel& model, const Matrix& xs) {
    std::vector<double> out(xs.rows());
    for (std::size_t r = 0; r < xs.rows(); ++r) {
        out[r] = kde_log_density(model, xs.row(r));
    }
    return out;
}

} // namespace roundtrip::kde
