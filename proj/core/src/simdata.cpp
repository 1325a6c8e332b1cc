#include "roundtrip/simdata.hpp"

#include "roundtrip/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace roundtrip::sim {

namespace {

constexpr double kPi = std::numbers::pi;
const double kLog2Pi = std::log(2.0 * kPi);
constexpr double kMixSd = 0.5;
constexpr double kOctagonRadius = 3.0;
constexpr double kOctagonThin = 0.16;
constexpr double kInvoluteSd = 0.4;

double log_normal1(double x, double mean, double sd) {
    const double u = (x - mean) / sd;
    return -0.5 * kLog2Pi - std::log(sd) - 0.5 * u * u;
}

double log_sum_exp3(double a, double b, double c) {
    const double top = std::max({a, b, c});
    return top + std::log(std::exp(a - top) + std::exp(b - top) + std::exp(c - top));
}

} // namespace

double log_density_indep_mixture_1d(double x) {
    return log_sum_exp3(log_normal1(x, -1.0, kMixSd), log_normal1(x, 0.0, kMixSd),
                        log_normal1(x, 1.0, kMixSd)) -
           std::log(3.0);
}

double log_density_indep_mixture(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) {
        s += log_density_indep_mixture_1d(v);
    }
    return s;
}

Matrix sample_indep_mixture(std::size_t dim, std::size_t count, Rng& rng) {
    if (dim == 0) {
        throw InputError("mixture dimension must be at least 1");
    }
    Matrix out(count, dim);
    for (double& v : out.values()) {
        const double mean = static_cast<double>(rng.below(3)) - 1.0;
        v = mean + kMixSd * rng.gaussian();
    }
    return out;
}

Gaussian2 octagon_component(int i) {
    const double theta = kPi * static_cast<double>(i) / 4.0;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double t2 = kOctagonThin * kOctagonThin;
    Gaussian2 g{};
    g.mean[0] = kOctagonRadius * c;
    g.mean[1] = kOctagonRadius * s;
    g.cov[0] = c * c + t2 * s * s;
    g.cov[1] = (1.0 - t2) * s * c;
    g.cov[2] = g.cov[1];
    g.cov[3] = s * s + t2 * c * c;
    return g;
}

double log_normal2(std::span<const double> x, const Gaussian2& g) {
    const double det = g.cov[0] * g.cov[3] - g.cov[1] * g.cov[2];
    const double dx = x[0] - g.mean[0];
    const double dy = x[1] - g.mean[1];
    const double quad = (g.cov[3] * dx * dx - 2.0 * g.cov[1] * dx * dy + g.cov[0] * dy * dy) / det;
    return -kLog2Pi - 0.5 * std::log(det) - 0.5 * quad;
}

double log_density_octagon(std::span<const double> x) {
    if (x.size() != 2) {
        throw ShapeError("octagon density is 2-D");
    }
    double terms[8];
    for (int i = 1; i <= 8; ++i) {
        terms[i - 1] = log_normal2(x, octagon_component(i));
    }
    const double top = *std::max_element(std::begin(terms), std::end(terms));
    double sum = 0.0;
    for (double t : terms) {
        sum += std::exp(t - top);
    }
    return top + std::log(sum / 8.0);
}

Matrix sample_octagon(std::size_t count, Rng& rng) {
    Matrix out(count, 2);
    for (std::size_t r = 0; r < count; ++r) {
        const int i = static_cast<int>(rng.below(8)) + 1;
        const double theta = kPi * static_cast<double>(i) / 4.0;
        const double radial = rng.gaussian();
        const double tangential = kOctagonThin * rng.gaussian();
        out(r, 0) = kOctagonRadius * std::cos(theta) + radial * std::cos(theta) - tangential * std::sin(theta);
        out(r, 1) = kOctagonRadius * std::sin(theta) + radial * std::sin(theta) + tangential * std::cos(theta);
    }
    return out;
}

Matrix sample_involute(std::size_t count, Rng& rng) {
    Matrix out(count, 2);
    for (std::size_t r = 0; r < count; ++r) {
        const double t = rng.uniform(0.0, 2.0 * kPi);
        out(r, 0) = t * std::sin(2.0 * t) + kInvoluteSd * rng.gaussian();
        out(r, 1) = t * std::cos(2.0 * t) + kInvoluteSd * rng.gaussian();
    }
    return out;
}

double log_density_involute(std::span<const double> x, std::size_t quad_points) {
    if (x.size() != 2) {
        throw ShapeError("involute density is 2-D");
    }
    if (quad_points < 100) {
        throw InputError("involute quadrature needs at least 100 points");
    }
    const double h = 2.0 * kPi / static_cast<double>(quad_points - 1);
    const double var = kInvoluteSd * kInvoluteSd;
    const double norm = -kLog2Pi - std::log(var);
    std::vector<double> terms(quad_points);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < quad_points; ++k) {
        const double t = h * static_cast<double>(k);
        const double dx = x[0] - t * std::sin(2.0 * t);
        const double dy = x[1] - t * std::cos(2.0 * t);
        terms[k] = norm - 0.5 * (dx * dx + dy * dy) / var;
        top = std::max(top, terms[k]);
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < quad_points; ++k) {
        const double w = (k == 0 || k + 1 == quad_points) ? 0.5 : 1.0;
        sum += w * std::exp(terms[k] - top);
    }
    // (1 / 2 pi) * h * sum
    return top + std::log(sum * h / (2.0 * kPi));
}

SimTask SimTask::indep_mixture(std::size_t dim) {
    if (dim == 0) {
        throw InputError("mixture dimension must be at least 1");
    }
    return SimTask(TaskKind::IndepMixture, dim, 0);
}

SimTask SimTask::octagon() {
    return SimTask(TaskKind::Octagon, 2, 0);
}

SimTask SimTask::involute(std::size_t quad_points) {
    if (quad_points < 100) {
        throw InputError("involute quadrature needs at least 100 points");
    }
    return SimTask(TaskKind::Involute, 2, quad_points);
}

std::optional<SimTask> SimTask::by_name(const std::string& name, std::size_t dim) {
    if (name == "indep-mixture") {
        return indep_mixture(dim);
    }
    if (name == "octagon") {
        return octagon();
    }
    if (name == "involute") {
        return involute();
    }
    return std::nullopt;
}

std::string SimTask::name() const {
    switch (kind_) {
    case TaskKind::Octagon:
        return "octagon";
    case TaskKind::Involute:
        return "involute";
    case TaskKind::IndepMixture:
        break;
    }
    return "indep-mixture";
}

Matrix SimTask::sample(std::size_t count, Rng& rng) const {
    switch (kind_) {
    case TaskKind::Octagon:
        return sample_octagon(count, rng);
    case TaskKind::Involute:
        return sample_involute(count, rng);
    case TaskKind::IndepMixture:
        break;
    }
    return sample_indep_mixture(dim_, count, rng);
}

double SimTask::log_density(std::span<const double> x) const {
    if (x.size() != dim_) {
        throw ShapeError(name() + " density expects " + std::to_string(dim_) + " coordinates");
    }
    switch (kind_) {
    case TaskKind::Octagon:
        return log_density_octagon(x);
    case TaskKind::Involute:
        return log_density_involute(x, quad_);
    case TaskKind::IndepMixture:
        break;
    }
    return log_density_indep_mixture(x);
}

std::vector<double> SimTask::log_density(const Matrix& xs) const {
    std::vector<double> out(xs.rows());
    for (std::size_t r = 0; r < xs.rows(); ++r) {
        out[r] = log_density(xs.row(r));
    }
    return out;
}

std::pair<double, double> SimTask::default_bounds() const {
    switch (kind_) {
    case TaskKind::Octagon:
        return {-7.0, 7.0};
    case TaskKind::Involute:
        return {-8.0, 8.0};
    case TaskKind::IndepMixture:
        break;
    }
    return {-3.0, 3.0};
}

std::size_t OutlierDataset::outlier_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
}

OutlierDataset make_outlier_dataset(std::size_t dim, std::size_t count, double outlier_fraction,
                                    Rng& rng) {
    if (!(outlier_fraction > 0.0 && outlier_fraction < 0.5)) {
        throw InputError("outlier fraction must lie in (0, 0.5)");
    }
    const auto n_out = static_cast<std::size_t>(std::llround(outlier_fraction * static_cast<double>(count)));
    const std::size_t n_in = count - n_out;
    const Matrix inliers = sample_indep_mixture(dim, n_in, rng);

    std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
    std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < n_in; ++r) {
        for (std::size_t j = 0; j < dim; ++j) {
            lo[j] = std::min(lo[j], inliers(r, j));
            hi[j] = std::max(hi[j], inliers(r, j));
        }
    }
    for (std::size_t j = 0; j < dim; ++j) {
        const double centre = 0.5 * (lo[j] + hi[j]);
        const double half = 0.75 * (hi[j] - lo[j]);
        lo[j] = centre - half;
        hi[j] = centre + half;
    }

    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));

    OutlierDataset ds;
    ds.outlier_fraction = outlier_fraction;
    ds.points = Matrix(count, dim);
    ds.labels.assign(count, false);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t dst = order[k];
        auto row = ds.points.row(dst);
        if (k < n_in) {
            const auto src = inliers.row(k);
            std::copy(src.begin(), src.end(), row.begin());
        } else {
            for (std::size_t j = 0; j < dim; ++j) {
                row[j] = rng.uniform(lo[j], hi[j]);
            }
            ds.labels[dst] = true;
        }
    }
    return ds;
}

} // namespace roundtrip::sim
