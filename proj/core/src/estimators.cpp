#include "roundtrip/estimators.hpp"

#include "roundtrip/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <thread>

namespace roundtrip {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void check_x(std::span<const double> x, const RoundtripModel& model) {
    if (x.size() != model.data_dim()) {
        throw ShapeError("point has " + std::to_string(x.size()) + " coordinates, model expects " +
                         std::to_string(model.data_dim()));
    }
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw InputError("non-finite coordinate in query point");
        }
    }
}

std::vector<double> to_model_space(std::span<const double> x, const RoundtripModel& model) {
    std::vector<double> out(x.size());
    minmax_normalize_row(x, model.norm, out);
    return out;
}

} // namespace

double log_base_density(std::span<const double> z) {
    return -0.5 * static_cast<double>(z.size()) * kLog2Pi - 0.5 * squared_norm(z);
}

double log_conditional(std::span<const double> x, std::span<const double> z,
                       const RoundtripModel& model) {
    const Matrix gz = forward(model.g, Matrix::row_vector(z));
    if (gz.cols() != x.size()) {
        throw ShapeError("log_conditional: x has wrong dimension");
    }
    double residual = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        residual += (x[i] - gz(0, i)) * (x[i] - gz(0, i));
    }
    const double n = static_cast<double>(x.size());
    return -0.5 * n * kLog2Pi - n * std::log(model.sigma) - residual / (2.0 * model.sigma * model.sigma);
}

double log_mean_exp(std::span<const double> values) {
    if (values.empty()) {
        return -std::numeric_limits<double>::infinity();
    }
    const double top = *std::max_element(values.begin(), values.end());
    if (!std::isfinite(top)) {
        return top;
    }
    double sum = 0.0;
    for (double v : values) {
        sum += std::exp(v - top);
    }
    return top + std::log(sum / static_cast<double>(values.size()));
}

double StudentTProposal::log_density(std::span<const double> z) const {
    const double m = static_cast<double>(center.size());
    double dist2 = 0.0;
    for (std::size_t i = 0; i < center.size(); ++i) {
        dist2 += (z[i] - center[i]) * (z[i] - center[i]);
    }
    return std::lgamma(0.5 * (dof + m)) - std::lgamma(0.5 * dof) -
           0.5 * m * std::log(dof * std::numbers::pi) - m * std::log(scale) -
           0.5 * (dof + m) * std::log1p(dist2 / (dof * scale * scale));
}

void StudentTProposal::sample(Rng& rng, Matrix& out) const {
    if (out.cols() != center.size()) {
        throw ShapeError("proposal sample buffer has wrong width");
    }
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (double& v : row) {
            v = rng.gaussian();
        }
        const double mix = scale / std::sqrt(rng.chi_squared(dof) / dof);
        for (std::size_t i = 0; i < row.size(); ++i) {
            row[i] = center[i] + mix * row[i];
        }
    }
}

namespace {

/// Per-draw log p(z) - log q(z) and squared residuals |x - G(z)|^2.
struct ImportanceDraws {
    std::vector<double> log_ratio;
    std::vector<double> residual;
};

ImportanceDraws draw_importance(std::span<const double> x_model, const RoundtripModel& model,
                                const ImportanceOptions& options, std::uint64_t seed) {
    if (options.num_samples == 0) {
        throw InputError("importance sampling needs at least one sample");
    }
    const std::size_t m = model.latent_dim();
    const std::size_t n = model.data_dim();
    const Matrix center = forward(model.h, Matrix::row_vector(x_model));

    StudentTProposal q{{center.values().begin(), center.values().end()}, options.proposal.scale,
                       options.proposal.dof};
    Rng rng = Rng(seed).substream(Stream::Proposal);

    ImportanceDraws draws;
    draws.log_ratio.reserve(options.num_samples);
    draws.residual.reserve(options.num_samples);
    const std::size_t chunk = std::max<std::size_t>(1, options.chunk_rows);
    for (std::size_t start = 0; start < options.num_samples; start += chunk) {
        const std::size_t rows = std::min(chunk, options.num_samples - start);
        Matrix z(rows, m);
        q.sample(rng, z);
        const Matrix gz = forward(model.g, z);
        for (std::size_t r = 0; r < rows; ++r) {
            const double log_q = q.log_density(z.row(r));
            if (!std::isfinite(log_q)) {
                throw NumericalError("non-finite proposal density");
            }
            draws.log_ratio.push_back(log_base_density(z.row(r)) - log_q);
            double res = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = x_model[i] - gz(r, i);
                res += d * d;
            }
            draws.residual.push_back(res);
        }
    }
    return draws;
}

std::vector<double> log_weights(const ImportanceDraws& draws, double sigma, std::size_t n) {
    const double nn = static_cast<double>(n);
    const double norm = -0.5 * nn * kLog2Pi - nn * std::log(sigma);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    std::vector<double> out(draws.residual.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = norm - draws.residual[i] * inv + draws.log_ratio[i];
    }
    return out;
}

} // namespace

ImportanceEstimate estimate_is(std::span<const double> x, const RoundtripModel& model,
                               const ImportanceOptions& options, std::uint64_t seed) {
    check_x(x, model);
    const auto x_model = to_model_space(x, model);
    const auto draws = draw_importance(x_model, model, options, seed);
    const auto lw = log_weights(draws, model.sigma, model.data_dim());

    ImportanceEstimate est;
    est.log_density = log_mean_exp(lw) - model.norm.log_scale();
    if (!std::isfinite(est.log_density)) {
        throw NumericalError("importance sampling produced a non-finite log-density");
    }
    const double top = *std::max_element(lw.begin(), lw.end());
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double v : lw) {
        const double w = std::exp(v - top);
        sum += w;
        sum_sq += w * w;
    }
    const double count = static_cast<double>(lw.size());
    const double mean = sum / count;
    const double var = lw.size() > 1 ? std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0)) : 0.0;
    est.log_std_error = std::sqrt(var / count) / mean;
    est.effective_sample_size = sum * sum / sum_sq;
    return est;
}

std::vector<double> estimate_is_sigmas(std::span<const double> x_model, const RoundtripModel& model,
                                       std::span<const double> sigmas,
                                       const ImportanceOptions& options, std::uint64_t seed) {
    if (x_model.size() != model.data_dim()) {
        throw ShapeError("estimate_is_sigmas: point dimension mismatch");
    }
    const auto draws = draw_importance(x_model, model, options, seed);
    std::vector<double> out;
    out.reserve(sigmas.size());
    for (double s : sigmas) {
        out.push_back(log_mean_exp(log_weights(draws, s, model.data_dim())));
    }
    return out;
}

LaplaceIntermediates laplace_intermediates(std::span<const double> x_model,
                                           const RoundtripModel& model) {
    using Mat = Eigen::MatrixXd;
    using Vec = Eigen::VectorXd;

    const std::size_t m = model.latent_dim();
    const std::size_t n = model.data_dim();
    if (x_model.size() != n) {
        throw ShapeError("laplace: point dimension mismatch");
    }

    LaplaceIntermediates li;
    const Matrix zt = forward(model.h, Matrix::row_vector(x_model));
    li.z_tilde.assign(zt.values().begin(), zt.values().end());
    const Matrix gz = forward(model.g, zt);
    li.jacobian = jacobian(model.g, li.z_tilde);
    li.lambda = 1.0 / (model.sigma * model.sigma);

    Mat jac(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = li.jacobian(i, j);
        }
    }
    Vec residual(n);
    for (std::size_t i = 0; i < n; ++i) {
        residual(static_cast<Eigen::Index>(i)) = x_model[i] - gz(0, i);
    }
    Vec z_tilde = Eigen::Map<const Vec>(li.z_tilde.data(), static_cast<Eigen::Index>(m));

    const Mat a = jac.transpose() * jac;
    const Vec b = jac.transpose() * residual;
    Mat precision = Mat::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)) + li.lambda * a;
    const Eigen::LLT<Mat> llt(precision);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("Cholesky of I + lambda A failed; model weights are corrupt");
    }
    const Vec u = li.lambda * b - z_tilde;
    // mu^T Sigma^-1 mu = u^T Sigma u = |L^-1 u|^2
    const Vec half = llt.matrixL().solve(u);
    const Vec mu = llt.solve(u);
    const Mat sigma_matrix = llt.solve(Mat::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)));

    double log_diag = 0.0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m); ++i) {
        log_diag += std::log(llt.matrixL()(i, i));
    }
    li.half_log_det_sigma = -log_diag;
    li.c1 = z_tilde.squaredNorm() + li.lambda * residual.squaredNorm();
    li.c = li.c1 - half.squaredNorm();

    li.a = Matrix(m, m);
    li.sigma_matrix = Matrix(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            li.a(i, j) = a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            li.sigma_matrix(i, j) = sigma_matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }
    li.b.assign(b.data(), b.data() + m);
    li.mu.assign(mu.data(), mu.data() + m);
    return li;
}

double estimate_laplace(std::span<const double> x, const RoundtripModel& model) {
    check_x(x, model);
    const auto x_model = to_model_space(x, model);
    const auto li = laplace_intermediates(x_model, model);
    const double n = static_cast<double>(model.data_dim());
    const double log_p = -0.5 * n * kLog2Pi - n * std::log(model.sigma) + li.half_log_det_sigma -
                         0.5 * li.c - model.norm.log_scale();
    if (!std::isfinite(log_p)) {
        throw NumericalError("Laplace estimate is not finite");
    }
    return log_p;
}

std::uint64_t point_seed(std::uint64_t base_seed, std::span<const double> x) {
    std::uint64_t key = 0x6a09e667f3bcc909ULL ^ static_cast<std::uint64_t>(x.size());
    for (double v : x) {
        // +0.0 and -0.0 are the same point
        const auto bits = std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v);
        key = Rng(key ^ bits).next_u64();
    }
    return Rng(base_seed).substream(key).seed();
}

std::vector<double> batch_estimate(const Matrix& xs, const RoundtripModel& model,
                                   const BatchOptions& options) {
    model.validate();
    if (xs.cols() != model.data_dim()) {
        throw ShapeError("points have " + std::to_string(xs.cols()) + " columns, model expects " +
                         std::to_string(model.data_dim()));
    }
    const std::size_t rows = xs.rows();
    std::vector<double> out(rows, 0.0);
    std::vector<std::exception_ptr> errors(rows);

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            try {
                out[r] = options.method == EstimateMethod::Laplace
                             ? estimate_laplace(xs.row(r), model)
                             : estimate_is(xs.row(r), model, options.importance,
                                           point_seed(options.base_seed, xs.row(r)))
                                   .log_density;
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    };

    const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(rows, 1));
    if (threads == 1) {
        work(0, rows);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t per = (rows + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = std::min(rows, t * per);
            const std::size_t end = std::min(rows, begin + per);
            pool.emplace_back(work, begin, end);
        }
    }

    for (std::size_t r = 0; r < rows; ++r) {
        if (errors[r]) {
            try {
                std::rethrow_exception(errors[r]);
            } catch (const NumericalError& e) {
                throw NumericalError("row " + std::to_string(r) + ": " + e.what());
            } catch (const std::exception& e) {
                throw InputError("row " + std::to_string(r) + ": " + e.what());
            }
        }
    }
    return out;
}

} // namespace roundtrip
