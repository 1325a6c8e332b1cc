#pragma once

// Reference implementations used only by tests. They are written for clarity,
// not speed, and avoid the library code paths they are compared against.

#include "roundtrip/matrix.hpp"
#include "roundtrip/mlp.hpp"
#include "roundtrip/model.hpp"
#include "roundtrip/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace oracle {

using roundtrip::Matrix;

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            e(r, c) = m(r, c);
        }
    }
    return e;
}

inline Matrix from_eigen(const Eigen::MatrixXd& e) {
    Matrix m(e.rows(), e.cols());
    for (Eigen::Index r = 0; r < e.rows(); ++r) {
        for (Eigen::Index c = 0; c < e.cols(); ++c) {
            m(r, c) = e(r, c);
        }
    }
    return m;
}

inline Matrix random_matrix(roundtrip::Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.values()) {
        v = scale * rng.gaussian();
    }
    return m;
}

inline std::vector<double> random_vector(roundtrip::Rng& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) {
        x = scale * rng.gaussian();
    }
    return v;
}

/// Single identity-activation layer computing W x + b.
inline roundtrip::Mlp affine_net(const Matrix& w, std::vector<double> b) {
    return roundtrip::Mlp({roundtrip::DenseLayer{w, std::move(b), roundtrip::Activation::identity()}});
}

/// G(z) = W z + c with H the least-squares inverse (W^T W)^-1 W^T (x - c).
inline roundtrip::RoundtripModel affine_model(const Matrix& w, const std::vector<double>& c, double sigma) {
    const Eigen::MatrixXd we = to_eigen(w);
    const Eigen::MatrixXd pinv = (we.transpose() * we).inverse() * we.transpose();
    const Eigen::Map<const Eigen::VectorXd> ce(c.data(), static_cast<Eigen::Index>(c.size()));
    const Eigen::VectorXd hb = -pinv * ce;
    std::vector<double> h_bias(hb.data(), hb.data() + hb.size());
    return {affine_net(w, c), affine_net(from_eigen(pinv), h_bias), sigma, {}};
}

/// log N(x; c, W W^T + sigma^2 I), the exact marginal of the affine model.
inline double gaussian_marginal(std::span<const double> x, const Matrix& w, const std::vector<double>& c,
                                double sigma) {
    const Eigen::MatrixXd we = to_eigen(w);
    const auto n = static_cast<Eigen::Index>(x.size());
    const Eigen::MatrixXd cov = we * we.transpose() + sigma * sigma * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i) = x[i] - c[i];
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    const double quad = d.dot(ldlt.solve(d));
    const double log_det = ldlt.vectorD().array().log().sum();
    return -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + log_det + quad);
}

/// Change of variables for invertible affine G(z) = A z + c with z ~ N(0, I).
inline double change_of_variable(std::span<const double> x, const Matrix& a, const std::vector<double>& c) {
    const Eigen::MatrixXd ae = to_eigen(a);
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i) = x[i] - c[i];
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(ae);
    const Eigen::VectorXd z = lu.solve(d);
    return -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) - 0.5 * z.squaredNorm() -
           std::log(std::abs(lu.determinant()));
}

/// Central differences of a scalar function with respect to every entry of `params`.
inline std::vector<double> central_differences(std::vector<std::span<double>> params,
                                               const std::function<double()>& loss, double h = 1e-5) {
    std::vector<double> grads;
    for (auto block : params) {
        for (double& p : block) {
            const double saved = p;
            p = saved + h;
            const double up = loss();
            p = saved - h;
            const double down = loss();
            p = saved;
            grads.push_back((up - down) / (2.0 * h));
        }
    }
    return grads;
}

inline bool close_rel(double a, double b, double rel, double abs_floor) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

/// log of (1/N) sum_i prod_j N(x_j; t_ij, h_j^2), summed directly.
inline double naive_kde(const Matrix& train, const std::vector<double>& h, std::span<const double> x) {
    double sum = 0.0;
    for (std::size_t i = 0; i < train.rows(); ++i) {
        double prod = 1.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double u = (x[j] - train(i, j)) / h[j];
            prod *= std::exp(-0.5 * u * u) / (h[j] * std::sqrt(2.0 * std::numbers::pi));
        }
        sum += prod;
    }
    return std::log(sum / static_cast<double>(train.rows()));
}

/// Average ranks by counting: 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> counting_ranks(const std::vector<double>& v) {
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double less = 0.0;
        double equal = 0.0;
        for (double w : v) {
            less += w < v[i] ? 1.0 : 0.0;
            equal += w == v[i] ? 1.0 : 0.0;
        }
        ranks[i] = 1.0 + less + 0.5 * (equal - 1.0);
    }
    return ranks;
}

inline double brute_force_spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ra = counting_ranks(a);
    const auto rb = counting_ranks(b);
    const double n = static_cast<double>(a.size());
    const double mean = (n + 1.0) / 2.0;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - mean) * (rb[i] - mean);
        saa += (ra[i] - mean) * (ra[i] - mean);
        sbb += (rb[i] - mean) * (rb[i] - mean);
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Precision at k by checking, for each point, how many points outrank it
/// (higher score, or equal score and earlier position).
inline double exhaustive_precision(const std::vector<double>& scores, const std::vector<bool>& labels,
                                   std::size_t k) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        std::size_t ahead = 0;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (scores[j] > scores[i] || (scores[j] == scores[i] && j < i)) {
                ++ahead;
            }
        }
        if (ahead < k && labels[i]) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

/// Random MLP with every listed activation used somewhere and nonzero biases.
inline roundtrip::Mlp random_net(roundtrip::Rng& rng, const std::vector<std::size_t>& dims,
                                 roundtrip::Activation hidden, roundtrip::Activation output) {
    roundtrip::Mlp net = roundtrip::init_mlp(dims, hidden, output, rng);
    for (auto block : net.parameter_blocks()) {
        for (double& p : block) {
            p += 0.1 * rng.gaussian();
        }
    }
    return net;
}

} // namespace oracle
