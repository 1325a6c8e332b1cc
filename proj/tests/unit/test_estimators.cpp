#include "oracles.hpp"

#include "roundtrip/errors.hpp"
#include "roundtrip/estimators.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace roundtrip;

namespace {

const double kLogInvSqrt2Pi = -0.5 * std::log(2.0 * std::numbers::pi);

RoundtripModel identity_model(double sigma) {
    return oracle::affine_model(Matrix::identity(1), {0.0}, sigma);
}

ImportanceOptions is_options(std::size_t n, double dof = 5.0) {
    ImportanceOptions o;
    o.num_samples = n;
    o.proposal.dof = dof;
    return o;
}

} // namespace

TEST(LogBaseDensity, Examples) {
    EXPECT_NEAR(log_base_density(std::vector<double>{0.0}), -0.9189385, 1e-7);
    EXPECT_NEAR(log_base_density(std::vector<double>{0.0, 0.0}), -1.8378771, 1e-7);
    EXPECT_NEAR(log_base_density(std::vector<double>{1.0}), -1.4189385, 1e-7);
}

TEST(LogConditional, Examples) {
    const RoundtripModel one = identity_model(1.0);
    EXPECT_NEAR(log_conditional(std::vector<double>{0.7}, std::vector<double>{0.7}, one), kLogInvSqrt2Pi, 1e-12);

    const RoundtripModel two = oracle::affine_model(Matrix::identity(2), {0.0, 0.0}, 1.0);
    EXPECT_NEAR(log_conditional(std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 0.0}, two),
                -1.8378771 - 1.0, 1e-7);

    const RoundtripModel narrow = identity_model(0.1);
    EXPECT_NEAR(log_conditional(std::vector<double>{0.3}, std::vector<double>{0.3}, narrow),
                kLogInvSqrt2Pi + std::log(10.0), 1e-12);
}

TEST(LogMeanExp, ShiftEquivariance) {
    Rng rng(1);
    const auto v = oracle::random_vector(rng, 50, 20.0);
    std::vector<double> shifted = v;
    for (double& x : shifted) {
        x += 123.5;
    }
    EXPECT_NEAR(log_mean_exp(shifted), log_mean_exp(v) + 123.5, 1e-10);
    EXPECT_NEAR(log_mean_exp(std::vector<double>{1000.0, 1000.0}), 1000.0, 1e-12);
    EXPECT_TRUE(std::isinf(log_mean_exp(std::vector<double>{})));
}

TEST(StudentTProposal, OneDimensionalDensityIntegratesToOne) {
    StudentTProposal q{{0.4}, 1.3, 5.0};
    double sum = 0.0;
    const double step = 1e-3;
    for (double z = -400.0; z <= 400.0; z += step) {
        sum += std::exp(q.log_density(std::vector<double>{z}));
    }
    EXPECT_NEAR(sum * step, 1.0, 1e-4);
}

TEST(StudentTProposal, SampleVarianceMatchesDof) {
    StudentTProposal q{{0.0, 0.0}, 1.0, 5.0};
    Rng rng(2);
    Matrix draws(200000, 2);
    q.sample(rng, draws);
    double sq = 0.0;
    for (double v : draws.values()) {
        sq += v * v;
    }
    // Var of a t with 5 dof is 5 / 3.
    EXPECT_NEAR(sq / static_cast<double>(draws.size()), 5.0 / 3.0, 0.05);
}

TEST(ImportanceSampling, IdentityModelConvergesToGaussianConvolution) {
    const RoundtripModel model = identity_model(1.0);
    const double truth = -0.5 * std::log(4.0 * std::numbers::pi);
    const auto est = estimate_is(std::vector<double>{0.0}, model, is_options(40000), 17);
    EXPECT_NEAR(est.log_density, truth, 0.02);
    EXPECT_NEAR(est.log_density, -1.2655, 0.02);
}

TEST(ImportanceSampling, SingleDrawEqualsConditionalPlusLogWeight) {
    const RoundtripModel model = identity_model(1.0);
    // x = 0 centres the proposal on the base density
    const std::vector<double> x{0.0};
    const std::uint64_t seed = 99;
    const ImportanceOptions opts = is_options(1, 1e7);
    const auto est = estimate_is(x, model, opts, seed);

    Rng rng = Rng(seed).substream(Stream::Proposal);
    const StudentTProposal q{{0.0}, opts.proposal.scale, opts.proposal.dof};
    Matrix z(1, 1);
    q.sample(rng, z);
    const double log_w = log_base_density(z.row(0)) - q.log_density(z.row(0));
    EXPECT_NEAR(log_w, 0.0, 1e-5);
    EXPECT_NEAR(est.log_density, log_conditional(x, z.row(0), model) + log_w, 1e-12);
}

TEST(ImportanceSampling, TwoSeedsAgreeWithinStandardErrors) {
    Rng rng(3);
    const Matrix w = oracle::random_matrix(rng, 2, 1);
    const RoundtripModel model = oracle::affine_model(w, {0.2, -0.1}, 0.5);
    const std::vector<double> x{0.4, 0.3};
    const auto a = estimate_is(x, model, is_options(40000), 1);
    const auto b = estimate_is(x, model, is_options(40000), 2);
    const double se = std::hypot(a.log_std_error, b.log_std_error);
    EXPECT_GT(se, 0.0);
    EXPECT_LT(std::abs(a.log_density - b.log_density), 3.0 * se);
    EXPECT_NEAR(a.log_density, oracle::gaussian_marginal(x, w, {0.2, -0.1}, 0.5), 5.0 * a.log_std_error);
}

TEST(ImportanceSampling, DeterministicPerSeed) {
    const RoundtripModel model = identity_model(0.5);
    const std::vector<double> x{1.1};
    EXPECT_EQ(estimate_is(x, model, is_options(500), 4).log_density,
              estimate_is(x, model, is_options(500), 4).log_density);
    EXPECT_NE(estimate_is(x, model, is_options(500), 4).log_density,
              estimate_is(x, model, is_options(500), 5).log_density);
    EXPECT_THROW(estimate_is(x, model, is_options(0), 4), InputError);
}

TEST(ImportanceSampling, SigmaSweepMatchesSingleSigmaCalls) {
    Rng rng(4);
    const Matrix w = oracle::random_matrix(rng, 2, 1);
    RoundtripModel model = oracle::affine_model(w, {0.0, 0.0}, 1.0);
    const std::vector<double> x{0.5, -0.2};
    const std::vector<double> sigmas{0.1, 0.4, 1.0};
    const auto sweep = estimate_is_sigmas(x, model, sigmas, is_options(3000), 8);
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        model.sigma = sigmas[i];
        EXPECT_NEAR(sweep[i], estimate_is(x, model, is_options(3000), 8).log_density, 1e-12);
    }
}

TEST(Laplace, IdentityModelIntermediates) {
    const RoundtripModel model = identity_model(1.0);
    const auto li = laplace_intermediates(std::vector<double>{0.0}, model);
    EXPECT_DOUBLE_EQ(li.z_tilde[0], 0.0);
    EXPECT_DOUBLE_EQ(li.jacobian(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(li.a(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(li.lambda, 1.0);
    EXPECT_DOUBLE_EQ(li.sigma_matrix(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(li.b[0], 0.0);
    EXPECT_DOUBLE_EQ(li.mu[0], 0.0);
    EXPECT_DOUBLE_EQ(li.c, 0.0);
    EXPECT_NEAR(estimate_laplace(std::vector<double>{0.0}, model), -0.5 * std::log(4.0 * std::numbers::pi), 1e-14);
}

TEST(Laplace, AffineModelMatchesAnalyticMarginal) {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 1 + rng.below(4);
        const std::size_t m = 1 + rng.below(n);
        const Matrix w = oracle::random_matrix(rng, n, m);
        const auto c = oracle::random_vector(rng, n);
        const double sigma = 0.05 + rng.uniform01();
        const RoundtripModel model = oracle::affine_model(w, c, sigma);
        const auto x = oracle::random_vector(rng, n, 2.0);
        const double truth = oracle::gaussian_marginal(x, w, c, sigma);
        EXPECT_TRUE(oracle::close_rel(estimate_laplace(x, model), truth, 1e-9, 1e-12))
            << "n=" << n << " m=" << m;
    }
}

TEST(Laplace, HalfLogDetSigmaNeverPositive) {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        Mlp g = oracle::random_net(rng, {2, 8, 3}, Activation::leaky_relu(), Activation::identity());
        Mlp h = oracle::random_net(rng, {3, 8, 2}, Activation::leaky_relu(), Activation::identity());
        const RoundtripModel model{g, h, 0.1 + rng.uniform01(), {}};
        const auto li = laplace_intermediates(oracle::random_vector(rng, 3), model);
        EXPECT_LE(li.half_log_det_sigma, 0.0);
    }
}

TEST(Laplace, ScaledLineApproachesChangeOfVariable) {
    const RoundtripModel model = oracle::affine_model(Matrix::from_rows({{2.0}}), {0.0}, 1e-4);
    const double truth = std::log(0.120985);
    EXPECT_NEAR(estimate_laplace(std::vector<double>{2.0}, model), truth, 1e-3);
}

TEST(BatchEstimate, BatchOfOneEqualsSinglePoint) {
    const RoundtripModel model = identity_model(0.7);
    const Matrix xs = Matrix::from_rows({{0.25}});
    BatchOptions opts;
    opts.importance = is_options(2000);
    opts.base_seed = 11;
    const auto batch = batch_estimate(xs, model, opts);
    const auto single = estimate_is(xs.row(0), model, opts.importance, point_seed(11, xs.row(0)));
    EXPECT_EQ(batch[0], single.log_density);
    opts.method = EstimateMethod::Laplace;
    EXPECT_EQ(batch_estimate(xs, model, opts)[0], estimate_laplace(xs.row(0), model));
}

TEST(BatchEstimate, PermutationAndThreadsDoNotChangeResults) {
    Rng rng(7);
    Mlp g = oracle::random_net(rng, {1, 6, 2}, Activation::leaky_relu(), Activation::identity());
    Mlp h = oracle::random_net(rng, {2, 6, 1}, Activation::leaky_relu(), Activation::identity());
    const RoundtripModel model{g, h, 0.3, {}};
    const Matrix xs = oracle::random_matrix(rng, 12, 2);
    std::vector<std::size_t> perm(12);
    for (std::size_t i = 0; i < 12; ++i) {
        perm[i] = (i * 5 + 3) % 12;
    }
    const Matrix permuted = xs.gather_rows(perm);
    for (auto method : {EstimateMethod::ImportanceSampling, EstimateMethod::Laplace}) {
        BatchOptions opts;
        opts.method = method;
        opts.importance = is_options(500);
        opts.base_seed = 3;
        const auto serial = batch_estimate(xs, model, opts);
        const auto shuffled = batch_estimate(permuted, model, opts);
        for (std::size_t i = 0; i < 12; ++i) {
            EXPECT_EQ(shuffled[i], serial[perm[i]]);
        }
        opts.threads = 4;
        EXPECT_EQ(batch_estimate(xs, model, opts), serial);
    }
}

TEST(BatchEstimate, ErrorsNameTheRow) {
    const RoundtripModel model = oracle::affine_model(Matrix::identity(2), {0.0, 0.0}, 1.0);
    Matrix xs(4, 2, 0.5);
    xs(2, 1) = std::nan("");
    BatchOptions opts;
    opts.method = EstimateMethod::Laplace;
    try {
        batch_estimate(xs, model, opts);
        FAIL() << "expected an error";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
    }
    EXPECT_THROW(batch_estimate(Matrix(3, 1, 0.0), model, opts), ShapeError);
}

TEST(BatchEstimate, NormalizedModelReportsRawDensity) {
    // x_model = (x - lo) / (hi - lo); the raw density picks up -log(hi - lo).
    RoundtripModel model = identity_model(0.5);
    model.norm = NormStats{{2.0}, {6.0}};
    BatchOptions opts;
    opts.method = EstimateMethod::Laplace;
    const double raw = batch_estimate(Matrix::from_rows({{4.0}}), model, opts)[0];
    const double model_space = estimate_laplace(std::vector<double>{0.5}, identity_model(0.5));
    EXPECT_NEAR(raw, model_space - std::log(4.0), 1e-12);
}
