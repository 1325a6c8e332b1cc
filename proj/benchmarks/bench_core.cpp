#include "roundtrip/estimators.hpp"
#include "roundtrip/kde.hpp"
#include "roundtrip/metrics.hpp"
#include "roundtrip/mlp.hpp"
#include "roundtrip/model.hpp"
#include "roundtrip/rng.hpp"
#include "roundtrip/simdata.hpp"

#include <benchmark/benchmark.h>

using namespace roundtrip;

namespace {

Mlp make_net(std::size_t in, std::size_t width, std::size_t depth, std::size_t out, std::uint64_t seed) {
    std::vector<std::size_t> dims{in};
    for (std::size_t i = 1; i < depth; ++i) {
        dims.push_back(width);
    }
    dims.push_back(out);
    Rng rng(seed);
    return init_mlp(dims, Activation::leaky_relu(), Activation::identity(), rng);
}

// G and H at the "small" preset sizes.
RoundtripModel small_model(std::size_t dim) {
    const Architecture a = Architecture::small();
    return RoundtripModel{make_net(dim, a.g.width, a.g.depth, dim, 1), make_net(dim, a.h.width, a.h.depth, dim, 2),
                          0.1, {}};
}

} // namespace

static void BM_Forward(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    const Mlp net = make_net(10, 128, 4, 10, 3);
    Rng rng(4);
    const Matrix x = rng_gaussian(rng, batch, 10);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(net, x));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(4096);

static void BM_Backward(benchmark::State& state) {
    const Mlp net = make_net(10, 128, 4, 10, 3);
    Rng rng(5);
    const Matrix x = rng_gaussian(rng, 64, 10);
    const Matrix up(64, 10, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(backward(net, x, up));
    }
}
BENCHMARK(BM_Backward);

static void BM_Jacobian(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const Mlp net = make_net(dim, 128, 4, dim, 6);
    const std::vector<double> z(dim, 0.3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(jacobian(net, z));
    }
}
BENCHMARK(BM_Jacobian)->Arg(2)->Arg(10);

static void BM_JacobianReverse(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const Mlp net = make_net(dim, 128, 4, dim, 6);
    const std::vector<double> z(dim, 0.3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(jacobian_reverse(net, z));
    }
}
BENCHMARK(BM_JacobianReverse)->Arg(2)->Arg(10);

static void BM_ImportanceSampling(benchmark::State& state) {
    const RoundtripModel model = small_model(2);
    ImportanceOptions opts;
    opts.num_samples = static_cast<std::size_t>(state.range(0));
    const std::vector<double> x{0.2, -0.4};
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_is(x, model, opts, ++seed));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ImportanceSampling)->Arg(2000)->Arg(40000)->Unit(benchmark::kMillisecond);

static void BM_Laplace(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const RoundtripModel model = small_model(dim);
    const std::vector<double> x(dim, 0.1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_laplace(x, model));
    }
}
BENCHMARK(BM_Laplace)->Arg(2)->Arg(10);

static void BM_KdeQuery(benchmark::State& state) {
    Rng rng(7);
    const Matrix train = sim::sample_indep_mixture(static_cast<std::size_t>(state.range(1)),
                                                   static_cast<std::size_t>(state.range(0)), rng);
    const kde::KdeModel model = kde::fit_kde(train, kde::BandwidthRule::Scott);
    const std::vector<double> x(train.cols(), 0.25);
    for (auto _ : state) {
        benchmark::DoNotOptimize(kde::kde_log_density(model, x));
    }
}
BENCHMARK(BM_KdeQuery)->Args({16200, 2})->Args({16200, 10});

static void BM_Spearman(benchmark::State& state) {
    Rng rng(8);
    std::vector<double> a(static_cast<std::size_t>(state.range(0)));
    std::vector<double> b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.gaussian();
        b[i] = a[i] + rng.gaussian();
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(metrics::spearman(a, b));
    }
}
BENCHMARK(BM_Spearman)->Arg(2000);

BENCHMARK_MAIN();
