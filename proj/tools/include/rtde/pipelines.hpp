#pragma once

#include "roundtrip/kde.hpp"
#include "roundtrip/metrics.hpp"
#include "roundtrip/model.hpp"
#include "roundtrip/trainer.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rtde {

inline const std::vector<std::string> kAllMethods{"roundtrip-is", "roundtrip-lp", "kde"};

/// Rule used by the kde method: a fixed rule, or whichever of Silverman and
/// Scott has the higher validation log-likelihood (ties go to Silverman).
enum class KdeChoice { Best, Silverman, Scott };

KdeChoice kde_choice_from_name(const std::string& name);
std::string kde_choice_name(KdeChoice choice);

/// One KDE bandwidth rule: validation mean log-likelihood and the test metric
/// (Spearman for benchmarks, precision at k for outlier runs).
struct KdeRuleScore {
    roundtrip::kde::BandwidthRule rule;
    double val_log_likelihood = 0.0;
    double test_score = 0.0;
};

struct EstimationSettings {
    std::size_t is_samples = 40000;
    roundtrip::ProposalParams proposal;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

/// Log-densities from one of the two model-based methods.
std::vector<double> estimate_with(const std::string& method, const roundtrip::Matrix& points,
                                  const roundtrip::RoundtripModel& model,
                                  const EstimationSettings& settings);

struct BenchmarkSpec {
    std::string task = "indep-mixture";
    std::size_t dim = 2;
    std::size_t count = 20000;
    /// Test rows scored; 0 means the whole test split.
    std::size_t test_points = 0;
    std::vector<std::string> methods = kAllMethods;
    KdeChoice kde = KdeChoice::Best;
    /// latent_dim 0 is replaced by the data dimension.
    roundtrip::RoundtripConfig train;
    EstimationSettings estimation;
    std::uint64_t seed = 0;
};

struct BenchmarkRun {
    std::vector<roundtrip::metrics::EvalReport> reports;  // one per method, in request order
    std::vector<double> truth;
    roundtrip::TrainResult trained;
    bool trained_model = false;
    double train_seconds = 0.0;
    std::vector<KdeRuleScore> kde_rules;
};

/// Simulate, split 81/9/10, train and fit, score the test split.
BenchmarkRun run_benchmark(const BenchmarkSpec& spec);

struct OutlierSpec {
    /// Points and labels; normalization is fitted on the training rows when
    /// `normalize` is set.
    roundtrip::Matrix points;
    std::vector<bool> labels;
    bool normalize = false;
    std::string name = "outlier";
    std::vector<std::string> methods = kAllMethods;
    KdeChoice kde = KdeChoice::Best;
    roundtrip::RoundtripConfig train;
    EstimationSettings estimation;
    std::uint64_t seed = 0;
};

struct OutlierRun {
    std::vector<roundtrip::metrics::EvalReport> reports;
    /// Columns that were constant on the training rows (scaled to 0.5).
    std::vector<std::size_t> constant_columns;
    std::size_t k = 0;
    roundtrip::TrainResult trained;
    bool trained_model = false;
    double train_seconds = 0.0;
    std::vector<KdeRuleScore> kde_rules;
};

/// Split 81/9/10, train on the (contaminated) training rows, rank the test
/// rows by negated log-density, precision at k = number of test outliers.
OutlierRun run_outlier(const OutlierSpec& spec);

} // namespace rtde
