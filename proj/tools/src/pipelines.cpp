#include "rtde/pipelines.hpp"

#include "roundtrip/dataset.hpp"
#include "roundtrip/errors.hpp"
#include "roundtrip/estimators.hpp"
#include "roundtrip/simdata.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

namespace rtde {

using roundtrip::InputError;
using roundtrip::Matrix;
using roundtrip::metrics::EvalReport;

KdeChoice kde_choice_from_name(const std::string& name) {
    if (name == "best") {
        return KdeChoice::Best;
    }
    if (name == "silverman") {
        return KdeChoice::Silverman;
    }
    if (name == "scott") {
        return KdeChoice::Scott;
    }
    throw InputError("unknown KDE rule '" + name + "' (expected best, silverman or scott)");
}

std::string kde_choice_name(KdeChoice choice) {
    switch (choice) {
    case KdeChoice::Silverman:
        return "silverman";
    case KdeChoice::Scott:
        return "scott";
    case KdeChoice::Best:
        break;
    }
    return "best";
}

std::vector<double> estimate_with(const std::string& method, const Matrix& points,
                                  const roundtrip::RoundtripModel& model,
                                  const EstimationSettings& settings) {
    roundtrip::BatchOptions options;
    options.importance.num_samples = settings.is_samples;
    options.importance.proposal = settings.proposal;
    options.base_seed = settings.seed;
    options.threads = settings.threads;
    if (method == "roundtrip-is" || method == "is") {
        options.method = roundtrip::EstimateMethod::ImportanceSampling;
    } else if (method == "roundtrip-lp" || method == "lp") {
        options.method = roundtrip::EstimateMethod::Laplace;
    } else {
        throw InputError("unknown estimation method '" + method + "'");
    }
    return roundtrip::batch_estimate(points, model, options);
}

namespace {

void check_methods(const std::vector<std::string>& methods) {
    if (methods.empty()) {
        throw InputError("no methods requested");
    }
    for (const auto& m : methods) {
        if (std::find(kAllMethods.begin(), kAllMethods.end(), m) == kAllMethods.end()) {
            throw InputError("unknown method '" + m + "' (expected roundtrip-is, roundtrip-lp or kde)");
        }
    }
}

bool wants_model(const std::vector<std::string>& methods) {
    return std::any_of(methods.begin(), methods.end(),
                       [](const std::string& m) { return m != "kde"; });
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void echo_model_config(EvalReport& report, const roundtrip::RoundtripConfig& config,
                       const roundtrip::TrainResult& trained, const EstimationSettings& est,
                       const std::string& method) {
    using roundtrip::format_double;
    auto& c = report.config;
    c.emplace_back("sigma", format_double(trained.model.sigma));
    c.emplace_back("latent_dim", std::to_string(config.latent_dim));
    c.emplace_back("train_seed", std::to_string(config.seed));
    c.emplace_back("best_epoch", std::to_string(trained.log.best_epoch));
    c.emplace_back("stopped_epoch", std::to_string(trained.log.stopped_epoch));
    if (method == "roundtrip-is") {
        c.emplace_back("is_samples", std::to_string(est.is_samples));
        c.emplace_back("proposal_dof", format_double(est.proposal.dof));
        c.emplace_back("proposal_scale", format_double(est.proposal.scale));
        c.emplace_back("estimate_seed", std::to_string(est.seed));
    }
}

struct KdeOutcome {
    std::vector<double> log_densities;
    roundtrip::kde::BandwidthRule rule;
    std::vector<KdeRuleScore> per_rule;
};

/// Fits each candidate rule on the training rows; the rule with the higher
/// validation mean log-likelihood is tagged (ties go to Silverman).
template <typename Score>
KdeOutcome kde_scores(const Matrix& train, const Matrix& validation, const Matrix& query,
                      KdeChoice choice, Score score) {
    using roundtrip::kde::BandwidthRule;
    std::vector<BandwidthRule> rules;
    if (choice != KdeChoice::Scott) {
        rules.push_back(BandwidthRule::Silverman);
    }
    if (choice != KdeChoice::Silverman) {
        rules.push_back(BandwidthRule::Scott);
    }
    KdeOutcome best;
    double best_val = -std::numeric_limits<double>::infinity();
    for (BandwidthRule rule : rules) {
        const auto model = roundtrip::kde::fit_kde(train, rule);
        const double val = validation.rows() > 0
                               ? roundtrip::metrics::mean_log_likelihood(
                                     roundtrip::kde::kde_log_density(model, validation))
                               : 0.0;
        std::vector<double> values = roundtrip::kde::kde_log_density(model, query);
        best.per_rule.push_back({rule, val, score(values)});
        if (best.log_densities.empty() || val > best_val) {
            best_val = val;
            best.rule = rule;
            best.log_densities = std::move(values);
        }
    }
    return best;
}

void echo_kde(EvalReport& report, const KdeOutcome& k, const std::string& metric) {
    report.config.emplace_back("kde_rule", roundtrip::kde::rule_name(k.rule));
    for (const auto& r : k.per_rule) {
        const std::string name = roundtrip::kde::rule_name(r.rule);
        report.config.emplace_back("kde_" + name + "_val_log_likelihood", roundtrip::format_double(r.val_log_likelihood));
        report.config.emplace_back("kde_" + name + "_" + metric, roundtrip::format_double(r.test_score));
    }
}

} // namespace

BenchmarkRun run_benchmark(const BenchmarkSpec& spec) {
    check_methods(spec.methods);
    const auto task = roundtrip::sim::SimTask::by_name(spec.task, spec.dim);
    if (!task) {
        throw InputError("unknown task '" + spec.task + "' (expected indep-mixture, octagon or involute)");
    }
    if (spec.count < 10) {
        throw InputError("benchmark needs at least 10 samples");
    }

    roundtrip::Rng sim_rng = roundtrip::Rng(spec.seed).substream(roundtrip::Stream::Simulation);
    const Matrix data = task->sample(spec.count, sim_rng);
    const roundtrip::SplitSpec parts = roundtrip::split(data.rows(), spec.seed);
    std::vector<std::size_t> test_rows = parts.test;
    if (spec.test_points != 0 && spec.test_points < test_rows.size()) {
        test_rows.resize(spec.test_points);
    }
    const Matrix train_x = data.gather_rows(parts.train);
    const Matrix val_x = data.gather_rows(parts.validation);
    const Matrix test_x = data.gather_rows(test_rows);

    BenchmarkRun run;
    run.truth = task->log_density(test_x);

    roundtrip::RoundtripConfig config = spec.train;
    if (config.latent_dim == 0) {
        config.latent_dim = task->dim();
    }
    if (wants_model(spec.methods)) {
        const auto start = std::chrono::steady_clock::now();
        run.trained = roundtrip::train(train_x, val_x, config);
        run.train_seconds = seconds_since(start);
        run.trained_model = true;
    }

    auto spearman_of = [&](const std::vector<double>& v) { return roundtrip::metrics::spearman(run.truth, v); };
    for (const auto& method : spec.methods) {
        EvalReport report;
        report.task = task->name();
        report.method = method;
        report.config.emplace_back("dim", std::to_string(task->dim()));
        report.config.emplace_back("count", std::to_string(spec.count));
        report.config.emplace_back("seed", std::to_string(spec.seed));
        if (method == "kde") {
            KdeOutcome k = kde_scores(train_x, val_x, test_x, spec.kde, spearman_of);
            echo_kde(report, k, "spearman");
            run.kde_rules = k.per_rule;
            report.log_densities = std::move(k.log_densities);
        } else {
            report.log_densities = estimate_with(method, test_x, run.trained.model, spec.estimation);
            echo_model_config(report, config, run.trained, spec.estimation, method);
        }
        report.spearman = spearman_of(report.log_densities);
        report.mean_log_likelihood = roundtrip::metrics::mean_log_likelihood(report.log_densities);
        run.reports.push_back(std::move(report));
    }
    return run;
}

OutlierRun run_outlier(const OutlierSpec& spec) {
    check_methods(spec.methods);
    if (spec.points.rows() != spec.labels.size()) {
        throw InputError("outlier data has " + std::to_string(spec.points.rows()) + " rows but " +
                         std::to_string(spec.labels.size()) + " labels");
    }
    const roundtrip::SplitSpec parts = roundtrip::split(spec.points.rows(), spec.seed);
    std::vector<bool> test_labels;
    for (std::size_t i : parts.test) {
        test_labels.push_back(spec.labels[i]);
    }
    OutlierRun run;
    run.k = static_cast<std::size_t>(std::count(test_labels.begin(), test_labels.end(), true));
    if (run.k == 0) {
        throw InputError("the test split contains no outliers");
    }

    Matrix train_x = spec.points.gather_rows(parts.train);
    Matrix val_x = spec.points.gather_rows(parts.validation);
    Matrix test_x = spec.points.gather_rows(parts.test);
    roundtrip::NormStats norm;
    if (spec.normalize) {
        norm = roundtrip::fit_minmax(train_x);
        run.constant_columns = norm.constant_columns();
    }
    // KDE works in the same (possibly scaled) space the model was trained in.
    const Matrix train_m = spec.normalize ? roundtrip::minmax_normalize(train_x, norm) : train_x;
    const Matrix val_m = spec.normalize ? roundtrip::minmax_normalize(val_x, norm) : val_x;
    const Matrix test_m = spec.normalize ? roundtrip::minmax_normalize(test_x, norm) : test_x;

    roundtrip::RoundtripConfig config = spec.train;
    if (config.latent_dim == 0) {
        config.latent_dim = spec.points.cols();
    }
    if (wants_model(spec.methods)) {
        const auto start = std::chrono::steady_clock::now();
        run.trained = roundtrip::train(train_m, val_m, config);
        run.trained.model.norm = norm;
        run.train_seconds = seconds_since(start);
        run.trained_model = true;
    }

    auto precision_of = [&](const std::vector<double>& v) {
        return roundtrip::metrics::precision_at_k(roundtrip::metrics::outlier_scores(v), test_labels, run.k);
    };
    for (const auto& method : spec.methods) {
        EvalReport report;
        report.task = spec.name;
        report.method = method;
        report.config.emplace_back("rows", std::to_string(spec.points.rows()));
        report.config.emplace_back("normalize", spec.normalize ? "minmax" : "none");
        report.config.emplace_back("seed", std::to_string(spec.seed));
        if (method == "kde") {
            KdeOutcome k = kde_scores(train_m, val_m, test_m, spec.kde, precision_of);
            echo_kde(report, k, "precision_at_k");
            run.kde_rules = k.per_rule;
            const double shift = norm.log_scale();
            for (double& v : k.log_densities) {
                v -= shift;
            }
            report.log_densities = std::move(k.log_densities);
        } else {
            report.log_densities = estimate_with(method, test_x, run.trained.model, spec.estimation);
            echo_model_config(report, config, run.trained, spec.estimation, method);
        }
        report.precision_at_k = precision_of(report.log_densities);
        report.k = run.k;
        report.mean_log_likelihood = roundtrip::metrics::mean_log_likelihood(report.log_densities);
        run.reports.push_back(std::move(report));
    }
    return run;
}

} // namespace rtde
