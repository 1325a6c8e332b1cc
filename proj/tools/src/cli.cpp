#include "rtde/cli.hpp"

#include "rtde/pipelines.hpp"

#include "roundtrip/checkpoint.hpp"
#include "roundtrip/dataset.hpp"
#include "roundtrip/errors.hpp"
#include "roundtrip/estimators.hpp"
#include "roundtrip/kde.hpp"
#include "roundtrip/metrics.hpp"
#include "roundtrip/simdata.hpp"
#include "roundtrip/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace rtde {

namespace fs = std::filesystem;
using roundtrip::format_double;
using roundtrip::InputError;
using roundtrip::Matrix;

namespace {

void warn_constant_columns(const std::vector<std::size_t>& cols, std::ostream& es) {
    for (std::size_t c : cols) {
        es << "warning: column " << c + 1 << " is constant on the training rows; scaled to 0.5\n";
    }
}

void warn_constant_columns(const roundtrip::NormStats& norm, std::ostream& es) {
    warn_constant_columns(norm.constant_columns(), es);
}

struct Globals {
    std::uint64_t seed = 0;
    std::string out = ".";
    std::string config;
    std::size_t threads = 1;
    std::string preset = "small";
    std::size_t is_samples = 40000;
    double proposal_dof = 5.0;
    double proposal_scale = 1.0;
};

struct TrainFlags {
    std::size_t latent_dim = 0;
    double alpha = 10.0;
    double beta = 10.0;
    std::string sigma_grid = "0.01,0.05,0.1,0.2,0.4,0.5";
    double sigma = 0.0;
    std::size_t pretrain_epochs = 20;
    std::size_t max_epochs = 200;
    std::size_t batch_size = 64;
    std::size_t iterations_per_epoch = 0;
    std::size_t patience = 10;
    double learning_rate = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    std::size_t val_is_samples = 2000;
    std::size_t val_max_points = 0;
};

/// Settings echoed to resolved_config.txt, keyed by flag name.
class Echo {
public:
    void add(const std::string& key, const std::string& value) { values_[key] = value; }
    void add(const std::string& key, double value) { values_[key] = format_double(value); }
    void add(const std::string& key, std::size_t value) { values_[key] = std::to_string(value); }

    std::string text(const std::string& command) const {
        std::string out = "# rtde " + command + "\n";
        for (const auto& [key, value] : values_) {
            out += key + "=" + value + "\n";
        }
        return out;
    }

private:
    std::map<std::string, std::string> values_;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream file(path, std::ios::binary);
    file << text;
    file.flush();
    if (!file) {
        throw roundtrip::IoError("cannot write " + path.string());
    }
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            items.push_back(item);
        }
    }
    return items;
}

double parse_number(const std::string& text, const std::string& what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw InputError(what + ": '" + text + "' is not a number");
    }
    return v;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        out.push_back(parse_number(item, what));
    }
    if (out.empty()) {
        throw InputError(what + " is empty");
    }
    return out;
}

void add_global_options(CLI::App& app, Globals& g) {
    app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--config", g.config, "Flat key=value file; command-line flags take precedence");
    app.add_option("--threads", g.threads, "Worker threads for batch estimation and grids")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--preset", g.preset, "Network sizes")
        ->check(CLI::IsMember({"small", "paper"}))
        ->capture_default_str();
    app.add_option("--is-samples", g.is_samples, "Importance samples per point")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--proposal-dof", g.proposal_dof, "Degrees of freedom of the Student's t proposal")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--proposal-scale", g.proposal_scale, "Scale of the Student's t proposal")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

void echo_globals(Echo& echo, const Globals& g) {
    echo.add("seed", static_cast<std::size_t>(g.seed));
    echo.add("preset", g.preset);
    echo.add("is-samples", g.is_samples);
    echo.add("proposal-dof", g.proposal_dof);
    echo.add("proposal-scale", g.proposal_scale);
}

void add_training_options(CLI::App& cmd, TrainFlags& t) {
    cmd.add_option("--latent-dim", t.latent_dim, "Latent dimension m (0: same as the data)")->capture_default_str();
    cmd.add_option("--alpha", t.alpha, "Weight of the x roundtrip loss")->capture_default_str();
    cmd.add_option("--beta", t.beta, "Weight of the z roundtrip loss")->capture_default_str();
    cmd.add_option("--sigma-grid", t.sigma_grid, "Candidate noise scales, comma separated")->capture_default_str();
    cmd.add_option("--sigma", t.sigma, "Fixed noise scale (0: select from the grid)")->capture_default_str();
    cmd.add_option("--pretrain-epochs", t.pretrain_epochs, "Epochs before sigma selection")->capture_default_str();
    cmd.add_option("--max-epochs", t.max_epochs, "Upper bound on training epochs")->capture_default_str();
    cmd.add_option("--batch-size", t.batch_size, "Mini-batch size")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("--iterations-per-epoch", t.iterations_per_epoch, "0: one pass over the training rows")
        ->capture_default_str();
    cmd.add_option("--patience", t.patience, "Epochs without validation improvement before stopping")
        ->capture_default_str();
    cmd.add_option("--learning-rate", t.learning_rate, "Adam step size")->capture_default_str();
    cmd.add_option("--beta1", t.beta1, "Adam first-moment decay")->capture_default_str();
    cmd.add_option("--beta2", t.beta2, "Adam second-moment decay")->capture_default_str();
    cmd.add_option("--val-is-samples", t.val_is_samples, "Importance samples per validation point")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd.add_option("--val-max-points", t.val_max_points, "Validation rows used for selection (0: all)")
        ->capture_default_str();
}

void echo_training(Echo& echo, const TrainFlags& t) {
    echo.add("latent-dim", t.latent_dim);
    echo.add("alpha", t.alpha);
    echo.add("beta", t.beta);
    echo.add("sigma-grid", t.sigma_grid);
    echo.add("sigma", t.sigma);
    echo.add("pretrain-epochs", t.pretrain_epochs);
    echo.add("max-epochs", t.max_epochs);
    echo.add("batch-size", t.batch_size);
    echo.add("iterations-per-epoch", t.iterations_per_epoch);
    echo.add("patience", t.patience);
    echo.add("learning-rate", t.learning_rate);
    echo.add("beta1", t.beta1);
    echo.add("beta2", t.beta2);
    echo.add("val-is-samples", t.val_is_samples);
    echo.add("val-max-points", t.val_max_points);
}

roundtrip::RoundtripConfig training_config(const Globals& g, const TrainFlags& t) {
    roundtrip::RoundtripConfig c;
    c.latent_dim = t.latent_dim;
    c.alpha = t.alpha;
    c.beta = t.beta;
    c.sigma_grid = parse_numbers(t.sigma_grid, "sigma grid");
    if (t.sigma < 0.0) {
        throw InputError("--sigma must be positive, or 0 to select from the grid");
    }
    if (t.sigma > 0.0) {
        c.fixed_sigma = t.sigma;
    }
    c.pretrain_epochs = t.pretrain_epochs;
    c.max_epochs = t.max_epochs;
    c.batch_size = t.batch_size;
    c.iterations_per_epoch = t.iterations_per_epoch;
    c.patience_epochs = t.patience;
    c.adam.learning_rate = t.learning_rate;
    c.adam.beta1 = t.beta1;
    c.adam.beta2 = t.beta2;
    c.val_is_samples = t.val_is_samples;
    c.val_max_points = t.val_max_points;
    c.proposal = {g.proposal_dof, g.proposal_scale};
    c.arch = *roundtrip::Architecture::preset(g.preset);
    c.seed = g.seed;
    return c;
}

EstimationSettings estimation_settings(const Globals& g) {
    return {g.is_samples, {g.proposal_dof, g.proposal_scale}, g.seed, g.threads};
}

bool is_metadata_column(const std::string& name) {
    return name == "log_density" || name == "label";
}

/// Feature columns of a CSV: everything except log_density and label.
roundtrip::CsvTable features(roundtrip::CsvTable table) {
    for (std::size_t j = table.header.size(); j-- > 0;) {
        if (is_metadata_column(table.header[j])) {
            table = table.without_column(j);
        }
    }
    if (table.values.cols() == 0) {
        throw InputError("no feature columns left after dropping log_density/label");
    }
    return table;
}

std::vector<std::string> x_header(std::size_t dim) {
    std::vector<std::string> h;
    for (std::size_t j = 0; j < dim; ++j) {
        h.push_back("x" + std::to_string(j + 1));
    }
    return h;
}

Matrix column_matrix(const std::vector<std::vector<double>>& columns) {
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    Matrix m(rows, columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        for (std::size_t r = 0; r < rows; ++r) {
            m(r, j) = columns[j][r];
        }
    }
    return m;
}

void write_train_log(const fs::path& path, const roundtrip::TrainLog& log) {
    Matrix rows(log.epochs.size(), 5);
    for (std::size_t i = 0; i < log.epochs.size(); ++i) {
        const auto& e = log.epochs[i];
        rows(i, 0) = static_cast<double>(e.epoch);
        rows(i, 1) = e.generator_loss;
        rows(i, 2) = e.discriminator_loss;
        rows(i, 3) = e.val_log_likelihood;
        rows(i, 4) = e.sigma;
    }
    roundtrip::write_csv(path, {"epoch", "generator_loss", "discriminator_loss", "val_log_likelihood", "sigma"},
                         rows);
}

std::string sanitize(std::string s) {
    std::replace_if(s.begin(), s.end(), [](char c) { return !std::isalnum(static_cast<unsigned char>(c)) && c != '-'; }, '_');
    return s;
}

// ---- commands -------------------------------------------------------------

struct SimulateFlags {
    std::string task;
    std::size_t dim = 2;
    std::size_t count = roundtrip::sim::kDefaultSampleCount;
};

void cmd_simulate(const Globals& g, const SimulateFlags& f, const fs::path& out, std::ostream& os) {
    const auto task = roundtrip::sim::SimTask::by_name(f.task, f.dim);
    if (!task) {
        throw InputError("unknown task '" + f.task + "' (expected indep-mixture, octagon or involute)");
    }
    Echo echo;
    echo_globals(echo, g);
    echo.add("task", f.task);
    echo.add("dim", task->dim());
    echo.add("count", f.count);

    roundtrip::Rng rng = roundtrip::Rng(g.seed).substream(roundtrip::Stream::Simulation);
    const Matrix x = task->sample(f.count, rng);
    const std::vector<double> truth = task->log_density(x);
    Matrix rows(x.rows(), x.cols() + 1);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            rows(r, j) = x(r, j);
        }
        rows(r, x.cols()) = truth[r];
    }
    auto header = x_header(x.cols());
    header.emplace_back("log_density");
    roundtrip::write_csv(out / "samples.csv", header, rows);
    write_text(out / "resolved_config.txt", echo.text("simulate"));
    os << "wrote " << rows.rows() << " samples of " << task->name() << " (dim " << task->dim() << ")\n";
}

struct TrainCmdFlags {
    std::string data;
    std::string normalize = "minmax";
    TrainFlags train;
};

void cmd_train(const Globals& g, const TrainCmdFlags& f, const fs::path& out, std::ostream& os,
               std::ostream& es) {
    Echo echo;
    echo_globals(echo, g);
    echo_training(echo, f.train);
    echo.add("data", f.data);
    echo.add("normalize", f.normalize);
    roundtrip::RoundtripConfig config = training_config(g, f.train);

    const roundtrip::CsvTable table = features(roundtrip::read_csv(f.data));
    const roundtrip::SplitSpec parts = roundtrip::split(table.values.rows(), g.seed, 0.0, 0.1);
    const Matrix train_raw = table.values.gather_rows(parts.train);
    roundtrip::NormStats norm;
    if (f.normalize == "minmax") {
        norm = roundtrip::fit_minmax(train_raw);
        warn_constant_columns(norm, es);
    }
    const Matrix train_x = f.normalize == "minmax" ? roundtrip::minmax_normalize(train_raw, norm) : train_raw;
    const Matrix val_raw = table.values.gather_rows(parts.validation);
    const Matrix val_x = f.normalize == "minmax" ? roundtrip::minmax_normalize(val_raw, norm) : val_raw;
    if (config.latent_dim == 0) {
        config.latent_dim = train_x.cols();
    }

    roundtrip::TrainHooks hooks;
    hooks.on_epoch = [&](const roundtrip::EpochRecord& e) {
        es << "epoch " << e.epoch << " g_loss " << format_double(e.generator_loss) << " d_loss "
           << format_double(e.discriminator_loss) << " val_ll " << format_double(e.val_log_likelihood) << '\n';
    };
    roundtrip::TrainResult result = roundtrip::train(train_x, val_x, config, hooks);
    result.model.norm = norm;

    roundtrip::save_checkpoint(result.model, out / "model.rtde");
    write_train_log(out / "train_log.csv", result.log);
    write_text(out / "resolved_config.txt", echo.text("train"));
    os << "sigma=" << format_double(result.model.sigma) << " best_epoch=" << result.log.best_epoch
       << " stopped_epoch=" << result.log.stopped_epoch << '\n';
}

struct EstimateFlags {
    std::string model;
    std::string points;
    std::string method = "is";
};

void cmd_estimate(const Globals& g, const EstimateFlags& f, const fs::path& out, std::ostream& os) {
    Echo echo;
    echo_globals(echo, g);
    echo.add("model", f.model);
    echo.add("points", f.points);
    echo.add("method", f.method);
    const roundtrip::RoundtripModel model = roundtrip::load_checkpoint(f.model);
    const roundtrip::CsvTable table = features(roundtrip::read_csv(f.points));
    if (table.values.cols() != model.data_dim()) {
        throw roundtrip::ShapeError("points have " + std::to_string(table.values.cols()) +
                                    " columns, the model expects " + std::to_string(model.data_dim()));
    }
    const std::vector<double> values = estimate_with(f.method, table.values, model, estimation_settings(g));
    roundtrip::write_csv(out / "log_density.csv", {"log_density"}, column_matrix({values}));
    write_text(out / "resolved_config.txt", echo.text("estimate"));
    os << "estimated " << values.size() << " points with method " << f.method << '\n';
}

struct KdeFlags {
    std::string data;
    std::string points;
    std::string rule = "silverman";
    std::string bandwidths;
};

roundtrip::kde::KdeModel fit_kde_from(const KdeFlags& f, const Matrix& data) {
    if (!f.bandwidths.empty()) {
        return roundtrip::kde::fit_kde_fixed(data, parse_numbers(f.bandwidths, "bandwidths"));
    }
    return roundtrip::kde::fit_kde(data, *roundtrip::kde::rule_from_name(f.rule));
}

void cmd_kde(const Globals& g, const KdeFlags& f, const fs::path& out, std::ostream& os) {
    Echo echo;
    echo_globals(echo, g);
    echo.add("data", f.data);
    echo.add("points", f.points);
    echo.add("rule", f.rule);
    echo.add("bandwidths", f.bandwidths);
    const Matrix data = features(roundtrip::read_csv(f.data)).values;
    const Matrix points = features(roundtrip::read_csv(f.points)).values;
    const roundtrip::kde::KdeModel model = fit_kde_from(f, data);
    const std::vector<double> values = roundtrip::kde::kde_log_density(model, points);
    roundtrip::write_csv(out / "log_density.csv", {"log_density"}, column_matrix({values}));
    write_text(out / "resolved_config.txt", echo.text("kde"));
    os << "bandwidths";
    for (double h : model.bandwidths) {
        os << ' ' << format_double(h);
    }
    os << '\n';
}

struct GridFlags {
    std::string source = "true";
    std::string task;
    std::string model;
    std::string data;
    std::string rule = "silverman";
    std::size_t resolution = 100;
    std::string bounds;
};

void cmd_grid(const Globals& g, const GridFlags& f, const fs::path& out, std::ostream& os) {
    Echo echo;
    echo_globals(echo, g);
    echo.add("source", f.source);
    echo.add("task", f.task);
    echo.add("model", f.model);
    echo.add("data", f.data);
    echo.add("rule", f.rule);
    echo.add("resolution", f.resolution);
    echo.add("bounds", f.bounds);

    std::optional<roundtrip::sim::SimTask> task;
    if (!f.task.empty()) {
        task = roundtrip::sim::SimTask::by_name(f.task, 2);
        if (!task) {
            throw InputError("unknown task '" + f.task + "'");
        }
    }
    roundtrip::metrics::GridBounds bounds;
    if (!f.bounds.empty()) {
        const auto b = parse_numbers(f.bounds, "bounds");
        if (b.size() == 2) {
            bounds = {b[0], b[1], b[0], b[1]};
        } else if (b.size() == 4) {
            bounds = {b[0], b[1], b[2], b[3]};
        } else {
            throw InputError("--bounds takes lo,hi or x1lo,x1hi,x2lo,x2hi");
        }
    } else if (task) {
        const auto [lo, hi] = task->default_bounds();
        bounds = {lo, hi, lo, hi};
    } else {
        throw InputError("grid needs --bounds or --task");
    }
    if (!(bounds.x1_lo < bounds.x1_hi && bounds.x2_lo < bounds.x2_hi)) {
        throw InputError("grid bounds must satisfy lo < hi");
    }

    Matrix grid;
    if (f.source == "true") {
        if (!task) {
            throw InputError("--source true needs --task");
        }
        grid = roundtrip::metrics::render_grid([&](std::span<const double> x) { return task->log_density(x); },
                                               task->dim(), bounds, f.resolution, g.threads);
    } else if (f.source == "kde") {
        if (f.data.empty()) {
            throw InputError("--source kde needs --data");
        }
        const Matrix data = features(roundtrip::read_csv(f.data)).values;
        KdeFlags kf;
        kf.rule = f.rule;
        const auto model = fit_kde_from(kf, data);
        grid = roundtrip::metrics::render_grid(
            [&](std::span<const double> x) { return roundtrip::kde::kde_log_density(model, x); }, model.dim(),
            bounds, f.resolution, g.threads);
    } else {
        if (f.model.empty()) {
            throw InputError("--source " + f.source + " needs --model");
        }
        const roundtrip::RoundtripModel model = roundtrip::load_checkpoint(f.model);
        // Coordinates first, then one batch call so importance-sampling seeds follow row order.
        grid = roundtrip::metrics::render_grid([](std::span<const double>) { return 0.0; }, model.data_dim(),
                                               bounds, f.resolution, 1);
        Matrix coords(grid.rows(), 2);
        for (std::size_t r = 0; r < grid.rows(); ++r) {
            coords(r, 0) = grid(r, 0);
            coords(r, 1) = grid(r, 1);
        }
        const auto values = estimate_with(f.source, coords, model, estimation_settings(g));
        for (std::size_t r = 0; r < grid.rows(); ++r) {
            grid(r, 2) = values[r];
        }
    }
    roundtrip::metrics::write_grid_csv(out / "grid.csv", grid);
    write_text(out / "resolved_config.txt", echo.text("grid"));
    os << "wrote " << grid.rows() << " grid cells\n";
}

struct BenchmarkFlags {
    std::string task = "indep-mixture";
    std::string dims = "2";
    std::string methods = "roundtrip-is,roundtrip-lp,kde";
    std::size_t count = roundtrip::sim::kDefaultSampleCount;
    std::size_t test_points = 0;
    std::string kde_rule = "best";
    TrainFlags train;
};

void write_report(const fs::path& path, const roundtrip::metrics::EvalReport& report, std::ostream& os) {
    const std::string text = report.to_text();
    write_text(path, text);
    os << text << '\n';
}

void cmd_benchmark(const Globals& g, const BenchmarkFlags& f, const fs::path& out, std::ostream& os,
                   std::ostream& es) {
    Echo echo;
    echo_globals(echo, g);
    echo_training(echo, f.train);
    echo.add("task", f.task);
    echo.add("dims", f.dims);
    echo.add("methods", f.methods);
    echo.add("count", f.count);
    echo.add("test-points", f.test_points);
    echo.add("kde-rule", f.kde_rule);

    BenchmarkSpec spec;
    spec.task = f.task;
    spec.count = f.count;
    spec.test_points = f.test_points;
    spec.methods = split_list(f.methods);
    spec.kde = kde_choice_from_name(f.kde_rule);
    spec.train = training_config(g, f.train);
    spec.estimation = estimation_settings(g);
    spec.seed = g.seed;
    std::vector<std::size_t> dims;
    for (double d : parse_numbers(f.dims, "dims")) {
        if (!(d >= 1.0) || d != static_cast<double>(static_cast<std::size_t>(d))) {
            throw InputError("dims must be positive integers");
        }
        dims.push_back(static_cast<std::size_t>(d));
    }
    write_text(out / "resolved_config.txt", echo.text("benchmark"));

    for (std::size_t dim : dims) {
        spec.dim = dim;
        const BenchmarkRun run = run_benchmark(spec);
        const std::string stem = sanitize(run.reports.front().task) + "_d" + std::to_string(dim);
        if (run.trained_model) {
            roundtrip::save_checkpoint(run.trained.model, out / ("model_" + stem + ".rtde"));
            write_train_log(out / ("train_log_" + stem + ".csv"), run.trained.log);
            es << stem << ": trained in " << run.train_seconds << " s\n";
        }
        std::vector<std::string> header{"true_log_density"};
        std::vector<std::vector<double>> columns{run.truth};
        for (const auto& report : run.reports) {
            header.push_back(report.method);
            columns.push_back(report.log_densities);
            write_report(out / ("report_" + stem + "_" + sanitize(report.method) + ".txt"), report, os);
        }
        roundtrip::write_csv(out / ("log_density_" + stem + ".csv"), header, column_matrix(columns));
    }
}

struct OutlierFlags {
    std::string data;
    std::string label_column = "label";
    double fraction = 0.0;
    std::size_t dim = 6;
    std::size_t count = 10000;
    std::string normalize = "auto";
    std::string methods = "roundtrip-is,roundtrip-lp,kde";
    std::string kde_rule = "best";
    TrainFlags train;
};

void cmd_outlier(const Globals& g, const OutlierFlags& f, const fs::path& out, std::ostream& os,
                 std::ostream& es) {
    if (f.data.empty() == (f.fraction == 0.0)) {
        throw InputError("outlier needs exactly one of --data (labelled CSV) or --fraction (synthetic)");
    }
    Echo echo;
    echo_globals(echo, g);
    echo_training(echo, f.train);
    echo.add("methods", f.methods);
    echo.add("kde-rule", f.kde_rule);
    echo.add("normalize", f.normalize);

    OutlierSpec spec;
    if (!f.data.empty()) {
        echo.add("data", f.data);
        echo.add("label-column", f.label_column);
        roundtrip::CsvTable table = roundtrip::read_csv(f.data);
        const auto col = table.column(f.label_column);
        if (!col) {
            throw InputError("no column named '" + f.label_column + "' in " + f.data);
        }
        for (std::size_t r = 0; r < table.values.rows(); ++r) {
            spec.labels.push_back(table.values(r, *col) != 0.0);
        }
        table = table.without_column(*col);
        spec.points = features(std::move(table)).values;
        spec.normalize = f.normalize != "none";
        spec.name = fs::path(f.data).stem().string();
    } else {
        echo.add("fraction", f.fraction);
        echo.add("dim", f.dim);
        echo.add("count", f.count);
        roundtrip::Rng rng = roundtrip::Rng(g.seed).substream(roundtrip::Stream::Simulation);
        auto ds = roundtrip::sim::make_outlier_dataset(f.dim, f.count, f.fraction, rng);
        spec.points = std::move(ds.points);
        spec.labels = std::move(ds.labels);
        spec.normalize = f.normalize == "minmax";
        spec.name = "synthetic-outlier";
    }
    spec.methods = split_list(f.methods);
    spec.kde = kde_choice_from_name(f.kde_rule);
    spec.train = training_config(g, f.train);
    spec.estimation = estimation_settings(g);
    spec.seed = g.seed;
    write_text(out / "resolved_config.txt", echo.text("outlier"));

    const OutlierRun run = run_outlier(spec);
    warn_constant_columns(run.constant_columns, es);
    const std::string stem = "outlier";
    if (run.trained_model) {
        roundtrip::save_checkpoint(run.trained.model, out / "model_outlier.rtde");
        write_train_log(out / "train_log_outlier.csv", run.trained.log);
        es << "trained in " << run.train_seconds << " s\n";
    }
    for (const auto& report : run.reports) {
        write_report(out / ("report_" + stem + "_" + sanitize(report.method) + ".txt"), report, os);
    }
}

// ---- parsing ----------------------------------------------------------------

std::optional<std::string> find_config_path(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            return args[i + 1];
        }
        if (args[i].rfind("--config=", 0) == 0) {
            return args[i].substr(9);
        }
    }
    return std::nullopt;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw roundtrip::IoError("cannot open config file " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::stringstream in(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        line = trim(line);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw InputError("config line " + std::to_string(number) + ": expected key=value");
        }
        entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return entries;
}

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Roundtrip density estimation", "rtde"};
    // Config-file values are appended after the user's arguments; the first
    // occurrence of an option wins, so explicit flags take precedence.
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeFirst);
    app.require_subcommand(1);

    Globals globals;
    add_global_options(app, globals);

    SimulateFlags simulate;
    auto* sim_cmd = app.add_subcommand("simulate", "Draw samples from a simulation task");
    sim_cmd->fallthrough();
    sim_cmd->add_option("--task", simulate.task, "indep-mixture, octagon or involute")->required();
    sim_cmd->add_option("--dim", simulate.dim, "Dimension (indep-mixture only)")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--count", simulate.count, "Number of samples")->check(CLI::PositiveNumber);

    TrainCmdFlags train;
    auto* train_cmd = app.add_subcommand("train", "Fit a model to a CSV of points");
    train_cmd->fallthrough();
    train_cmd->add_option("--data", train.data, "Training CSV")->required();
    train_cmd->add_option("--normalize", train.normalize, "Column scaling")
        ->check(CLI::IsMember({"minmax", "none"}))
        ->capture_default_str();
    add_training_options(*train_cmd, train.train);

    EstimateFlags estimate;
    auto* est_cmd = app.add_subcommand("estimate", "Log-density of points under a trained model");
    est_cmd->fallthrough();
    est_cmd->add_option("--model", estimate.model, "Checkpoint file")->required();
    est_cmd->add_option("--points", estimate.points, "CSV of query points")->required();
    est_cmd->add_option("--method", estimate.method, "is or lp")
        ->check(CLI::IsMember({"is", "lp"}))
        ->capture_default_str();

    GridFlags grid;
    auto* grid_cmd = app.add_subcommand("grid", "Log-density over a 2-D grid");
    grid_cmd->fallthrough();
    grid_cmd->add_option("--source", grid.source, "true, is, lp or kde")
        ->check(CLI::IsMember({"true", "is", "lp", "kde"}))
        ->capture_default_str();
    grid_cmd->add_option("--task", grid.task, "Simulation task (true density, default bounds)");
    grid_cmd->add_option("--model", grid.model, "Checkpoint for is/lp");
    grid_cmd->add_option("--data", grid.data, "Training CSV for kde");
    grid_cmd->add_option("--rule", grid.rule, "KDE bandwidth rule")
        ->check(CLI::IsMember({"silverman", "scott"}))
        ->capture_default_str();
    grid_cmd->add_option("--resolution", grid.resolution, "Points per axis")->capture_default_str();
    grid_cmd->add_option("--bounds", grid.bounds, "lo,hi or x1lo,x1hi,x2lo,x2hi");

    BenchmarkFlags bench;
    auto* bench_cmd = app.add_subcommand("benchmark", "Simulate, train and score against the true density");
    bench_cmd->fallthrough();
    bench_cmd->add_option("--task", bench.task, "Simulation task")->capture_default_str();
    bench_cmd->add_option("--dims", bench.dims, "Comma-separated dimensions")->capture_default_str();
    bench_cmd->add_option("--methods", bench.methods, "Comma-separated methods")->capture_default_str();
    bench_cmd->add_option("--count", bench.count, "Samples drawn per dimension")->capture_default_str();
    bench_cmd->add_option("--test-points", bench.test_points, "Test rows scored (0: all)")->capture_default_str();
    bench_cmd->add_option("--kde-rule", bench.kde_rule, "best, silverman or scott")
        ->check(CLI::IsMember({"best", "silverman", "scott"}))
        ->capture_default_str();
    add_training_options(*bench_cmd, bench.train);

    OutlierFlags outlier;
    auto* out_cmd = app.add_subcommand("outlier", "Rank test points by density and score precision at k");
    out_cmd->fallthrough();
    out_cmd->add_option("--data", outlier.data, "Labelled CSV");
    out_cmd->add_option("--label-column", outlier.label_column, "Nonzero marks an outlier")->capture_default_str();
    out_cmd->add_option("--fraction", outlier.fraction, "Outlier fraction of a synthetic dataset")
        ->check(CLI::Range(0.0, 0.5));
    out_cmd->add_option("--dim", outlier.dim, "Synthetic dimension")->capture_default_str();
    out_cmd->add_option("--count", outlier.count, "Synthetic row count")->capture_default_str();
    out_cmd->add_option("--normalize", outlier.normalize, "auto: minmax for --data, none for synthetic")
        ->check(CLI::IsMember({"auto", "minmax", "none"}))
        ->capture_default_str();
    out_cmd->add_option("--methods", outlier.methods, "Comma-separated methods")->capture_default_str();
    out_cmd->add_option("--kde-rule", outlier.kde_rule, "best, silverman or scott")
        ->check(CLI::IsMember({"best", "silverman", "scott"}))
        ->capture_default_str();
    add_training_options(*out_cmd, outlier.train);

    KdeFlags kde;
    auto* kde_cmd = app.add_subcommand("kde", "Gaussian kernel density baseline");
    kde_cmd->fallthrough();
    kde_cmd->add_option("--data", kde.data, "Training CSV")->required();
    kde_cmd->add_option("--points", kde.points, "CSV of query points")->required();
    kde_cmd->add_option("--rule", kde.rule, "silverman or scott")
        ->check(CLI::IsMember({"silverman", "scott"}))
        ->capture_default_str();
    kde_cmd->add_option("--bandwidths", kde.bandwidths, "Fixed per-dimension bandwidths, comma separated");

    try {
        if (const auto path = find_config_path(args)) {
            for (const auto& [key, value] : parse_config_text(read_text(*path))) {
                args.push_back("--" + key + "=" + value);
            }
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        const fs::path out_dir = globals.out;
        fs::create_directories(out_dir);
        if (sim_cmd->parsed()) {
            cmd_simulate(globals, simulate, out_dir, out);
        } else if (train_cmd->parsed()) {
            cmd_train(globals, train, out_dir, out, err);
        } else if (est_cmd->parsed()) {
            cmd_estimate(globals, estimate, out_dir, out);
        } else if (grid_cmd->parsed()) {
            cmd_grid(globals, grid, out_dir, out);
        } else if (bench_cmd->parsed()) {
            cmd_benchmark(globals, bench, out_dir, out, err);
        } else if (out_cmd->parsed()) {
            cmd_outlier(globals, outlier, out_dir, out, err);
        } else if (kde_cmd->parsed()) {
            cmd_kde(globals, kde, out_dir, out);
        }
    } catch (const roundtrip::NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const roundtrip::IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}

} // namespace rtde
