#include "roundtrip/metrics.hpp"

#include "roundtrip/dataset.hpp"
#include "roundtrip/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace roundtrip::metrics {

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw InputError("spearman: inputs have different lengths");
    }
    if (a.size() < 2) {
        throw InputError("spearman: need at least two values");
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::isnan(a[i]) || std::isnan(b[i])) {
            throw InputError("spearman: NaN at index " + std::to_string(i));
        }
    }
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double mean = (n + 1.0) / 2.0;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        const double da = ra[i] - mean;
        const double db = rb[i] - mean;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) {
        throw InputError("spearman: undefined for a constant input");
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double mean_log_likelihood(std::span<const double> log_densities) {
    if (log_densities.empty()) {
        throw InputError("mean log-likelihood of an empty set");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < log_densities.size(); ++i) {
        if (!std::isfinite(log_densities[i])) {
            throw NumericalError("non-finite log-density at index " + std::to_string(i));
        }
        sum += log_densities[i];
    }
    return sum / static_cast<double>(log_densities.size());
}

std::vector<double> outlier_scores(std::span<const double> log_densities) {
    std::vector<double> out(log_densities.size());
    std::transform(log_densities.begin(), log_densities.end(), out.begin(), [](double v) { return -v; });
    return out;
}

double precision_at_k(std::span<const double> scores, const std::vector<bool>& labels, std::size_t k) {
    if (scores.size() != labels.size()) {
        throw InputError("precision@k: scores and labels differ in length");
    }
    if (k == 0) {
        throw InputError("precision@k: k must be positive");
    }
    if (k > scores.size()) {
        throw InputError("precision@k: k exceeds the number of points");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::size_t hits = 0;
    for (std::size_t i = 0; i < k; ++i) {
        hits += labels[order[i]] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

Matrix render_grid(const LogDensityFn& log_density, std::size_t dim, const GridBounds& bounds,
                   std::size_t resolution, std::size_t threads) {
    if (dim != 2) {
        throw ShapeError("grid rendering needs 2-D input, got " + std::to_string(dim) + "-D");
    }
    if (resolution < 2) {
        throw InputError("grid resolution must be at least 2");
    }
    const double step1 = (bounds.x1_hi - bounds.x1_lo) / static_cast<double>(resolution - 1);
    const double step2 = (bounds.x2_hi - bounds.x2_lo) / static_cast<double>(resolution - 1);
    const std::size_t cells = resolution * resolution;
    Matrix grid(cells, 3);
    for (std::size_t i2 = 0; i2 < resolution; ++i2) {
        for (std::size_t i1 = 0; i1 < resolution; ++i1) {
            const std::size_t r = i2 * resolution + i1;
            grid(r, 0) = bounds.x1_lo + step1 * static_cast<double>(i1);
            grid(r, 1) = bounds.x2_lo + step2 * static_cast<double>(i2);
        }
    }

    std::vector<std::exception_ptr> errors(cells);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            try {
                const double point[2] = {grid(r, 0), grid(r, 1)};
                grid(r, 2) = log_density(point);
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, cells);
    if (workers == 1) {
        work(0, cells);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t per = (cells + workers - 1) / workers;
        for (std::size_t t = 0; t < workers; ++t) {
            const std::size_t begin = std::min(cells, t * per);
            pool.emplace_back(work, begin, std::min(cells, begin + per));
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return grid;
}

void write_grid_csv(const std::filesystem::path& path, const Matrix& grid) {
    write_csv(path, {"x1", "x2", "log_density"}, grid);
}

std::string EvalReport::to_text() const {
    std::string out;
    auto line = [&](const std::string& key, const std::string& value) {
        out += key;
        out += '=';
        out += value;
        out += '\n';
    };
    line("task", task);
    line("method", method);
    line("points", std::to_string(log_densities.size()));
    if (spearman) {
        line("spearman", format_double(*spearman));
    }
    if (mean_log_likelihood) {
        line("mean_log_likelihood", format_double(*mean_log_likelihood));
    }
    if (precision_at_k) {
        line("precision_at_k", format_double(*precision_at_k));
    }
    if (k) {
        line("k", std::to_string(*k));
    }
    for (const auto& [key, value] : config) {
        line("config." + key, value);
    }
    return out;
}

} // namespace roundtrip::metrics
