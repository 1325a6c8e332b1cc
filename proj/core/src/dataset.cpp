#include "roundtrip/dataset.hpp"

#include "roundtrip/errors.hpp"
#include "roundtrip/rng.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace roundtrip {

std::vector<std::size_t> NormStats::constant_columns() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < mins.size(); ++j) {
        if (!(maxs[j] > mins[j])) {
            out.push_back(j);
        }
    }
    return out;
}

double NormStats::log_scale() const noexcept {
    double s = 0.0;
    for (std::size_t j = 0; j < mins.size(); ++j) {
        if (maxs[j] > mins[j]) {
            s += std::log(maxs[j] - mins[j]);
        }
    }
    return s;
}

NormStats fit_minmax(const Matrix& data) {
    if (data.rows() == 0) {
        throw InputError("cannot fit min-max statistics on zero rows");
    }
    NormStats stats;
    stats.mins.assign(data.row(0).begin(), data.row(0).end());
    stats.maxs = stats.mins;
    for (std::size_t r = 1; r < data.rows(); ++r) {
        const auto row = data.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) {
            stats.mins[j] = std::min(stats.mins[j], row[j]);
            stats.maxs[j] = std::max(stats.maxs[j], row[j]);
        }
    }
    return stats;
}

void minmax_normalize_row(std::span<const double> in, const NormStats& stats, std::span<double> out) {
    if (stats.is_identity()) {
        std::copy(in.begin(), in.end(), out.begin());
        return;
    }
    if (in.size() != stats.dim() || out.size() != in.size()) {
        throw ShapeError("normalization: row has " + std::to_string(in.size()) +
                         " columns, statistics have " + std::to_string(stats.dim()));
    }
    for (std::size_t j = 0; j < in.size(); ++j) {
        const double range = stats.maxs[j] - stats.mins[j];
        out[j] = range > 0.0 ? (in[j] - stats.mins[j]) / range : 0.5;
    }
}

Matrix minmax_normalize(const Matrix& data, const NormStats& stats) {
    Matrix out(data.rows(), data.cols());
    for (std::size_t r = 0; r < data.rows(); ++r) {
        minmax_normalize_row(data.row(r), stats, out.row(r));
    }
    return out;
}

Matrix minmax_denormalize(const Matrix& data, const NormStats& stats) {
    if (stats.is_identity()) {
        return data;
    }
    if (data.cols() != stats.dim()) {
        throw ShapeError("denormalization: column count mismatch");
    }
    Matrix out(data.rows(), data.cols());
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t j = 0; j < data.cols(); ++j) {
            const double range = stats.maxs[j] - stats.mins[j];
            out(r, j) = range > 0.0 ? stats.mins[j] + data(r, j) * range : stats.mins[j];
        }
    }
    return out;
}

SplitSpec split(std::size_t count, std::uint64_t seed, double test_fraction,
                double validation_fraction) {
    if (!(test_fraction >= 0.0 && test_fraction < 1.0) ||
        !(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw InputError("split fractions must lie in [0, 1)");
    }
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng(seed).substream(Stream::Split);
    rng.shuffle(std::span<std::size_t>(order));

    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(count)));
    const std::size_t n_rest = count - n_test;
    const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n_rest)));

    SplitSpec spec;
    spec.seed = seed;
    spec.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    spec.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
                           order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
    spec.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), order.end());
    return spec;
}

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == name) {
            return j;
        }
    }
    return std::nullopt;
}

CsvTable CsvTable::without_column(std::size_t col) const {
    if (col >= values.cols()) {
        throw ShapeError("column index out of range");
    }
    CsvTable out;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j != col) {
            out.header.push_back(header[j]);
        }
    }
    out.values = Matrix(values.rows(), values.cols() - 1);
    for (std::size_t r = 0; r < values.rows(); ++r) {
        std::size_t k = 0;
        for (std::size_t j = 0; j < values.cols(); ++j) {
            if (j != col) {
                out.values(r, k++) = values(r, j);
            }
        }
    }
    return out;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_cells(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return cells;
}

std::optional<double> parse_number(std::string_view cell) {
    if (!cell.empty() && cell.front() == '+') {
        cell.remove_prefix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        return std::nullopt;
    }
    return v;
}

} // namespace

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_cells(line);
        if (first) {
            first = false;
            cols = cells.size();
            bool numeric = true;
            for (auto c : cells) {
                numeric = numeric && parse_number(c).has_value();
            }
            if (!numeric) {
                for (auto c : cells) {
                    table.header.emplace_back(c);
                }
                continue;
            }
        }
        if (cells.size() != cols) {
            throw InputError("CSV line " + std::to_string(line_no) + ": expected " +
                             std::to_string(cols) + " cells, found " + std::to_string(cells.size()));
        }
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const auto v = parse_number(cells[j]);
            if (!v) {
                throw InputError("CSV line " + std::to_string(line_no) + ", column " +
                                 std::to_string(j + 1) + ": not a number: '" + std::string(cells[j]) + "'");
            }
            if (!std::isfinite(*v)) {
                throw InputError("CSV line " + std::to_string(line_no) + ", column " +
                                 std::to_string(j + 1) + ": non-finite value");
            }
            values.push_back(*v);
        }
        ++rows;
    }
    if (cols == 0) {
        throw InputError("CSV input is empty");
    }
    table.values = Matrix(rows, cols, std::move(values));
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_csv(buffer.str());
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general);
    return std::string(buf, ptr);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Matrix& values) {
    if (!header.empty() && header.size() != values.cols()) {
        throw ShapeError("CSV header has " + std::to_string(header.size()) + " names for " +
                         std::to_string(values.cols()) + " columns");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    std::string line;
    for (std::size_t j = 0; j < header.size(); ++j) {
        line += (j ? "," : "") + header[j];
    }
    if (!header.empty()) {
        out << line << '\n';
    }
    for (std::size_t r = 0; r < values.rows(); ++r) {
        line.clear();
        for (std::size_t j = 0; j < values.cols(); ++j) {
            if (j) {
                line += ',';
            }
            line += format_double(values(r, j));
        }
        out << line << '\n';
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

IngestedData ingest_csv(const std::filesystem::path& path, const std::vector<std::size_t>& fit_rows) {
    IngestedData data;
    data.table = read_csv(path);
    const Matrix& raw = data.table.values;
    data.stats = fit_rows.empty() ? fit_minmax(raw) : fit_minmax(raw.gather_rows(fit_rows));
    data.normalized = minmax_normalize(raw, data.stats);
    return data;
}

} // namespace roundtrip
