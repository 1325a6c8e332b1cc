#pragma once

#include "roundtrip/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace roundtrip {

/// Per-column min/max used for min-max scaling. Empty means identity.
struct NormStats {
    std::vector<double> mins;
    std::vector<double> maxs;

    bool is_identity() const noexcept { return mins.empty(); }
    std::size_t dim() const noexcept { return mins.size(); }
    /// Columns whose min equals max; they are mapped to 0.5.
    std::vector<std::size_t> constant_columns() const;
    /// Sum of log(max - min) over non-constant columns: the log-Jacobian of
    /// denormalization, subtracted from normalized-space log-densities.
    double log_scale() const noexcept;

    friend bool operator==(const NormStats&, const NormStats&) = default;
};

NormStats fit_minmax(const Matrix& data);
Matrix minmax_normalize(const Matrix& data, const NormStats& stats);
Matrix minmax_denormalize(const Matrix& data, const NormStats& stats);
void minmax_normalize_row(std::span<const double> in, const NormStats& stats, std::span<double> out);

/// Train / validation / test row indices.
struct SplitSpec {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
};

/// Shuffled 90/10 train/test split, then 10% of the train part held out for
/// validation (81/9/10 overall).
SplitSpec split(std::size_t count, std::uint64_t seed, double test_fraction = 0.1,
                double validation_fraction = 0.1);

struct CsvTable {
    std::vector<std::string> header;  // empty when the file had none
    Matrix values;

    std::optional<std::size_t> column(const std::string& name) const;
    /// Copy without the given column (header adjusted).
    CsvTable without_column(std::size_t col) const;
};

/// Comma-separated, '.' decimal point, optional single header line. The
/// first line is a header iff any of its cells fails to parse as a number.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

/// Writes with shortest round-trip number formatting (%g style).
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Matrix& values);
std::string format_double(double v);

/// Reads a CSV, returns the data normalized by statistics of the rows in
/// `fit_rows` (all rows when empty) together with those statistics.
struct IngestedData {
    CsvTable table;
    Matrix normalized;
    NormStats stats;
};
IngestedData ingest_csv(const std::filesystem::path& path,
                        const std::vector<std::size_t>& fit_rows = {});

} // namespace roundtrip
