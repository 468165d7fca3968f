#ifndef DBNCLS_DATA_HPP
#define DBNCLS_DATA_HPP

#include <array>
#include <optional>
#include <string>

#include "dbncls/dataset.hpp"

namespace dbncls {

// Reads an IDX image/label file pair (big-endian headers, unsigned byte
// payload). Pixels are scaled to [0,1] by /255. Magic numbers: 0x00000803
// for images, 0x00000801 for labels. Malformed inputs fail with distinct
// codes: idx_bad_magic, idx_truncated, idx_count_mismatch.
Dataset load_idx(const std::string& image_path, const std::string& label_path);

enum class Normalization { none, minmax };

// Per-feature [min, max] taken from a reference split.
struct MinmaxStats {
    std::vector<double> lo;
    std::vector<double> hi;
};

MinmaxStats compute_minmax(const Dataset& d);

// Maps each feature to [0,1] with the supplied statistics; a degenerate
// (constant) feature maps to 0 everywhere. Values outside the reference
// range clamp to [0,1].
void apply_minmax(Dataset& d, const MinmaxStats& stats);

// Parses a delimited numeric table; the label column holds integral class
// values, remapped to contiguous indices by sorted order. When
// expected_labels is given (loading a test file with the training file's
// label set), a value outside it is an error.
Dataset load_delimited(const std::string& path, std::size_t label_column, char delimiter = ',',
                       const std::optional<std::vector<double>>& expected_labels = std::nullopt);

// Distinct sorted label values of a delimited file, for cross-file loads.
std::vector<double> delimited_label_values(const std::string& path, std::size_t label_column,
                                           char delimiter = ',');

// Per-class sampling without replacement of ceil(fraction * n_class)
// examples. Class index lists are sorted ascending before shuffling, so
// the result depends on the input only through (contents, seed).
Dataset stratified_subsample(const Dataset& d, double fraction, const RngStream& rng);

// Stratified three-way split covering the whole set; per-split totals come
// from largest-remainder rounding of size * ratio.
std::array<Dataset, 3> split(const Dataset& d, const std::array<double, 3>& ratios,
                             const RngStream& rng);

// Stratified split to exact per-split totals; examples beyond the sum of
// the requested counts are dropped.
std::array<Dataset, 3> split_counts(const Dataset& d, const std::array<std::size_t, 3>& counts,
                                    const RngStream& rng);

// Thresholds features at 0.5 into {0,1}.
void binarize(Dataset& d, double threshold = 0.5);

// Test/support writer for the IDX round trip.
void write_idx(const std::string& image_path, const std::string& label_path,
               const std::vector<std::vector<unsigned char>>& images, std::size_t rows,
               std::size_t cols, const std::vector<unsigned char>& labels);

} // namespace dbncls

#endif
