#include "dbncls/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "dbncls/stream_tags.hpp"

namespace dbncls {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw_error(ErrorCategory::io, "file_open", "cannot open '" + path + "'");
    return std::vector<unsigned char>((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>());
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset,
                        const std::string& path) {
    if (offset + 4 > buf.size())
        throw_error(ErrorCategory::format, "idx_truncated",
                    "'" + path + "' ends inside the header");
    return (static_cast<std::uint32_t>(buf[offset]) << 24) |
           (static_cast<std::uint32_t>(buf[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(buf[offset + 2]) << 8) |
           static_cast<std::uint32_t>(buf[offset + 3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace

Dataset load_idx(const std::string& image_path, const std::string& label_path) {
    std::vector<unsigned char> img = read_file(image_path);
    std::uint32_t magic = read_be32(img, 0, image_path);
    if (magic != kImageMagic)
        throw_error(ErrorCategory::format, "idx_bad_magic",
                    "'" + image_path + "' has wrong magic for an IDX image file");
    std::uint32_t count = read_be32(img, 4, image_path);
    std::uint32_t rows = read_be32(img, 8, image_path);
    std::uint32_t cols = read_be32(img, 12, image_path);
    std::size_t pixels = static_cast<std::size_t>(count) * rows * cols;
    if (img.size() < 16 + pixels)
        throw_error(ErrorCategory::format, "idx_truncated",
                    "'" + image_path + "' payload shorter than the declared image count");

    std::vector<unsigned char> lab = read_file(label_path);
    std::uint32_t lab_magic = read_be32(lab, 0, label_path);
    if (lab_magic != kLabelMagic)
        throw_error(ErrorCategory::format, "idx_bad_magic",
                    "'" + label_path + "' has wrong magic for an IDX label file");
    std::uint32_t lab_count = read_be32(lab, 4, label_path);
    if (lab.size() < 8 + lab_count)
        throw_error(ErrorCategory::format, "idx_truncated",
                    "'" + label_path + "' payload shorter than the declared label count");
    if (lab_count != count)
        throw_error(ErrorCategory::format, "idx_count_mismatch",
                    "image and label files declare different example counts");

    Dataset d;
    d.features = Matrix(count, static_cast<std::size_t>(rows) * cols);
    d.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto row = d.features.row(i);
        std::size_t base = 16 + i * rows * cols;
        for (std::size_t j = 0; j < static_cast<std::size_t>(rows) * cols; ++j)
            row[j] = static_cast<double>(img[base + j]) / 255.0;
        d.labels[i] = static_cast<int>(lab[8 + i]);
    }
    int max_label = 0;
    for (int y : d.labels) max_label = std::max(max_label, y);
    d.num_classes = max_label + 1;
    d.check_consistent();
    return d;
}

void write_idx(const std::string& image_path, const std::string& label_path,
               const std::vector<std::vector<unsigned char>>& images, std::size_t rows,
               std::size_t cols, const std::vector<unsigned char>& labels) {
    if (images.size() != labels.size())
        throw_error(ErrorCategory::dimension, "idx_write_counts",
                    "image and label counts differ");
    std::ofstream img(image_path, std::ios::binary);
    if (!img)
        throw_error(ErrorCategory::io, "file_open", "cannot write '" + image_path + "'");
    write_be32(img, kImageMagic);
    write_be32(img, static_cast<std::uint32_t>(images.size()));
    write_be32(img, static_cast<std::uint32_t>(rows));
    write_be32(img, static_cast<std::uint32_t>(cols));
    for (const auto& im : images) {
        if (im.size() != rows * cols)
            throw_error(ErrorCategory::dimension, "idx_write_shape", "image size mismatch");
        img.write(reinterpret_cast<const char*>(im.data()), static_cast<std::streamsize>(im.size()));
    }
    std::ofstream lab(label_path, std::ios::binary);
    if (!lab)
        throw_error(ErrorCategory::io, "file_open", "cannot write '" + label_path + "'");
    write_be32(lab, kLabelMagic);
    write_be32(lab, static_cast<std::uint32_t>(labels.size()));
    lab.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
}

MinmaxStats compute_minmax(const Dataset& d) {
    MinmaxStats s;
    std::size_t cols = d.features.cols();
    s.lo.assign(cols, 0.0);
    s.hi.assign(cols, 0.0);
    for (std::size_t j = 0; j < cols; ++j) {
        double lo = d.features(0, j), hi = d.features(0, j);
        for (std::size_t i = 1; i < d.features.rows(); ++i) {
            lo = std::min(lo, d.features(i, j));
            hi = std::max(hi, d.features(i, j));
        }
        s.lo[j] = lo;
        s.hi[j] = hi;
    }
    return s;
}

void apply_minmax(Dataset& d, const MinmaxStats& stats) {
    if (stats.lo.size() != d.features.cols())
        throw_error(ErrorCategory::dimension, "minmax_shape",
                    "normalization statistics do not match feature width");
    for (std::size_t i = 0; i < d.features.rows(); ++i) {
        auto row = d.features.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            double range = stats.hi[j] - stats.lo[j];
            if (range <= 0.0) {
                row[j] = 0.0; // degenerate feature
            } else {
                row[j] = std::min(1.0, std::max(0.0, (row[j] - stats.lo[j]) / range));
            }
        }
    }
}

namespace {

double parse_cell(const std::string& cell, const std::string& path, std::size_t line_no) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception&) {
        throw_error(ErrorCategory::format, "csv_non_numeric",
                    "'" + path + "' line " + std::to_string(line_no) + ": non-numeric cell '" +
                        cell + "'");
    }
    while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
    if (used != cell.size())
        throw_error(ErrorCategory::format, "csv_non_numeric",
                    "'" + path + "' line " + std::to_string(line_no) + ": non-numeric cell '" +
                        cell + "'");
    return v;
}

std::vector<std::vector<double>> parse_delimited(const std::string& path, char delimiter) {
    std::ifstream in(path);
    if (!in)
        throw_error(ErrorCategory::io, "file_open", "cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, delimiter)) row.push_back(parse_cell(cell, path, line_no));
        if (!rows.empty() && row.size() != rows.front().size())
            throw_error(ErrorCategory::format, "csv_ragged",
                        "'" + path + "' line " + std::to_string(line_no) +
                            ": column count differs from the first row");
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw_error(ErrorCategory::format, "csv_empty", "'" + path + "' holds no data rows");
    return rows;
}

} // namespace

std::vector<double> delimited_label_values(const std::string& path, std::size_t label_column,
                                           char delimiter) {
    std::vector<std::vector<double>> rows = parse_delimited(path, delimiter);
    if (label_column >= rows.front().size())
        throw_error(ErrorCategory::config, "csv_label_column",
                    "label column index outside the table");
    std::vector<double> values;
    for (const auto& r : rows) values.push_back(r[label_column]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return values;
}

Dataset load_delimited(const std::string& path, std::size_t label_column, char delimiter,
                       const std::optional<std::vector<double>>& expected_labels) {
    std::vector<std::vector<double>> rows = parse_delimited(path, delimiter);
    std::size_t width = rows.front().size();
    if (label_column >= width)
        throw_error(ErrorCategory::config, "csv_label_column",
                    "label column index outside the table");

    std::vector<double> label_set;
    if (expected_labels) {
        label_set = *expected_labels;
    } else {
        for (const auto& r : rows) label_set.push_back(r[label_column]);
        std::sort(label_set.begin(), label_set.end());
        label_set.erase(std::unique(label_set.begin(), label_set.end()), label_set.end());
    }

    Dataset d;
    d.num_classes = static_cast<int>(label_set.size());
    d.features = Matrix(rows.size(), width - 1);
    d.labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double raw = rows[i][label_column];
        auto it = std::lower_bound(label_set.begin(), label_set.end(), raw);
        if (it == label_set.end() || *it != raw)
            throw_error(ErrorCategory::format, "csv_unseen_label",
                        "'" + path + "': label value not in the expected label set");
        d.labels[i] = static_cast<int>(it - label_set.begin());
        auto out = d.features.row(i);
        std::size_t k = 0;
        for (std::size_t j = 0; j < width; ++j) {
            if (j == label_column) continue;
            out[k++] = rows[i][j];
        }
    }
    d.check_consistent();
    return d;
}

namespace {

std::vector<std::vector<std::size_t>> per_class_indices(const Dataset& d) {
    std::vector<std::vector<std::size_t>> cls(d.num_classes);
    for (std::size_t i = 0; i < d.size(); ++i)
        cls[d.labels[i]].push_back(i); // ascending by construction
    return cls;
}

Dataset gather(const Dataset& d, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.num_classes = d.num_classes;
    out.features = Matrix(idx.size(), d.features.cols());
    out.labels.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        auto src = d.features.row(idx[i]);
        auto dst = out.features.row(i);
        std::copy(src.begin(), src.end(), dst.begin());
        out.labels[i] = d.labels[idx[i]];
    }
    return out;
}

// Distributes the per-split targets over classes proportionally: floor the
// quotas, then hand out the remaining units by descending fractional
// remainder with deterministic tie-breaks.
std::array<Dataset, 3> split_targets(const Dataset& d, const std::array<std::size_t, 3>& targets,
                                     const RngStream& rng) {
    d.check_consistent();
    const std::size_t n = d.size();
    std::size_t total = targets[0] + targets[1] + targets[2];
    if (total > n)
        throw_error(ErrorCategory::config, "counts_exceed",
                    "requested split counts exceed the dataset size");
    if (n == 0)
        throw_error(ErrorCategory::config, "empty_dataset", "cannot split an empty dataset");

    std::vector<std::vector<std::size_t>> cls = per_class_indices(d);
    const std::size_t C = cls.size();

    std::vector<std::array<std::size_t, 3>> take(C, {0, 0, 0});
    std::array<std::size_t, 3> deficit = targets;
    struct Rem {
        double frac;
        std::size_t cls;
        std::size_t split;
    };
    std::vector<Rem> rems;
    std::vector<std::size_t> assigned(C, 0);
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t s = 0; s < 3; ++s) {
            double quota = static_cast<double>(targets[s]) * static_cast<double>(cls[c].size()) /
                           static_cast<double>(n);
            std::size_t base = static_cast<std::size_t>(std::floor(quota));
            base = std::min(base, cls[c].size());
            take[c][s] = base;
            assigned[c] += base;
            deficit[s] -= base; // floors sum to at most the target
            rems.push_back({quota - std::floor(quota), c, s});
        }
    }
    std::stable_sort(rems.begin(), rems.end(), [](const Rem& a, const Rem& b) {
        if (a.frac != b.frac) return a.frac > b.frac;
        if (a.cls != b.cls) return a.cls < b.cls;
        return a.split < b.split;
    });
    bool progressed = true;
    while ((deficit[0] || deficit[1] || deficit[2]) && progressed) {
        progressed = false;
        for (const Rem& r : rems) {
            if (deficit[r.split] == 0) continue;
            if (assigned[r.cls] >= cls[r.cls].size()) continue;
            ++take[r.cls][r.split];
            ++assigned[r.cls];
            --deficit[r.split];
            progressed = true;
        }
    }
    if (deficit[0] || deficit[1] || deficit[2])
        throw_error(ErrorCategory::internal, "split_unsatisfied",
                    "could not satisfy the requested split counts");

    std::array<std::vector<std::size_t>, 3> out_idx;
    for (std::size_t c = 0; c < C; ++c) {
        std::vector<std::size_t> order = cls[c];
        RngStream s = rng.derive(stream_tags::data).derive(c);
        s.shuffle(order);
        std::size_t pos = 0;
        for (std::size_t sidx = 0; sidx < 3; ++sidx)
            for (std::size_t k = 0; k < take[c][sidx]; ++k) out_idx[sidx].push_back(order[pos++]);
    }
    return {gather(d, out_idx[0]), gather(d, out_idx[1]), gather(d, out_idx[2])};
}

} // namespace

Dataset stratified_subsample(const Dataset& d, double fraction, const RngStream& rng) {
    d.check_consistent();
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw_error(ErrorCategory::config, "bad_fraction", "fraction must lie in (0, 1]");
    std::vector<std::vector<std::size_t>> cls = per_class_indices(d);
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < cls.size(); ++c) {
        if (cls[c].empty())
            throw_error(ErrorCategory::dimension, "empty_class",
                        "class " + std::to_string(c) + " has no examples");
        std::vector<std::size_t> order = cls[c];
        RngStream s = rng.derive(stream_tags::data).derive(c);
        s.shuffle(order);
        std::size_t m = static_cast<std::size_t>(
            std::ceil(fraction * static_cast<double>(order.size())));
        for (std::size_t k = 0; k < m; ++k) keep.push_back(order[k]);
    }
    return gather(d, keep);
}

std::array<Dataset, 3> split(const Dataset& d, const std::array<double, 3>& ratios,
                             const RngStream& rng) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    for (double r : ratios)
        if (r < 0.0)
            throw_error(ErrorCategory::config, "bad_ratios", "split ratios must be >= 0");
    if (std::abs(sum - 1.0) > 1e-9)
        throw_error(ErrorCategory::config, "bad_ratios", "split ratios must sum to 1");

    // Largest-remainder totals.
    const std::size_t n = d.size();
    std::array<std::size_t, 3> targets{};
    std::array<double, 3> exact{};
    std::size_t used = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        exact[s] = ratios[s] * static_cast<double>(n);
        targets[s] = static_cast<std::size_t>(std::floor(exact[s]));
        used += targets[s];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        double ra = exact[a] - std::floor(exact[a]);
        double rb = exact[b] - std::floor(exact[b]);
        if (ra != rb) return ra > rb;
        return a < b;
    });
    for (std::size_t k = 0; used < n; ++k, ++used) ++targets[order[k % 3]];

    return split_targets(d, targets, rng);
}

std::array<Dataset, 3> split_counts(const Dataset& d, const std::array<std::size_t, 3>& counts,
                                    const RngStream& rng) {
    return split_targets(d, counts, rng);
}

void binarize(Dataset& d, double threshold) {
    for (double& v : d.features.data()) v = v >= threshold ? 1.0 : 0.0;
}

} // namespace dbncls
