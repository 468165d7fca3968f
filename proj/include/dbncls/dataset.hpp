#ifndef DBNCLS_DATASET_HPP
#define DBNCLS_DATASET_HPP

#include <span>
#include <vector>

#include "dbncls/numerics.hpp"

namespace dbncls {

// Labeled examples: one feature row per example, class indices in
// [0, num_classes).
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    int num_classes = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t feature_count() const { return features.cols(); }
    std::span<const double> input(std::size_t i) const { return features.row(i); }

    void check_consistent() const {
        if (features.rows() != labels.size())
            throw_error(ErrorCategory::dimension, "dataset_rows",
                        "feature rows and label count differ");
        if (num_classes <= 0)
            throw_error(ErrorCategory::dimension, "dataset_classes", "class count must be positive");
        for (int y : labels)
            if (y < 0 || y >= num_classes)
                throw_error(ErrorCategory::dimension, "dataset_label_range",
                            "label outside [0, num_classes)");
        if (!features.all_finite())
            throw_error(ErrorCategory::dimension, "dataset_nonfinite", "features must be finite");
    }

    std::vector<std::vector<double>> input_rows() const {
        std::vector<std::vector<double>> rows;
        rows.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) {
            auto r = input(i);
            rows.emplace_back(r.begin(), r.end());
        }
        return rows;
    }
};

} // namespace dbncls

#endif
