#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "dbncls/data.hpp"

using namespace dbncls;

namespace {

std::string temp_dir() {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("dbncls_data_test_" + std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir.string();
}

std::string code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

// Multiset view for permutation checks.
std::vector<std::pair<std::vector<double>, int>> rows_of(const Dataset& d) {
    std::vector<std::pair<std::vector<double>, int>> out;
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto r = d.input(i);
        out.emplace_back(std::vector<double>(r.begin(), r.end()), d.labels[i]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

Dataset two_class(std::size_t n0, std::size_t n1) {
    Dataset d;
    d.num_classes = 2;
    d.features = Matrix(n0 + n1, 2);
    d.labels.resize(n0 + n1);
    for (std::size_t i = 0; i < n0 + n1; ++i) {
        d.features(i, 0) = double(i);
        d.features(i, 1) = i < n0 ? 0.0 : 1.0;
        d.labels[i] = i < n0 ? 0 : 1;
    }
    return d;
}

} // namespace

TEST_CASE("idx round trip is bit exact") {
    std::string dir = temp_dir();
    std::vector<std::vector<unsigned char>> images{{0, 255, 17, 200}, {1, 2, 3, 4}};
    std::vector<unsigned char> labels{7, 2};
    write_idx(dir + "/im", dir + "/lb", images, 2, 2, labels);

    Dataset d = load_idx(dir + "/im", dir + "/lb");
    CHECK(d.size() == 2);
    CHECK(d.feature_count() == 4);
    CHECK(d.features(0, 0) == 0.0);
    CHECK(d.features(0, 1) == 1.0); // byte 255 -> exactly 1.0
    CHECK(d.features(0, 2) == 17.0 / 255.0);
    CHECK(d.features(1, 3) == 4.0 / 255.0);
    CHECK(d.labels == std::vector<int>{7, 2});
    CHECK(d.num_classes == 8);
}

TEST_CASE("idx failure modes carry distinct codes") {
    std::string dir = temp_dir();
    std::vector<std::vector<unsigned char>> images{{0, 0, 0, 0}, {9, 9, 9, 9}};
    write_idx(dir + "/im", dir + "/lb", images, 2, 2, {1, 0});

    // Image magic inside a label file.
    CHECK(code_of([&] { load_idx(dir + "/im", dir + "/im"); }) == "idx_bad_magic");
    CHECK(code_of([&] { load_idx(dir + "/lb", dir + "/lb"); }) == "idx_bad_magic");

    // Truncated payload.
    {
        std::ifstream in(dir + "/im", std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
        bytes.resize(bytes.size() - 3);
        std::ofstream out(dir + "/im_short", std::ios::binary);
        out.write(bytes.data(), std::streamsize(bytes.size()));
    }
    CHECK(code_of([&] { load_idx(dir + "/im_short", dir + "/lb"); }) == "idx_truncated");

    // Count mismatch between the files.
    write_idx(dir + "/im3", dir + "/lb3", {{0, 0, 0, 0}, {1, 1, 1, 1}, {2, 2, 2, 2}}, 2, 2,
              {0, 1, 0});
    CHECK(code_of([&] { load_idx(dir + "/im", dir + "/lb3"); }) == "idx_count_mismatch");

    CHECK(code_of([&] { load_idx(dir + "/does_not_exist", dir + "/lb"); }) == "file_open");
}

TEST_CASE("delimited parsing basics") {
    std::string dir = temp_dir();
    {
        std::ofstream out(dir + "/t.csv");
        out << "0.0,1\n1.0,0\n";
    }
    Dataset d = load_delimited(dir + "/t.csv", 1);
    CHECK(d.feature_count() == 1);
    CHECK(d.features(0, 0) == 0.0);
    CHECK(d.features(1, 0) == 1.0);
    CHECK(d.labels == std::vector<int>{1, 0});
    CHECK(d.num_classes == 2);
}

TEST_CASE("delimited failure modes") {
    std::string dir = temp_dir();
    {
        std::ofstream out(dir + "/ragged.csv");
        out << "1,2,0\n1,2\n";
    }
    CHECK(code_of([&] { load_delimited(dir + "/ragged.csv", 2); }) == "csv_ragged");
    {
        std::ofstream out(dir + "/text.csv");
        out << "1,foo,0\n";
    }
    CHECK(code_of([&] { load_delimited(dir + "/text.csv", 2); }) == "csv_non_numeric");
    {
        std::ofstream out(dir + "/labels.csv");
        out << "1.0,3\n2.0,4\n";
    }
    std::vector<double> expected{3.0};
    CHECK(code_of([&] { load_delimited(dir + "/labels.csv", 1, ',', expected); }) ==
          "csv_unseen_label");
}

TEST_CASE("isolet-shaped table parses to 617 features") {
    std::string dir = temp_dir();
    {
        std::ofstream out(dir + "/isolet.csv");
        for (int row = 0; row < 4; ++row) {
            for (int j = 0; j < 617; ++j) out << (0.001 * j) << ",";
            out << (row % 2 ? 2 : 1) << "\n";
        }
    }
    Dataset d = load_delimited(dir + "/isolet.csv", 617);
    CHECK(d.feature_count() == 617);
    CHECK(d.num_classes == 2);
}

TEST_CASE("minmax maps a degenerate feature to zero") {
    Dataset d;
    d.num_classes = 2;
    d.features = Matrix(3, 2, {5.0, 1.0, 5.0, 2.0, 5.0, 3.0});
    d.labels = {0, 1, 0};
    MinmaxStats stats = compute_minmax(d);
    apply_minmax(d, stats);
    for (std::size_t i = 0; i < 3; ++i) CHECK(d.features(i, 0) == 0.0);
    CHECK(d.features(0, 1) == 0.0);
    CHECK(d.features(2, 1) == 1.0);
}

TEST_CASE("subsampling the whole set permutes it") {
    Dataset d = two_class(6, 4);
    Dataset s = stratified_subsample(d, 1.0, RngStream(1));
    CHECK(rows_of(s) == rows_of(d));
}

TEST_CASE("subsampling takes the ceiling per class") {
    Dataset d = two_class(100, 100);
    Dataset s = stratified_subsample(d, 0.2, RngStream(2));
    std::size_t c0 = 0, c1 = 0;
    for (int y : s.labels) (y == 0 ? c0 : c1)++;
    CHECK(c0 == 20);
    CHECK(c1 == 20);

    Dataset uneven = two_class(70, 30);
    Dataset su = stratified_subsample(uneven, 0.2, RngStream(3));
    c0 = c1 = 0;
    for (int y : su.labels) (y == 0 ? c0 : c1)++;
    CHECK(c0 == 14);
    CHECK(c1 == 6);
}

TEST_CASE("subsampling rejects an empty class and bad fractions") {
    Dataset d = two_class(5, 5);
    d.num_classes = 3; // class 2 exists but has no examples
    CHECK(code_of([&] { stratified_subsample(d, 0.5, RngStream(4)); }) == "empty_class");
    Dataset ok = two_class(5, 5);
    CHECK_THROWS_AS(stratified_subsample(ok, 0.0, RngStream(4)), Error);
    CHECK_THROWS_AS(stratified_subsample(ok, 1.5, RngStream(4)), Error);
}

TEST_CASE("subsampling is reproducible") {
    Dataset d = two_class(40, 25);
    Dataset a = stratified_subsample(d, 0.3, RngStream(5));
    Dataset b = stratified_subsample(d, 0.3, RngStream(5));
    CHECK(a.features.data() == b.features.data());
    CHECK(a.labels == b.labels);
}

TEST_CASE("splitting everything into train") {
    Dataset d = two_class(7, 5);
    auto parts = split(d, {1.0, 0.0, 0.0}, RngStream(6));
    CHECK(parts[0].size() == 12);
    CHECK(parts[1].size() == 0);
    CHECK(parts[2].size() == 0);
    CHECK(rows_of(parts[0]) == rows_of(d));
}

TEST_CASE("split produces a disjoint cover") {
    Dataset d = two_class(33, 21);
    auto parts = split(d, {0.6, 0.2, 0.2}, RngStream(7));
    CHECK(parts[0].size() + parts[1].size() + parts[2].size() == d.size());
    std::vector<std::pair<std::vector<double>, int>> all;
    for (const Dataset& p : parts) {
        auto rows = rows_of(p);
        all.insert(all.end(), rows.begin(), rows.end());
    }
    std::sort(all.begin(), all.end());
    CHECK(all == rows_of(d)); // no duplicates, nothing missing
}

TEST_CASE("ten examples split eight one one with both classes in train") {
    Dataset d = two_class(5, 5);
    auto parts = split(d, {0.8, 0.1, 0.1}, RngStream(8));
    CHECK(parts[0].size() == 8);
    CHECK(parts[1].size() == 1);
    CHECK(parts[2].size() == 1);
    bool c0 = false, c1 = false;
    for (int y : parts[0].labels) (y == 0 ? c0 : c1) = true;
    CHECK(c0);
    CHECK(c1);
}

TEST_CASE("split rejects degenerate ratios") {
    Dataset d = two_class(5, 5);
    CHECK_THROWS_AS(split(d, {0.5, 0.2, 0.2}, RngStream(9)), Error);
    CHECK_THROWS_AS(split(d, {1.2, -0.1, -0.1}, RngStream(9)), Error);
}

TEST_CASE("count-based split hits exact totals and stratifies") {
    Dataset d = two_class(60, 40);
    auto parts = split_counts(d, {50, 10, 20}, RngStream(10));
    CHECK(parts[0].size() == 50);
    CHECK(parts[1].size() == 10);
    CHECK(parts[2].size() == 20);
    std::size_t c0 = 0;
    for (int y : parts[0].labels)
        if (y == 0) ++c0;
    CHECK(c0 == 30); // 60% of the train split, matching the source ratio

    CHECK_THROWS_AS(split_counts(d, {90, 10, 20}, RngStream(10)), Error);
}

TEST_CASE("splits are reproducible") {
    Dataset d = two_class(19, 23);
    auto a = split(d, {0.7, 0.2, 0.1}, RngStream(11));
    auto b = split(d, {0.7, 0.2, 0.1}, RngStream(11));
    for (int p = 0; p < 3; ++p) {
        CHECK(a[p].features.data() == b[p].features.data());
        CHECK(a[p].labels == b[p].labels);
    }
}

TEST_CASE("binarize thresholds at one half") {
    Dataset d;
    d.num_classes = 2;
    d.features = Matrix(1, 4, {0.0, 0.49, 0.5, 1.0});
    d.labels = {0};
    binarize(d);
    CHECK(d.features.data() == std::vector<double>{0.0, 0.0, 1.0, 1.0});
}
