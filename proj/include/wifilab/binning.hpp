#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wifilab {

// Binning contract shared by the x-y aggregation, relative information gain
// and rank correlation. Numeric bins are half-open [left, right) anchored at
// an origin; categorical values each get their own bin.
struct BinSpec {
    enum class Kind { Numeric, Categorical };

    Kind kind = Kind::Numeric;
    double width = 1.0;   // numeric only, > 0
    double origin = 0.0;  // left edge anchor

    static BinSpec numeric(double width, double origin = 0.0) {
        return BinSpec{Kind::Numeric, width, origin};
    }
    static BinSpec categorical() { return BinSpec{Kind::Categorical, 0.0, 0.0}; }
};

// Index of the half-open interval [origin + k*width, origin + (k+1)*width)
// containing v. Throws if the spec is categorical or the width is invalid.
std::int64_t bin_index(double v, const BinSpec& spec);
double bin_left(std::int64_t index, const BinSpec& spec);
double bin_right(std::int64_t index, const BinSpec& spec);

// Per-value bin assignment. The categorical overload assigns dense codes in
// lexicographic order of the distinct values, so the mapping does not depend
// on input order.
std::vector<std::int64_t> bin_values(std::span<const double> x, const BinSpec& spec);
std::vector<std::int64_t> bin_values(std::span<const std::string> x, const BinSpec& spec);

struct BinnedSeries {
    struct Bin {
        std::int64_t index = 0;
        double left = 0.0;   // NaN-free only for numeric specs
        double right = 0.0;
        std::size_t count = 0;
        double mean_y = 0.0;
        // present when a y histogram was requested: (y bin index, count)
        std::vector<std::pair<std::int64_t, std::size_t>> y_hist;
    };

    std::vector<Bin> bins;  // ordered by index; empty bins omitted
    std::size_t total_count = 0;
};

// Mean of y per x bin, exact (no approximation). Bins are ordered by key and
// zero-count bins are omitted, so per-bin counts always sum to |x|. When
// y_hist_width is set, each bin also carries a histogram of its raw y values
// at that width.
BinnedSeries binned_mean_curve(std::span<const double> x, std::span<const double> y,
                               const BinSpec& spec,
                               std::optional<double> y_hist_width = std::nullopt);

}  // namespace wifilab
