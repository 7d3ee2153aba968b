#include "wifilab/binning.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace wifilab {

namespace {

void require_numeric(const BinSpec& spec) {
    if (spec.kind != BinSpec::Kind::Numeric) {
        throw std::invalid_argument("numeric values require a numeric bin spec");
    }
    if (!(spec.width > 0.0)) {
        throw std::invalid_argument("bin width must be positive");
    }
}

}  // namespace

std::int64_t bin_index(double v, const BinSpec& spec) {
    require_numeric(spec);
    return static_cast<std::int64_t>(std::floor((v - spec.origin) / spec.width));
}

double bin_left(std::int64_t index, const BinSpec& spec) {
    require_numeric(spec);
    return spec.origin + static_cast<double>(index) * spec.width;
}

double bin_right(std::int64_t index, const BinSpec& spec) {
    return bin_left(index + 1, spec);
}

std::vector<std::int64_t> bin_values(std::span<const double> x, const BinSpec& spec) {
    require_numeric(spec);
    std::vector<std::int64_t> out;
    out.reserve(x.size());
    for (double v : x) out.push_back(bin_index(v, spec));
    return out;
}

std::vector<std::int64_t> bin_values(std::span<const std::string> x, const BinSpec& spec) {
    if (spec.kind != BinSpec::Kind::Categorical) {
        throw std::invalid_argument("categorical values require a categorical bin spec");
    }
    std::map<std::string, std::int64_t> codes;
    for (const auto& v : x) codes.emplace(v, 0);
    std::int64_t next = 0;
    for (auto& [_, code] : codes) code = next++;
    std::vector<std::int64_t> out;
    out.reserve(x.size());
    for (const auto& v : x) out.push_back(codes.at(v));
    return out;
}

BinnedSeries binned_mean_curve(std::span<const double> x, std::span<const double> y,
                               const BinSpec& spec, std::optional<double> y_hist_width) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("x and y must have equal length");
    }
    BinnedSeries series;
    if (x.empty()) return series;

    struct Acc {
        std::size_t count = 0;
        double sum = 0.0;
        std::map<std::int64_t, std::size_t> hist;
    };
    std::map<std::int64_t, Acc> acc;
    const BinSpec y_spec =
        y_hist_width ? BinSpec::numeric(*y_hist_width, 0.0) : BinSpec::numeric(1.0, 0.0);

    for (std::size_t i = 0; i < x.size(); ++i) {
        Acc& a = acc[bin_index(x[i], spec)];
        a.count += 1;
        a.sum += y[i];
        if (y_hist_width) a.hist[bin_index(y[i], y_spec)] += 1;
    }

    series.bins.reserve(acc.size());
    for (const auto& [idx, a] : acc) {
        BinnedSeries::Bin bin;
        bin.index = idx;
        bin.left = bin_left(idx, spec);
        bin.right = bin_right(idx, spec);
        bin.count = a.count;
        bin.mean_y = a.sum / static_cast<double>(a.count);
        bin.y_hist.assign(a.hist.begin(), a.hist.end());
        series.bins.push_back(std::move(bin));
        series.total_count += a.count;
    }
    return series;
}

}  // namespace wifilab
