#include "wifilab/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <future>
#include <stdexcept>
#include <thread>

#include "wifilab/rng.hpp"

namespace wifilab {

std::optional<std::string> validate(const ForestParams& p) {
    if (p.n_trees < 1) return "n_trees must be >= 1";
    if (p.max_depth < 1) return "max_depth must be >= 1";
    if (!(p.class_weight_fast > 0.0) || p.class_weight_fast > 1.0) {
        return "class_weight_fast out of (0,1]";
    }
    if (p.features_per_split < 1 || p.features_per_split > kNumFeatures) {
        return "features_per_split out of range";
    }
    if (p.min_samples_leaf < 1) return "min_samples_leaf must be >= 1";
    return std::nullopt;
}

SpeedLabel DecisionTree::predict(const FeatureVector& fv) const {
    std::int32_t idx = 0;
    while (true) {
        const TreeNode& n = nodes[static_cast<std::size_t>(idx)];
        if (n.feature < 0) {
            return n.w_slow >= n.w_fast ? SpeedLabel::SLOW : SpeedLabel::FAST;
        }
        bool go_left;
        if (feature_kind(static_cast<std::size_t>(n.feature)) == FeatureKind::Numeric) {
            go_left = numeric_value(fv, static_cast<std::size_t>(n.feature)) <= n.threshold;
        } else {
            go_left = std::binary_search(n.left_codes.begin(), n.left_codes.end(),
                                         category_code(fv, static_cast<std::size_t>(n.feature)));
        }
        idx = go_left ? n.left : n.right;
    }
}

std::size_t DecisionTree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t max_d = 0;
    // children always follow their parent in the array
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const TreeNode& n = nodes[i];
        if (n.feature < 0) {
            max_d = std::max(max_d, d[i]);
        } else {
            d[static_cast<std::size_t>(n.left)] = d[i] + 1;
            d[static_cast<std::size_t>(n.right)] = d[i] + 1;
        }
    }
    return max_d;
}

Prediction ForestModel::predict(const FeatureVector& fv) const {
    std::size_t slow_votes = 0;
    for (const auto& t : trees) {
        if (t.predict(fv) == SpeedLabel::SLOW) ++slow_votes;
    }
    Prediction p;
    p.slow_score = static_cast<double>(slow_votes) / static_cast<double>(trees.size());
    p.label = (2 * slow_votes >= trees.size()) ? SpeedLabel::SLOW : SpeedLabel::FAST;
    return p;
}

namespace {

// Column-compressed training view: each feature's raw values are mapped onto
// indices into a sorted-unique array, so split search per node is a counting
// pass instead of a sort.
struct Column {
    std::vector<double> numeric_uniques;        // numeric features
    std::vector<std::int32_t> category_uniques; // categorical features
    std::vector<std::uint32_t> value_index;     // per row
    std::size_t cardinality = 0;
};

struct TrainView {
    std::array<Column, kNumFeatures> columns;
    std::vector<std::uint8_t> is_slow;
    std::size_t n = 0;
};

TrainView build_view(std::span<const LabeledRow> dataset) {
    TrainView view;
    view.n = dataset.size();
    view.is_slow.resize(view.n);
    for (std::size_t i = 0; i < view.n; ++i) {
        view.is_slow[i] = dataset[i].label == SpeedLabel::SLOW ? 1 : 0;
    }
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        Column& col = view.columns[f];
        col.value_index.resize(view.n);
        if (feature_kind(f) == FeatureKind::Numeric) {
            std::vector<double> raw(view.n);
            for (std::size_t i = 0; i < view.n; ++i) raw[i] = numeric_value(dataset[i].features, f);
            col.numeric_uniques = raw;
            std::sort(col.numeric_uniques.begin(), col.numeric_uniques.end());
            col.numeric_uniques.erase(
                std::unique(col.numeric_uniques.begin(), col.numeric_uniques.end()),
                col.numeric_uniques.end());
            for (std::size_t i = 0; i < view.n; ++i) {
                col.value_index[i] = static_cast<std::uint32_t>(
                    std::lower_bound(col.numeric_uniques.begin(), col.numeric_uniques.end(),
                                     raw[i]) -
                    col.numeric_uniques.begin());
            }
            col.cardinality = col.numeric_uniques.size();
        } else {
            std::vector<std::int32_t> raw(view.n);
            for (std::size_t i = 0; i < view.n; ++i) raw[i] = category_code(dataset[i].features, f);
            col.category_uniques = raw;
            std::sort(col.category_uniques.begin(), col.category_uniques.end());
            col.category_uniques.erase(
                std::unique(col.category_uniques.begin(), col.category_uniques.end()),
                col.category_uniques.end());
            for (std::size_t i = 0; i < view.n; ++i) {
                col.value_index[i] = static_cast<std::uint32_t>(
                    std::lower_bound(col.category_uniques.begin(), col.category_uniques.end(),
                                     raw[i]) -
                    col.category_uniques.begin());
            }
            col.cardinality = col.category_uniques.size();
        }
    }
    return view;
}

struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double decrease = 0.0;
    // numeric
    double threshold = 0.0;
    std::uint32_t threshold_vidx = 0;  // rows with vidx <= this go left
    // categorical
    std::vector<std::uint32_t> left_vidx;  // unique value indices going left
};

constexpr double kMinDecrease = 1e-12;

double gini_term(double w_fast, double w_slow) {
    const double w = w_fast + w_slow;
    if (w <= 0.0) return 0.0;
    // w * (1 - sum p_c^2) without the division blowing up
    return w - (w_fast * w_fast + w_slow * w_slow) / w;
}

class TreeBuilder {
public:
    TreeBuilder(const TrainView& view, const ForestParams& params)
        : view_(view), params_(params) {
        std::size_t max_card = 0;
        for (const auto& c : view.columns) max_card = std::max(max_card, c.cardinality);
        fast_counts_.resize(max_card);
        slow_counts_.resize(max_card);
        order_.resize(max_card);
    }

    DecisionTree build(std::span<const std::uint32_t> rows, std::mt19937_64& rng) {
        DecisionTree tree;
        rows_.assign(rows.begin(), rows.end());
        scratch_.resize(rows_.size());
        grow(tree, 0, rows_.size(), 0, rng);
        return tree;
    }

private:
    std::int32_t grow(DecisionTree& tree, std::size_t lo, std::size_t hi, std::size_t depth,
                      std::mt19937_64& rng) {
        const auto node_idx = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();

        std::size_t n_slow = 0;
        for (std::size_t i = lo; i < hi; ++i) n_slow += view_.is_slow[rows_[i]];
        const std::size_t n_fast = (hi - lo) - n_slow;
        const double w_fast = params_.class_weight_fast * static_cast<double>(n_fast);
        const double w_slow = static_cast<double>(n_slow);

        auto make_leaf = [&]() {
            TreeNode& n = tree.nodes[static_cast<std::size_t>(node_idx)];
            n.feature = -1;
            n.w_fast = w_fast;
            n.w_slow = w_slow;
            return node_idx;
        };

        if (depth >= params_.max_depth || n_fast == 0 || n_slow == 0 ||
            (hi - lo) < 2 * params_.min_samples_leaf) {
            return make_leaf();
        }

        const SplitChoice split = best_split(lo, hi, rng);
        if (!split.found) return make_leaf();

        // Stable two-way partition keeps row order deterministic.
        const Column& col = view_.columns[split.feature];
        auto goes_left = [&](std::uint32_t row) {
            const std::uint32_t v = col.value_index[row];
            if (feature_kind(split.feature) == FeatureKind::Numeric) {
                return v <= split.threshold_vidx;
            }
            return std::binary_search(split.left_vidx.begin(), split.left_vidx.end(), v);
        };
        std::size_t k = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            if (goes_left(rows_[i])) scratch_[k++] = rows_[i];
        }
        const std::size_t n_left = k;
        for (std::size_t i = lo; i < hi; ++i) {
            if (!goes_left(rows_[i])) scratch_[k++] = rows_[i];
        }
        std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(k),
                  rows_.begin() + static_cast<std::ptrdiff_t>(lo));

        {
            TreeNode& n = tree.nodes[static_cast<std::size_t>(node_idx)];
            n.feature = static_cast<std::int16_t>(split.feature);
            if (feature_kind(split.feature) == FeatureKind::Numeric) {
                n.threshold = split.threshold;
            } else {
                n.left_codes.reserve(split.left_vidx.size());
                for (auto v : split.left_vidx) n.left_codes.push_back(col.category_uniques[v]);
                std::sort(n.left_codes.begin(), n.left_codes.end());
            }
        }
        const std::int32_t left = grow(tree, lo, lo + n_left, depth + 1, rng);
        const std::int32_t right = grow(tree, lo + n_left, hi, depth + 1, rng);
        TreeNode& n = tree.nodes[static_cast<std::size_t>(node_idx)];
        n.left = left;
        n.right = right;
        return node_idx;
    }

    SplitChoice best_split(std::size_t lo, std::size_t hi, std::mt19937_64& rng) {
        // Partial Fisher-Yates: the first features_per_split entries are the
        // candidate features for this node.
        std::array<std::size_t, kNumFeatures> feats = {0, 1, 2, 3, 4};
        for (std::size_t i = 0; i < params_.features_per_split; ++i) {
            const auto j = static_cast<std::size_t>(
                uniform_int(rng, static_cast<std::int64_t>(i), kNumFeatures - 1));
            std::swap(feats[i], feats[j]);
        }

        SplitChoice best;
        for (std::size_t fi = 0; fi < params_.features_per_split; ++fi) {
            consider_feature(feats[fi], lo, hi, best);
        }
        return best;
    }

    void consider_feature(std::size_t f, std::size_t lo, std::size_t hi, SplitChoice& best) {
        const Column& col = view_.columns[f];
        const std::size_t card = col.cardinality;
        std::fill(fast_counts_.begin(), fast_counts_.begin() + static_cast<std::ptrdiff_t>(card), 0);
        std::fill(slow_counts_.begin(), slow_counts_.begin() + static_cast<std::ptrdiff_t>(card), 0);
        for (std::size_t i = lo; i < hi; ++i) {
            const std::uint32_t row = rows_[i];
            const std::uint32_t v = col.value_index[row];
            if (view_.is_slow[row]) {
                slow_counts_[v] += 1;
            } else {
                fast_counts_[v] += 1;
            }
        }

        std::size_t tot_fast = 0, tot_slow = 0;
        for (std::size_t v = 0; v < card; ++v) {
            tot_fast += fast_counts_[v];
            tot_slow += slow_counts_[v];
        }
        const double wf = params_.class_weight_fast;
        const double parent = gini_term(wf * static_cast<double>(tot_fast),
                                        static_cast<double>(tot_slow));

        auto try_split = [&](std::size_t left_fast, std::size_t left_slow, auto&& record) {
            const std::size_t left_n = left_fast + left_slow;
            const std::size_t right_n = (tot_fast + tot_slow) - left_n;
            if (left_n < params_.min_samples_leaf || right_n < params_.min_samples_leaf) return;
            const double child =
                gini_term(wf * static_cast<double>(left_fast), static_cast<double>(left_slow)) +
                gini_term(wf * static_cast<double>(tot_fast - left_fast),
                          static_cast<double>(tot_slow - left_slow));
            const double decrease = parent - child;
            if (decrease > kMinDecrease && decrease > best.decrease) record(decrease);
        };

        if (feature_kind(f) == FeatureKind::Numeric) {
            std::size_t lf = 0, ls = 0;
            std::uint32_t prev_present = 0;
            bool have_prev = false;
            for (std::uint32_t v = 0; v < card; ++v) {
                if (fast_counts_[v] + slow_counts_[v] == 0) continue;
                if (have_prev) {
                    try_split(lf, ls, [&](double decrease) {
                        best.found = true;
                        best.feature = f;
                        best.decrease = decrease;
                        best.threshold = 0.5 * (col.numeric_uniques[prev_present] +
                                                col.numeric_uniques[v]);
                        best.threshold_vidx = prev_present;
                        best.left_vidx.clear();
                    });
                }
                lf += fast_counts_[v];
                ls += slow_counts_[v];
                prev_present = v;
                have_prev = true;
            }
        } else {
            // Order present categories by SLOW share; prefix subsets of that
            // order are the candidate left sets (optimal for binary Gini).
            std::size_t m = 0;
            for (std::uint32_t v = 0; v < card; ++v) {
                if (fast_counts_[v] + slow_counts_[v] > 0) order_[m++] = v;
            }
            if (m < 2) return;
            std::sort(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(m),
                      [&](std::uint32_t a, std::uint32_t b) {
                          const double sa = static_cast<double>(slow_counts_[a]) /
                                            static_cast<double>(fast_counts_[a] + slow_counts_[a]);
                          const double sb = static_cast<double>(slow_counts_[b]) /
                                            static_cast<double>(fast_counts_[b] + slow_counts_[b]);
                          if (sa != sb) return sa < sb;
                          return a < b;
                      });
            std::size_t lf = 0, ls = 0;
            for (std::size_t k = 0; k + 1 < m; ++k) {
                lf += fast_counts_[order_[k]];
                ls += slow_counts_[order_[k]];
                const std::size_t prefix = k + 1;
                try_split(lf, ls, [&](double decrease) {
                    best.found = true;
                    best.feature = f;
                    best.decrease = decrease;
                    best.threshold = 0.0;
                    best.left_vidx.assign(order_.begin(),
                                          order_.begin() + static_cast<std::ptrdiff_t>(prefix));
                    std::sort(best.left_vidx.begin(), best.left_vidx.end());
                });
            }
        }
    }

    const TrainView& view_;
    const ForestParams& params_;
    std::vector<std::uint32_t> rows_;
    std::vector<std::uint32_t> scratch_;
    std::vector<std::size_t> fast_counts_;
    std::vector<std::size_t> slow_counts_;
    std::vector<std::uint32_t> order_;
};

std::vector<std::uint32_t> bootstrap_rows(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::uint32_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        rows[i] = static_cast<std::uint32_t>(uniform_int(rng, 0, static_cast<std::int64_t>(n) - 1));
    }
    return rows;
}

}  // namespace

ForestModel train_forest(std::span<const LabeledRow> dataset, const ForestParams& params,
                         EncoderPair encoders) {
    if (auto err = validate(params)) throw std::invalid_argument("bad forest params: " + *err);
    if (dataset.empty()) throw std::invalid_argument("empty training set");

    ForestModel model;
    model.params = params;
    model.encoders = std::move(encoders);
    model.summary.n = dataset.size();
    for (const auto& row : dataset) {
        if (row.label == SpeedLabel::SLOW) {
            model.summary.n_slow += 1;
        } else {
            model.summary.n_fast += 1;
        }
    }
    if (model.summary.n_fast == 0 || model.summary.n_slow == 0) {
        throw std::invalid_argument("training set must contain both classes");
    }

    const TrainView view = build_view(dataset);
    const std::size_t n = dataset.size();
    model.trees.resize(params.n_trees);

    // Tree t consumes only stream (seed, t): bootstrap draws first, then node
    // feature sampling. Independent streams make the parallel schedule
    // irrelevant to the result.
    auto train_range = [&](std::size_t begin, std::size_t end) {
        TreeBuilder builder(view, params);
        std::vector<std::uint32_t> identity(n);
        for (std::size_t i = 0; i < n; ++i) identity[i] = static_cast<std::uint32_t>(i);
        for (std::size_t t = begin; t < end; ++t) {
            std::mt19937_64 rng = make_rng(params.rng_seed, t);
            if (params.bootstrap) {
                const auto rows = bootstrap_rows(n, rng);
                model.trees[t] = builder.build(rows, rng);
            } else {
                model.trees[t] = builder.build(identity, rng);
            }
        }
    };

    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    const std::size_t n_workers = std::min(hw, params.n_trees);
    if (n_workers <= 1) {
        train_range(0, params.n_trees);
    } else {
        std::vector<std::future<void>> futures;
        const std::size_t chunk = (params.n_trees + n_workers - 1) / n_workers;
        for (std::size_t w = 0; w < n_workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(params.n_trees, begin + chunk);
            if (begin >= end) break;
            futures.push_back(std::async(std::launch::async, train_range, begin, end));
        }
        for (auto& f : futures) f.get();
    }

    if (params.compute_oob && params.bootstrap) {
        // Replay each tree's bootstrap prefix to recover its in-bag set.
        std::vector<std::uint32_t> slow_votes(n, 0), total_votes(n, 0);
        std::vector<std::uint8_t> in_bag(n);
        for (std::size_t t = 0; t < params.n_trees; ++t) {
            std::mt19937_64 rng = make_rng(params.rng_seed, t);
            std::fill(in_bag.begin(), in_bag.end(), 0);
            for (auto r : bootstrap_rows(n, rng)) in_bag[r] = 1;
            for (std::size_t i = 0; i < n; ++i) {
                if (in_bag[i]) continue;
                total_votes[i] += 1;
                if (model.trees[t].predict(dataset[i].features) == SpeedLabel::SLOW) {
                    slow_votes[i] += 1;
                }
            }
        }
        std::size_t wrong = 0, counted = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (total_votes[i] == 0) continue;
            counted += 1;
            const bool vote_slow = 2 * slow_votes[i] >= total_votes[i];
            const bool actual_slow = dataset[i].label == SpeedLabel::SLOW;
            if (vote_slow != actual_slow) wrong += 1;
        }
        if (counted > 0) {
            model.summary.oob_error = static_cast<double>(wrong) / static_cast<double>(counted);
        }
    }
    return model;
}

namespace {

MetricsReport metrics_from_predictions(std::span<const LabeledRow> testset,
                                       const std::vector<SpeedLabel>& predicted) {
    MetricsReport rep;
    rep.n_test = testset.size();
    for (std::size_t i = 0; i < testset.size(); ++i) {
        const auto actual = static_cast<std::size_t>(testset[i].label == SpeedLabel::SLOW);
        const auto pred = static_cast<std::size_t>(predicted[i] == SpeedLabel::SLOW);
        rep.confusion[actual][pred] += 1;
    }
    auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;  // undefined, not zero
        return static_cast<double>(num) / static_cast<double>(den);
    };
    const auto& c = rep.confusion;
    rep.precision_fast = ratio(c[0][0], c[0][0] + c[1][0]);
    rep.recall_fast = ratio(c[0][0], c[0][0] + c[0][1]);
    rep.precision_slow = ratio(c[1][1], c[1][1] + c[0][1]);
    rep.recall_slow = ratio(c[1][1], c[1][1] + c[1][0]);
    return rep;
}

}  // namespace

MetricsReport evaluate_forest(const ForestModel& model, std::span<const LabeledRow> testset) {
    if (testset.empty()) throw std::invalid_argument("empty test set");
    std::vector<SpeedLabel> predicted;
    predicted.reserve(testset.size());
    for (const auto& row : testset) predicted.push_back(model.predict(row.features).label);
    return metrics_from_predictions(testset, predicted);
}

MetricsReport evaluate_at_threshold(const ForestModel& model, std::span<const LabeledRow> testset,
                                    double slow_threshold) {
    if (testset.empty()) throw std::invalid_argument("empty test set");
    std::vector<SpeedLabel> predicted;
    predicted.reserve(testset.size());
    for (const auto& row : testset) {
        predicted.push_back(model.predict(row.features).slow_score >= slow_threshold
                                ? SpeedLabel::SLOW
                                : SpeedLabel::FAST);
    }
    return metrics_from_predictions(testset, predicted);
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr char kMagic[4] = {'W', 'F', 'R', 'F'};

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    template <typename T>
    void pod(T v) {
        bytes(&v, sizeof(T));
    }
    void str(const std::string& s) {
        pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }

private:
    std::ostream& out_;
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw std::runtime_error("model file truncated");
        }
    }
    template <typename T>
    T pod() {
        T v;
        bytes(&v, sizeof(T));
        return v;
    }
    std::string str() {
        const auto n = pod<std::uint32_t>();
        if (n > (1u << 24)) throw std::runtime_error("model file corrupt: oversized string");
        std::string s(n, '\0');
        if (n > 0) bytes(s.data(), n);
        return s;
    }

private:
    std::istream& in_;
};

void write_encoder(Writer& w, const CategoryEncoder& enc) {
    w.pod<std::uint64_t>(enc.vocab_size());
    for (const auto& [value, code] : enc.vocabulary()) {
        w.str(value);
        w.pod<std::int32_t>(code);
    }
}

CategoryEncoder read_encoder(Reader& r) {
    const auto n = r.pod<std::uint64_t>();
    if (n > (1u << 26)) throw std::runtime_error("model file corrupt: oversized vocabulary");
    std::vector<std::pair<std::string, std::int32_t>> entries;
    entries.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        auto value = r.str();
        auto code = r.pod<std::int32_t>();
        entries.emplace_back(std::move(value), code);
    }
    return CategoryEncoder::from_entries(std::move(entries));
}

}  // namespace

void save_model(const ForestModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    Writer w(out);
    w.bytes(kMagic, sizeof(kMagic));
    w.pod<std::uint32_t>(ForestModel::kFormatVersion);

    const ForestParams& p = model.params;
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(p.n_trees));
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(p.max_depth));
    w.pod<double>(p.class_weight_fast);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(p.features_per_split));
    w.pod<std::uint8_t>(p.bootstrap ? 1 : 0);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(p.min_samples_leaf));
    w.pod<std::uint64_t>(p.rng_seed);

    write_encoder(w, model.encoders.device);
    write_encoder(w, model.encoders.ap);

    w.pod<std::uint64_t>(model.summary.n);
    w.pod<std::uint64_t>(model.summary.n_fast);
    w.pod<std::uint64_t>(model.summary.n_slow);
    w.pod<std::uint8_t>(model.summary.oob_error ? 1 : 0);
    w.pod<double>(model.summary.oob_error.value_or(0.0));

    w.pod<std::uint32_t>(static_cast<std::uint32_t>(model.trees.size()));
    for (const auto& tree : model.trees) {
        w.pod<std::uint32_t>(static_cast<std::uint32_t>(tree.nodes.size()));
        for (const auto& n : tree.nodes) {
            w.pod<std::int16_t>(n.feature);
            w.pod<double>(n.threshold);
            w.pod<std::uint32_t>(static_cast<std::uint32_t>(n.left_codes.size()));
            for (auto c : n.left_codes) w.pod<std::int32_t>(c);
            w.pod<std::int32_t>(n.left);
            w.pod<std::int32_t>(n.right);
            w.pod<double>(n.w_fast);
            w.pod<double>(n.w_slow);
        }
    }
    if (!out) throw std::runtime_error("write failure while saving model");
}

ForestModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    Reader r(in);

    char magic[4];
    r.bytes(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("not a forest model file");
    }
    const auto version = r.pod<std::uint32_t>();
    if (version != ForestModel::kFormatVersion) {
        throw std::runtime_error("unsupported model version " + std::to_string(version));
    }

    ForestModel model;
    ForestParams& p = model.params;
    p.n_trees = r.pod<std::uint32_t>();
    p.max_depth = r.pod<std::uint32_t>();
    p.class_weight_fast = r.pod<double>();
    p.features_per_split = r.pod<std::uint32_t>();
    p.bootstrap = r.pod<std::uint8_t>() != 0;
    p.min_samples_leaf = r.pod<std::uint32_t>();
    p.rng_seed = r.pod<std::uint64_t>();

    model.encoders.device = read_encoder(r);
    model.encoders.ap = read_encoder(r);

    model.summary.n = r.pod<std::uint64_t>();
    model.summary.n_fast = r.pod<std::uint64_t>();
    model.summary.n_slow = r.pod<std::uint64_t>();
    const bool has_oob = r.pod<std::uint8_t>() != 0;
    const double oob = r.pod<double>();
    if (has_oob) model.summary.oob_error = oob;

    const auto n_trees = r.pod<std::uint32_t>();
    if (n_trees != p.n_trees || n_trees == 0) {
        throw std::runtime_error("model file corrupt: bad tree count");
    }
    model.trees.resize(n_trees);
    for (auto& tree : model.trees) {
        const auto n_nodes = r.pod<std::uint32_t>();
        if (n_nodes == 0 || n_nodes > (1u << 28)) {
            throw std::runtime_error("model file corrupt: bad node count");
        }
        tree.nodes.resize(n_nodes);
        for (auto& n : tree.nodes) {
            n.feature = r.pod<std::int16_t>();
            n.threshold = r.pod<double>();
            const auto set_size = r.pod<std::uint32_t>();
            if (set_size > (1u << 26)) {
                throw std::runtime_error("model file corrupt: oversized code set");
            }
            n.left_codes.resize(set_size);
            for (auto& c : n.left_codes) c = r.pod<std::int32_t>();
            n.left = r.pod<std::int32_t>();
            n.right = r.pod<std::int32_t>();
            if (n.feature >= 0) {
                if (n.feature >= static_cast<std::int16_t>(kNumFeatures) || n.left < 0 ||
                    n.right < 0 || static_cast<std::uint32_t>(n.left) >= n_nodes ||
                    static_cast<std::uint32_t>(n.right) >= n_nodes) {
                    throw std::runtime_error("model file corrupt: bad node reference");
                }
            }
            n.w_fast = r.pod<double>();
            n.w_slow = r.pod<double>();
        }
    }
    return model;
}

}  // namespace wifilab
