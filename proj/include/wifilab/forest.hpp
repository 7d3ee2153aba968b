#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wifilab/feature_model.hpp"

namespace wifilab {

struct ForestParams {
    std::size_t n_trees = 100;
    std::size_t max_depth = 90;
    double class_weight_fast = 0.3;  // SLOW weight is fixed at 1.0
    std::size_t features_per_split = 3;
    bool bootstrap = true;
    std::size_t min_samples_leaf = 1;
    std::uint64_t rng_seed = 0;
    bool compute_oob = true;  // informational out-of-bag error
};

std::optional<std::string> validate(const ForestParams& p);

// Binary split node. Numeric splits send value <= threshold left;
// categorical splits send codes in left_codes left. feature < 0 marks a leaf.
struct TreeNode {
    std::int16_t feature = -1;
    double threshold = 0.0;
    std::vector<std::int32_t> left_codes;  // sorted, categorical splits only
    std::int32_t left = -1;
    std::int32_t right = -1;
    double w_fast = 0.0;  // class-weighted sample mass at leaves
    double w_slow = 0.0;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    SpeedLabel predict(const FeatureVector& fv) const;
    std::size_t depth() const;  // edges on the longest root-to-leaf path
};

struct TrainingSummary {
    std::size_t n = 0;
    std::size_t n_fast = 0;
    std::size_t n_slow = 0;
    std::optional<double> oob_error;
};

struct Prediction {
    SpeedLabel label = SpeedLabel::SLOW;
    double slow_score = 0.0;  // fraction of trees voting SLOW
};

struct ForestModel {
    static constexpr std::uint32_t kFormatVersion = 1;

    ForestParams params;
    std::vector<DecisionTree> trees;
    EncoderPair encoders;
    TrainingSummary summary;

    // Majority vote over trees; exact ties go to SLOW.
    Prediction predict(const FeatureVector& fv) const;
};

struct LabeledRow {
    FeatureVector features;
    SpeedLabel label = SpeedLabel::SLOW;
};

// Trains the ensemble: per-tree bootstrap (when enabled), features_per_split
// random candidate features per node, split chosen by weighted Gini decrease.
// Deterministic in params.rng_seed; trees are trained on independent derived
// streams so a parallel schedule yields the sequential result. Throws when
// the dataset is empty or single-class.
ForestModel train_forest(std::span<const LabeledRow> dataset, const ForestParams& params,
                         EncoderPair encoders = {});

struct MetricsReport {
    // confusion[actual][predicted], index 0 = FAST, 1 = SLOW
    std::array<std::array<std::size_t, 2>, 2> confusion{};
    std::optional<double> precision_fast, recall_fast;
    std::optional<double> precision_slow, recall_slow;
    std::size_t n_test = 0;
};

MetricsReport evaluate_forest(const ForestModel& model, std::span<const LabeledRow> testset);

// Same, but classifying SLOW when slow_score >= slow_threshold instead of by
// majority. Lowering the threshold trades precision for SLOW recall.
MetricsReport evaluate_at_threshold(const ForestModel& model, std::span<const LabeledRow> testset,
                                    double slow_threshold);

// Versioned little-endian binary format with the encoder vocabularies
// embedded; load(save(m)) predicts identically to m.
void save_model(const ForestModel& model, const std::string& path);
ForestModel load_model(const std::string& path);

}  // namespace wifilab
