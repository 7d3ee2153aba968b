#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "support/builders.hpp"
#include "wifilab/forest.hpp"
#include "wifilab/rng.hpp"

using namespace wifilab;

namespace {

bool operator_eq(const TreeNode& a, const TreeNode& b) {
    return a.feature == b.feature && a.threshold == b.threshold && a.left_codes == b.left_codes &&
           a.left == b.left && a.right == b.right && a.w_fast == b.w_fast && a.w_slow == b.w_slow;
}

bool same_structure(const ForestModel& a, const ForestModel& b) {
    if (a.trees.size() != b.trees.size()) return false;
    for (std::size_t t = 0; t < a.trees.size(); ++t) {
        if (a.trees[t].nodes.size() != b.trees[t].nodes.size()) return false;
        for (std::size_t n = 0; n < a.trees[t].nodes.size(); ++n) {
            if (!operator_eq(a.trees[t].nodes[n], b.trees[t].nodes[n])) return false;
        }
    }
    return true;
}

// Labels depend on device code and rssi only; cleanly separable.
std::vector<LabeledRow> separable_rows(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed);
    std::vector<LabeledRow> rows;
    for (std::size_t i = 0; i < n; ++i) {
        FeatureVector fv;
        fv.hour_of_day = static_cast<double>(uniform_int(rng, 0, 23));
        fv.rssi_dbm = static_cast<double>(uniform_int(rng, -95, -55));
        fv.device_code = static_cast<std::int32_t>(uniform_int(rng, 1, 6));
        fv.ap_code = static_cast<std::int32_t>(uniform_int(rng, 1, 8));
        fv.encrypted = bernoulli(rng, 0.5);
        const bool slow = fv.device_code <= 3 || fv.rssi_dbm < -90.0;
        rows.push_back({fv, slow ? SpeedLabel::SLOW : SpeedLabel::FAST});
    }
    return rows;
}

// Noisy variant: the AP code drives the label with some flip probability.
std::vector<LabeledRow> noisy_rows(std::size_t n, std::uint64_t seed, double flip) {
    std::mt19937_64 rng = make_rng(seed);
    std::vector<LabeledRow> rows;
    for (std::size_t i = 0; i < n; ++i) {
        FeatureVector fv;
        fv.hour_of_day = static_cast<double>(uniform_int(rng, 0, 23));
        fv.rssi_dbm = static_cast<double>(uniform_int(rng, -95, -55));
        fv.device_code = static_cast<std::int32_t>(uniform_int(rng, 1, 5));
        fv.ap_code = static_cast<std::int32_t>(uniform_int(rng, 1, 10));
        fv.encrypted = bernoulli(rng, 0.5);
        bool slow = fv.ap_code <= 4;
        if (bernoulli(rng, flip)) slow = !slow;
        rows.push_back({fv, slow ? SpeedLabel::SLOW : SpeedLabel::FAST});
    }
    return rows;
}

std::vector<FeatureVector> random_vectors(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed);
    std::vector<FeatureVector> out;
    for (std::size_t i = 0; i < n; ++i) {
        FeatureVector fv;
        fv.hour_of_day = static_cast<double>(uniform_int(rng, 0, 23));
        fv.rssi_dbm = static_cast<double>(uniform_int(rng, -100, -55));
        fv.device_code = static_cast<std::int32_t>(uniform_int(rng, 0, 9));
        fv.ap_code = static_cast<std::int32_t>(uniform_int(rng, 0, 12));
        fv.encrypted = bernoulli(rng, 0.5);
        out.push_back(fv);
    }
    return out;
}

struct TempFile {
    std::string path;
    explicit TempFile(const char* name)
        : path((std::filesystem::temp_directory_path() / name).string()) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("labeling splits at 15s with failures pinned SLOW") {
    CHECK(label_attempt(builders::success("a", 3000)) == SpeedLabel::FAST);
    CHECK(label_attempt(builders::success("a", 15000)) == SpeedLabel::FAST);  // boundary stays FAST
    CHECK(label_attempt(builders::success("a", 15001)) == SpeedLabel::SLOW);
    CHECK(label_attempt(builders::failure("f", Outcome::Timeout)) == SpeedLabel::SLOW);
    CHECK(label_attempt(builders::failure("f", Outcome::DhcpFailure)) == SpeedLabel::SLOW);
    CHECK_THROWS_AS(label_attempt(builders::failure("f", Outcome::WrongPassword)),
                    std::invalid_argument);
    CHECK_THROWS_AS(label_attempt(builders::failure("f", Outcome::Unknown)),
                    std::invalid_argument);
}

TEST_CASE("labeling is monotone in connection time") {
    SpeedLabel prev = SpeedLabel::FAST;
    for (std::int64_t t = 0; t <= 30000; t += 500) {
        const auto l = label_attempt(builders::success("a", t));
        if (prev == SpeedLabel::SLOW) CHECK(l == SpeedLabel::SLOW);
        prev = l;
    }
}

TEST_CASE("encoders cover the vocabulary and collapse rare categories") {
    std::vector<ConnectionAttempt> corpus;
    for (int i = 0; i < 12; ++i) {
        auto a = builders::success("a" + std::to_string(i), 900, "DM-" + std::to_string(i % 3),
                                   "APM-" + std::to_string(i % 2));
        corpus.push_back(a);
    }
    EncoderStats stats;
    auto enc = fit_encoders(corpus, 1, &stats);
    CHECK(stats.device_vocab == 3);
    CHECK(stats.ap_vocab == 2);

    // floor of 10: a category seen 9 times collapses to the unseen code
    std::vector<std::string> values;
    for (int i = 0; i < 9; ++i) values.push_back("rare");
    for (int i = 0; i < 30; ++i) values.push_back("common");
    auto floor10 = CategoryEncoder::fit(values, 10);
    CHECK(floor10.encode("common") != CategoryEncoder::kUnseenCode);
    CHECK(floor10.encode("rare") == CategoryEncoder::kUnseenCode);
    CHECK(floor10.vocab_size() == 1);
    CHECK(floor10.rare_collapsed() == 1);

    EncodeCounters counters;
    auto fv = encode_features(10, -70, "DM-0", "never-seen", true, enc, &counters);
    CHECK(fv.ap_code == CategoryEncoder::kUnseenCode);
    CHECK(counters.unseen_ap == 1);
    CHECK(counters.unseen_device == 0);

    // equal inputs encode equal vectors
    auto fv2 = encode_features(10, -70, "DM-0", "never-seen", true, enc);
    CHECK(fv == fv2);
}

TEST_CASE("training reaches perfect accuracy on separable data") {
    auto rows = separable_rows(200, 1);
    ForestParams params;
    params.n_trees = 20;
    params.rng_seed = 5;
    params.compute_oob = false;
    auto model = train_forest(rows, params);
    auto metrics = evaluate_forest(model, rows);
    CHECK(metrics.confusion[0][1] == 0);
    CHECK(metrics.confusion[1][0] == 0);
    CHECK(*metrics.precision_fast == 1.0);
    CHECK(*metrics.recall_slow == 1.0);
}

TEST_CASE("a single-tree forest without bootstrap is that tree") {
    auto rows = noisy_rows(800, 2, 0.1);
    ForestParams params;
    params.n_trees = 1;
    params.bootstrap = false;
    params.rng_seed = 17;
    auto model = train_forest(rows, params);
    REQUIRE(model.trees.size() == 1);
    for (const auto& fv : random_vectors(500, 3)) {
        CHECK(model.predict(fv).label == model.trees[0].predict(fv));
    }
}

TEST_CASE("training is deterministic in the seed") {
    auto rows = noisy_rows(1500, 4, 0.15);
    ForestParams params;
    params.n_trees = 12;
    params.rng_seed = 99;
    auto a = train_forest(rows, params);
    auto b = train_forest(rows, params);
    CHECK(same_structure(a, b));
    CHECK(a.summary.oob_error == b.summary.oob_error);

    params.rng_seed = 100;
    auto c = train_forest(rows, params);
    CHECK_FALSE(same_structure(a, c));
}

TEST_CASE("prediction is invariant under tree permutation") {
    auto rows = noisy_rows(1000, 6, 0.2);
    ForestParams params;
    params.n_trees = 15;
    params.rng_seed = 3;
    params.compute_oob = false;
    auto model = train_forest(rows, params);

    ForestModel shuffled = model;
    std::mt19937_64 rng = make_rng(1);
    deterministic_shuffle(shuffled.trees, rng);
    for (const auto& fv : random_vectors(400, 8)) {
        const auto a = model.predict(fv);
        const auto b = shuffled.predict(fv);
        CHECK(a.label == b.label);
        CHECK(a.slow_score == b.slow_score);
    }
}

TEST_CASE("ties in the vote go to SLOW") {
    // two hand-built leaf-only trees voting opposite ways
    ForestModel model;
    model.params.n_trees = 2;
    TreeNode fast_leaf;
    fast_leaf.w_fast = 1.0;
    TreeNode slow_leaf;
    slow_leaf.w_slow = 1.0;
    model.trees.resize(2);
    model.trees[0].nodes = {fast_leaf};
    model.trees[1].nodes = {slow_leaf};

    const auto p = model.predict(FeatureVector{});
    CHECK(p.slow_score == 0.5);
    CHECK(p.label == SpeedLabel::SLOW);

    model.trees = {model.trees[0], model.trees[0]};
    const auto all_fast = model.predict(FeatureVector{});
    CHECK(all_fast.slow_score == 0.0);
    CHECK(all_fast.label == SpeedLabel::FAST);
}

TEST_CASE("no tree exceeds the depth cap") {
    auto rows = noisy_rows(3000, 11, 0.25);
    ForestParams params;
    params.n_trees = 8;
    params.max_depth = 4;
    params.rng_seed = 2;
    params.compute_oob = false;
    auto model = train_forest(rows, params);
    for (const auto& t : model.trees) CHECK(t.depth() <= 4);

    params.max_depth = 90;
    auto deep = train_forest(rows, params);
    for (const auto& t : deep.trees) CHECK(t.depth() <= 90);
}

TEST_CASE("single-class training data is rejected") {
    std::vector<LabeledRow> rows;
    for (int i = 0; i < 50; ++i) {
        FeatureVector fv;
        fv.rssi_dbm = -60 - i;
        rows.push_back({fv, SpeedLabel::SLOW});
    }
    CHECK_THROWS_AS(train_forest(rows, ForestParams{}), std::invalid_argument);
    CHECK_THROWS_AS(train_forest({}, ForestParams{}), std::invalid_argument);
}

TEST_CASE("save/load round-trips predictions bit for bit") {
    std::vector<ConnectionAttempt> enc_corpus;
    for (int i = 0; i < 40; ++i) {
        enc_corpus.push_back(builders::success("e" + std::to_string(i), 1000,
                                               "DM-" + std::to_string(i % 4),
                                               "APM-" + std::to_string(i % 6)));
    }
    auto encoders = fit_encoders(enc_corpus, 1);
    auto rows = noisy_rows(1200, 13, 0.1);
    ForestParams params;
    params.n_trees = 10;
    params.rng_seed = 31;
    auto model = train_forest(rows, params, encoders);

    TempFile file("wifilab_model_test.bin");
    save_model(model, file.path);
    auto loaded = load_model(file.path);
    CHECK(loaded.encoders == model.encoders);
    CHECK(same_structure(model, loaded));
    for (const auto& fv : random_vectors(1000, 14)) {
        const auto a = model.predict(fv);
        const auto b = loaded.predict(fv);
        CHECK(a.label == b.label);
        CHECK(a.slow_score == b.slow_score);
    }
    CHECK(loaded.summary.n == model.summary.n);
}

TEST_CASE("corrupt model files fail loudly") {
    auto rows = noisy_rows(300, 15, 0.1);
    ForestParams params;
    params.n_trees = 3;
    params.rng_seed = 1;
    params.compute_oob = false;
    auto model = train_forest(rows, params);

    TempFile file("wifilab_model_corrupt.bin");
    save_model(model, file.path);

    SUBCASE("truncated") {
        auto size = std::filesystem::file_size(file.path);
        std::filesystem::resize_file(file.path, size / 2);
        CHECK_THROWS_AS(load_model(file.path), std::runtime_error);
    }
    SUBCASE("wrong magic") {
        std::fstream f(file.path, std::ios::in | std::ios::out | std::ios::binary);
        f.write("NOPE", 4);
        f.close();
        CHECK_THROWS_AS(load_model(file.path), std::runtime_error);
    }
    SUBCASE("unsupported version") {
        std::fstream f(file.path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        const std::uint32_t future_version = 999;
        f.write(reinterpret_cast<const char*>(&future_version), sizeof(future_version));
        f.close();
        CHECK_THROWS_WITH_AS(load_model(file.path), "unsupported model version 999",
                             std::runtime_error);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_model("/nonexistent/path/model.bin"), std::runtime_error);
    }
}

TEST_CASE("metrics match hand-computed values") {
    auto rows = separable_rows(400, 16);
    ForestParams params;
    params.n_trees = 10;
    params.rng_seed = 44;
    params.compute_oob = false;
    auto model = train_forest(rows, params);

    SUBCASE("perfect classifier") {
        auto m = evaluate_forest(model, rows);
        CHECK(*m.precision_fast == 1.0);
        CHECK(*m.recall_fast == 1.0);
        CHECK(*m.precision_slow == 1.0);
        CHECK(*m.recall_slow == 1.0);
        CHECK(m.confusion[0][0] + m.confusion[1][1] == m.n_test);
    }
    SUBCASE("an always-SLOW rule on a balanced set") {
        std::vector<LabeledRow> balanced;
        for (int i = 0; i < 50; ++i) {
            FeatureVector fv;
            fv.hour_of_day = i;
            balanced.push_back({fv, i % 2 == 0 ? SpeedLabel::FAST : SpeedLabel::SLOW});
        }
        auto m = evaluate_at_threshold(model, balanced, 0.0);  // score >= 0 is always SLOW
        CHECK(*m.recall_slow == 1.0);
        CHECK(*m.precision_slow == 0.5);
        CHECK_FALSE(m.precision_fast.has_value());  // no FAST predictions: undefined, not zero
        CHECK(*m.recall_fast == 0.0);
    }
}

namespace {

// Graded class mix: P(SLOW) rises with the AP code, so depth-limited leaves
// keep mixed populations and the class weight decides their vote.
std::vector<LabeledRow> graded_rows(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed);
    std::vector<LabeledRow> rows;
    for (std::size_t i = 0; i < n; ++i) {
        FeatureVector fv;
        fv.hour_of_day = static_cast<double>(uniform_int(rng, 0, 23));
        fv.rssi_dbm = static_cast<double>(uniform_int(rng, -95, -55));
        fv.device_code = static_cast<std::int32_t>(uniform_int(rng, 1, 5));
        fv.ap_code = static_cast<std::int32_t>(uniform_int(rng, 1, 12));
        fv.encrypted = bernoulli(rng, 0.5);
        const double p_slow = static_cast<double>(fv.ap_code) / 13.0;
        rows.push_back({fv, bernoulli(rng, p_slow) ? SpeedLabel::SLOW : SpeedLabel::FAST});
    }
    return rows;
}

}  // namespace

TEST_CASE("lowering the fast class weight never hurts slow recall") {
    auto train = graded_rows(6000, 17);
    auto test = graded_rows(4000, 18);
    double prev_recall = -1.0;
    for (double w : {0.6, 0.3, 0.15}) {
        ForestParams params;
        params.n_trees = 40;
        params.max_depth = 4;  // keep leaves mixed so the weight matters
        params.class_weight_fast = w;
        params.rng_seed = 7;
        params.compute_oob = false;
        auto model = train_forest(train, params);
        auto m = evaluate_forest(model, test);
        CHECK(*m.recall_slow >= prev_recall);
        prev_recall = *m.recall_slow;
    }
    CHECK(prev_recall > 0.5);
}

TEST_CASE("paper-style parameters recover slow attempts on a plantable corpus") {
    // class overlap tuned so the Bayes recall is around 0.95
    auto train = noisy_rows(6000, 19, 0.05);
    auto test = noisy_rows(3000, 20, 0.05);
    ForestParams params;  // defaults: 100 trees, depth 90, weight 0.3
    params.rng_seed = 23;
    params.compute_oob = false;
    auto model = train_forest(train, params);
    auto m = evaluate_forest(model, test);
    CHECK(*m.recall_slow >= 0.85);
}

TEST_CASE("out-of-bag error is reported and plausible") {
    auto rows = noisy_rows(2500, 21, 0.1);
    ForestParams params;
    params.n_trees = 25;
    params.rng_seed = 3;
    auto model = train_forest(rows, params);
    REQUIRE(model.summary.oob_error.has_value());
    CHECK(*model.summary.oob_error < 0.3);  // flip noise is 0.1
    CHECK(*model.summary.oob_error > 0.0);
}
