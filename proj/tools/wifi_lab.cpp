// Command-line front end: simulate -> analyze -> train -> eval -> select.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "wifilab/analytics.hpp"
#include "wifilab/candidate_gen.hpp"
#include "wifilab/corpus_gen.hpp"
#include "wifilab/forest.hpp"
#include "wifilab/log_schema.hpp"
#include "wifilab/rng.hpp"
#include "wifilab/selection_eval.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wifilab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw DataError("'" + path + "' is not valid JSON");
    return j;
}

void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << body;
    if (!out) throw DataError("write failure on '" + path + "'");
}

LogFormat parse_format(const std::string& s) {
    auto f = log_format_from_string(s);
    if (!f) throw CLI::ValidationError("--format", "expected jsonl or csv");
    return *f;
}

std::vector<ConnectionAttempt> load_corpus(const std::string& path, LogFormat format,
                                           bool report_diagnostics = true) {
    IngestResult res;
    try {
        res = ingest_file(path, format);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
    if (report_diagnostics && !res.diagnostics.empty()) {
        std::cerr << path << ": " << res.rejected_count() << " rows rejected, "
                  << res.warning_count() << " warnings\n";
    }
    return std::move(res.attempts);
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
    std::string config_path;
    std::string out_path;
    std::string format = "jsonl";
    std::string traces_path;
    std::string report_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> timeout_ms;
};

int cmd_simulate(const SimulateOptions& opt) {
    json doc = load_json_file(opt.config_path);
    const std::string kind = doc.value("kind", "corpus");

    if (kind == "candidates") {
        if (parse_format(opt.format) != LogFormat::Jsonl) {
            throw CLI::ValidationError("--format", "candidate sets are jsonl-only");
        }
        CandidateGenConfig cfg;
        try {
            cfg = candidate_gen_config_from_json(doc);
        } catch (const std::exception& e) {
            throw DataError(std::string("bad candidate config: ") + e.what());
        }
        if (opt.seed) cfg.rng_seed = *opt.seed;
        auto sets = generate_candidate_sets(cfg);
        std::ofstream out(opt.out_path);
        if (!out) throw DataError("cannot open '" + opt.out_path + "' for writing");
        write_candidate_sets_jsonl(sets, out);
        std::cerr << "wrote " << sets.size() << " candidate sets to " << opt.out_path << "\n";
        return kExitOk;
    }
    if (kind != "corpus") throw DataError("unknown config kind '" + kind + "'");

    CorpusConfig cfg;
    try {
        cfg = corpus_config_from_json(doc);
    } catch (const std::exception& e) {
        throw DataError(std::string("bad corpus config: ") + e.what());
    }
    if (opt.seed) cfg.rng_seed = *opt.seed;
    if (opt.timeout_ms) {
        for (auto& tpl : cfg.templates) tpl.scenario.timeout_ms = *opt.timeout_ms;
    }
    if (!opt.traces_path.empty()) cfg.keep_traces = true;

    auto corpus = generate_corpus(cfg);
    emit_file(corpus.attempts, opt.out_path, parse_format(opt.format));
    if (!opt.traces_path.empty()) {
        std::ofstream out(opt.traces_path);
        if (!out) throw DataError("cannot open '" + opt.traces_path + "' for writing");
        write_traces_jsonl(corpus.traces, out);
    }
    const std::string report = to_json(corpus.calibration).dump(2) + "\n";
    if (opt.report_path.empty()) {
        std::cout << report;
    } else {
        write_text_file(opt.report_path, report);
    }
    if (!corpus.calibration.all_within) {
        std::cerr << "warning: calibration targets missed (see report)\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
    std::string in_path;
    std::string format = "jsonl";
    std::string traces_path;
    std::string out_dir;
    std::string cls;  // optional time-cost class filter for scan quantiles
};

std::string csv_of_cdf(const Cdf& cdf, const std::string& header) {
    std::string s = header + "\n";
    for (const auto& [x, f] : cdf.points) {
        s += std::to_string(x) + "," + std::to_string(f) + "\n";
    }
    return s;
}

int cmd_analyze(const AnalyzeOptions& opt) {
    auto corpus = load_corpus(opt.in_path, parse_format(opt.format));
    if (corpus.empty()) throw DataError("corpus is empty");
    fs::create_directories(opt.out_dir);
    const fs::path dir(opt.out_dir);

    // outcome proportions
    {
        auto props = outcome_proportions(corpus);
        json j;
        for (const auto& [o, frac] : props) j[to_string(o)] = frac;
        write_text_file((dir / "outcome_proportions.json").string(), j.dump(2) + "\n");
    }

    // success time cdf
    std::size_t n_success = 0;
    for (const auto& a : corpus) n_success += a.outcome == Outcome::Success ? 1 : 0;
    if (n_success > 0) {
        write_text_file((dir / "success_time_cdf.csv").string(),
                        csv_of_cdf(success_time_cdf(corpus), "time_ms,cdf"));
    }

    // phase share distributions per time-cost class
    {
        auto breakdown = phase_proportion_cdfs(corpus);
        std::string csv = "cost_class,phase,proportion,cdf\n";
        json j;
        j["skipped_no_phases"] = breakdown.skipped_no_phases;
        for (const auto& [cls, entry] : breakdown.by_class) {
            json cj;
            cj["n"] = entry.n;
            for (int p = 0; p < kPhaseCount; ++p) {
                cj[phase_name(p)] = {{"mean", entry.mean_proportion[static_cast<std::size_t>(p)]},
                                     {"median", entry.median_proportion[static_cast<std::size_t>(p)]}};
                for (const auto& [x, f] : entry.proportion_cdf[static_cast<std::size_t>(p)].points) {
                    csv += std::string(to_string(cls)) + "," + phase_name(p) + "," +
                           std::to_string(x) + "," + std::to_string(f) + "\n";
                }
            }
            j[to_string(cls)] = cj;
        }
        write_text_file((dir / "phase_proportions.json").string(), j.dump(2) + "\n");
        write_text_file((dir / "phase_proportion_cdfs.csv").string(), csv);
    }

    // scan-time quantiles (optionally restricted to one class)
    {
        std::string csv = "cost_class,p,scan_ms\n";
        for (int c = 0; c < kTimeCostClassCount; ++c) {
            const auto cls = static_cast<TimeCostClass>(c);
            if (!opt.cls.empty() && opt.cls != to_string(cls)) continue;
            try {
                auto table = scan_time_quantiles(corpus, cls);
                for (const auto& [p, v] : table.rows) {
                    csv += std::string(to_string(cls)) + "," + std::to_string(p) + "," +
                           std::to_string(v) + "\n";
                }
            } catch (const std::invalid_argument&) {
                // class not populated; leave it out
            }
        }
        write_text_file((dir / "scan_time_quantiles.csv").string(), csv);
    }

    // mean time per feature bin (numeric features)
    {
        std::vector<double> y, rssi, devices, hours;
        for (const auto& a : corpus) {
            if (a.outcome != Outcome::Success) continue;
            y.push_back(static_cast<double>(*a.connection_time_ms));
            rssi.push_back(static_cast<double>(a.rssi_dbm));
            devices.push_back(static_cast<double>(a.num_devices));
            hours.push_back(static_cast<double>(a.hour_of_day));
        }
        auto dump_curve = [&](const char* name, const std::vector<double>& x, BinSpec spec) {
            if (x.empty()) return;
            auto series = binned_mean_curve(x, y, spec);
            std::string csv = "bin_left,bin_right,count,mean_time_ms\n";
            for (const auto& b : series.bins) {
                csv += std::to_string(b.left) + "," + std::to_string(b.right) + "," +
                       std::to_string(b.count) + "," + std::to_string(b.mean_y) + "\n";
            }
            write_text_file((dir / (std::string("binned_mean_") + name + ".csv")).string(), csv);
        };
        dump_curve("rssi", rssi, BinSpec::numeric(5.0, -100.0));
        dump_curve("num_devices", devices, BinSpec::numeric(10.0, 0.0));
        dump_curve("hour_of_day", hours, BinSpec::numeric(1.0, 0.0));
    }

    // correlation report
    if (n_success > 0) {
        auto rep = correlation_report(corpus);
        json features = json::array();
        std::string csv = "feature,rig,kendall\n";
        for (const auto& f : rep.features) {
            features.push_back({{"feature", f.feature},
                                {"rig", f.rig},
                                {"kendall", f.kendall ? json(*f.kendall) : json(nullptr)}});
            csv += f.feature + "," + std::to_string(f.rig) + "," +
                   (f.kendall ? std::to_string(*f.kendall) : "") + "\n";
        }
        write_text_file((dir / "correlation_report.json").string(),
                        json{{"n_success", rep.n_success}, {"features", features}}.dump(2) + "\n");
        write_text_file((dir / "correlation_report.csv").string(), csv);
    }

    // group comparisons
    for (auto key : {GroupKey::band, GroupKey::is_public, GroupKey::device_model,
                     GroupKey::hour_of_day}) {
        auto rep = group_compare(corpus, key);
        if (rep.groups.empty()) continue;
        json groups = json::array();
        std::string cdf_csv = "group,time_ms,cdf\n";
        for (const auto& g : rep.groups) {
            groups.push_back({{"key", g.key},
                              {"count", g.count},
                              {"n_success", g.n_success},
                              {"failure_rate", g.failure_rate},
                              {"min_ms", g.min_ms},
                              {"p25_ms", g.p25_ms},
                              {"p75_ms", g.p75_ms},
                              {"p90_ms", g.p90_ms}});
            for (const auto& [x, f] : g.success_cdf.points) {
                cdf_csv += g.key + "," + std::to_string(x) + "," + std::to_string(f) + "\n";
            }
        }
        const std::string stem = std::string("group_") + to_string(key);
        write_text_file((dir / (stem + ".json")).string(),
                        json{{"key", to_string(key)},
                             {"excluded_missing_key", rep.excluded_missing_key},
                             {"groups", groups}}
                                .dump(2) +
                            "\n");
        write_text_file((dir / (stem + "_cdf.csv")).string(), cdf_csv);
    }

    // transition matrix, when traces are provided
    if (!opt.traces_path.empty()) {
        std::ifstream in(opt.traces_path);
        if (!in) throw DataError("cannot open '" + opt.traces_path + "'");
        std::vector<TransitionTrace> traces;
        try {
            traces = read_traces_jsonl(in);
        } catch (const std::exception& e) {
            throw DataError(e.what());
        }
        auto m = transition_matrix(traces);
        std::string csv = "from,to,count\n";
        json j;
        for (int f = 0; f < kConnStateCount; ++f) {
            for (int t = 0; t < kConnStateCount; ++t) {
                const auto c = m.at(static_cast<ConnState>(f), static_cast<ConnState>(t));
                if (c == 0) continue;
                csv += std::string(to_string(static_cast<ConnState>(f))) + "," +
                       to_string(static_cast<ConnState>(t)) + "," + std::to_string(c) + "\n";
                j[to_string(static_cast<ConnState>(f))][to_string(static_cast<ConnState>(t))] = c;
            }
        }
        write_text_file((dir / "transition_matrix.csv").string(), csv);
        write_text_file((dir / "transition_matrix.json").string(), j.dump(2) + "\n");
    }

    std::cerr << "analysis bundle written to " << opt.out_dir << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train / eval / select

struct ForestFlags {
    std::size_t trees = 100;
    std::size_t depth = 90;
    double weight_fast = 0.3;
    std::size_t features_per_split = 3;
    std::size_t min_leaf = 1;
    bool no_bootstrap = false;
    std::uint64_t seed = 0;

    ForestParams to_params() const {
        ForestParams p;
        p.n_trees = trees;
        p.max_depth = depth;
        p.class_weight_fast = weight_fast;
        p.features_per_split = features_per_split;
        p.min_samples_leaf = min_leaf;
        p.bootstrap = !no_bootstrap;
        p.rng_seed = seed;
        return p;
    }
};

void add_forest_flags(CLI::App* cmd, ForestFlags& f) {
    cmd->add_option("--trees", f.trees, "number of trees");
    cmd->add_option("--depth", f.depth, "maximum tree depth");
    cmd->add_option("--weight-fast", f.weight_fast, "FAST class weight (SLOW is 1.0)");
    cmd->add_option("--features-per-split", f.features_per_split, "features sampled per node");
    cmd->add_option("--min-leaf", f.min_leaf, "minimum samples per leaf");
    cmd->add_flag("--no-bootstrap", f.no_bootstrap, "train each tree on the full set");
    cmd->add_option("--seed", f.seed, "seed for all randomness");
}

struct TrainOptions {
    std::string in_path;
    std::string format = "jsonl";
    std::string out_path;
    std::string metrics_path;
    std::int64_t threshold_ms = kFastThresholdMs;
    std::size_t encoder_min_count = 5;
    ForestFlags forest;
};

int cmd_train(const TrainOptions& opt) {
    auto corpus = load_corpus(opt.in_path, parse_format(opt.format));
    std::vector<ConnectionAttempt> willing;
    for (auto& a : corpus) {
        if (is_willing(a.outcome)) willing.push_back(std::move(a));
    }
    if (willing.size() < 10) throw DataError("too few willing attempts to train on");
    std::cerr << "training on " << willing.size() << " willing attempts ("
              << corpus.size() - willing.size() << " user-abandoned rows skipped)\n";

    // deterministic 80/20 train/validation split
    std::vector<std::size_t> order(willing.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng = make_rng(opt.forest.seed, 0x7E57u);
    deterministic_shuffle(order, rng);
    const std::size_t n_train = (willing.size() * 8) / 10;

    std::vector<ConnectionAttempt> train_attempts;
    train_attempts.reserve(n_train);
    for (std::size_t i = 0; i < n_train; ++i) train_attempts.push_back(willing[order[i]]);
    const EncoderPair encoders = fit_encoders(train_attempts, opt.encoder_min_count);

    auto to_row = [&](const ConnectionAttempt& a) {
        return LabeledRow{encode_attempt(a, encoders), label_attempt(a, opt.threshold_ms)};
    };
    std::vector<LabeledRow> train_rows, val_rows;
    for (std::size_t i = 0; i < willing.size(); ++i) {
        (i < n_train ? train_rows : val_rows).push_back(to_row(willing[order[i]]));
    }

    ForestModel model;
    try {
        model = train_forest(train_rows, opt.forest.to_params(), encoders);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
    save_model(model, opt.out_path);

    json metrics;
    if (!val_rows.empty()) metrics["validation"] = to_json(evaluate_forest(model, val_rows));
    metrics["n_train"] = train_rows.size();
    metrics["n_validation"] = val_rows.size();
    if (model.summary.oob_error) metrics["oob_error"] = *model.summary.oob_error;
    const std::string body = metrics.dump(2) + "\n";
    if (opt.metrics_path.empty()) {
        std::cout << body;
    } else {
        write_text_file(opt.metrics_path, body);
    }
    std::cerr << "model written to " << opt.out_path << "\n";
    return kExitOk;
}

struct EvalOptions {
    std::string in_path;
    std::string out_path;
    std::int64_t threshold_ms = kFastThresholdMs;
    std::size_t encoder_min_count = 5;
    std::uint64_t split_seed = 0;
    ForestFlags forest;
};

int cmd_eval(const EvalOptions& opt) {
    std::vector<CandidateSet> sets;
    try {
        sets = read_candidate_sets_file(opt.in_path);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
    WhatIfConfig cfg;
    cfg.forest = opt.forest.to_params();
    cfg.fast_threshold_ms = opt.threshold_ms;
    cfg.encoder_min_count = opt.encoder_min_count;
    cfg.split_seed = opt.split_seed;

    EvalReport rep;
    try {
        rep = what_if_eval(sets, cfg);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
    const std::string body = to_json(rep).dump(2) + "\n";
    if (opt.out_path.empty()) {
        std::cout << body;
    } else {
        write_text_file(opt.out_path, body);
    }
    std::cerr << "baseline failure " << rep.baseline.failure_rate << ", ml failure "
              << rep.ml.failure_rate << ", poa " << rep.poa << "\n";
    return kExitOk;
}

struct SelectOptions {
    std::string in_path;
    std::string model_path;
    std::string out_path;
};

int cmd_select(const SelectOptions& opt) {
    ForestModel model;
    try {
        model = load_model(opt.model_path);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
    std::vector<CandidateSet> sets;
    try {
        sets = read_candidate_sets_file(opt.in_path);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
    std::ofstream out(opt.out_path);
    if (!out) throw DataError("cannot open '" + opt.out_path + "' for writing");
    for (const auto& cs : sets) {
        out << to_json(select_ml(model, cs), cs.event_id).dump() << '\n';
    }
    std::cerr << "wrote " << sets.size() << " decisions to " << opt.out_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"WiFi association lab: simulate, analyze, train, eval, select"};
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* sim_cmd = app.add_subcommand("simulate", "generate a corpus or candidate sets");
    sim_cmd->add_option("--config", sim.config_path, "JSON config document")->required();
    sim_cmd->add_option("--out", sim.out_path, "output path")->required();
    sim_cmd->add_option("--format", sim.format, "jsonl or csv");
    sim_cmd->add_option("--traces", sim.traces_path, "also write transition traces (JSONL)");
    sim_cmd->add_option("--report", sim.report_path, "calibration report path (default stdout)");
    std::uint64_t sim_seed = 0;
    auto* sim_seed_opt = sim_cmd->add_option("--seed", sim_seed, "override the config seed");
    std::int64_t sim_timeout = 0;
    auto* sim_timeout_opt =
        sim_cmd->add_option("--timeout-ms", sim_timeout, "override every template's deadline");

    AnalyzeOptions ana;
    auto* ana_cmd = app.add_subcommand("analyze", "write the measurement report bundle");
    ana_cmd->add_option("--in", ana.in_path, "corpus path")->required();
    ana_cmd->add_option("--format", ana.format, "jsonl or csv");
    ana_cmd->add_option("--traces", ana.traces_path, "transition traces (JSONL)");
    ana_cmd->add_option("--out-dir", ana.out_dir, "report directory")->required();
    ana_cmd->add_option("--class", ana.cls, "restrict scan quantiles to one class (0-7s|7-15s|15-30s)");

    TrainOptions tr;
    auto* tr_cmd = app.add_subcommand("train", "fit the FAST/SLOW forest from a corpus");
    tr_cmd->add_option("--in", tr.in_path, "corpus path")->required();
    tr_cmd->add_option("--format", tr.format, "jsonl or csv");
    tr_cmd->add_option("--out", tr.out_path, "model file path")->required();
    tr_cmd->add_option("--metrics", tr.metrics_path, "metrics JSON path (default stdout)");
    tr_cmd->add_option("--threshold-ms", tr.threshold_ms, "FAST/SLOW boundary");
    tr_cmd->add_option("--encoder-min-count", tr.encoder_min_count, "rare-category floor");
    add_forest_flags(tr_cmd, tr.forest);

    EvalOptions ev;
    auto* ev_cmd = app.add_subcommand("eval", "what-if replay against the strongest-signal baseline");
    ev_cmd->add_option("--in", ev.in_path, "candidate sets (JSONL)")->required();
    ev_cmd->add_option("--out", ev.out_path, "report JSON path (default stdout)");
    ev_cmd->add_option("--threshold-ms", ev.threshold_ms, "FAST/SLOW boundary");
    ev_cmd->add_option("--encoder-min-count", ev.encoder_min_count, "rare-category floor");
    ev_cmd->add_option("--split-seed", ev.split_seed, "50/50 split seed");
    add_forest_flags(ev_cmd, ev.forest);

    SelectOptions sel;
    auto* sel_cmd = app.add_subcommand("select", "run the trained model over candidate sets");
    sel_cmd->add_option("--in", sel.in_path, "candidate sets (JSONL)")->required();
    sel_cmd->add_option("--model", sel.model_path, "model file")->required();
    sel_cmd->add_option("--out", sel.out_path, "decisions JSONL path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim_cmd->parsed()) {
            if (*sim_seed_opt) sim.seed = sim_seed;
            if (*sim_timeout_opt) sim.timeout_ms = sim_timeout;
            return cmd_simulate(sim);
        }
        if (ana_cmd->parsed()) return cmd_analyze(ana);
        if (tr_cmd->parsed()) return cmd_train(tr);
        if (ev_cmd->parsed()) return cmd_eval(ev);
        if (sel_cmd->parsed()) return cmd_select(sel);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}
