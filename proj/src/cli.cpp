#include "nego/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "nego/baseline.hpp"
#include "nego/data.hpp"
#include "nego/errors.hpp"
#include "nego/ioutil.hpp"
#include "nego/metrics.hpp"
#include "nego/report.hpp"
#include "nego/simulator.hpp"
#include "nego/training.hpp"

namespace nego::cli {

namespace {

constexpr const char* kToolVersion = "1.0.0";

using nlohmann::json;

// ---------------------------------------------------------------------
// config plumbing

struct ExperimentConfig {
    std::string scenario;   // "preset:<name>" or a scenario file; empty if dataset set
    std::string dataset;    // CSV path; empty if scenario set
    std::string output_dir;
    std::uint64_t seed = 1;
    bool with_baseline = true;
    double val_frac = 0.2;
    double test_frac = 0.2;
    TrainConfig train;
};

std::string resolve_out(const std::string& path) {
    if (path.empty()) return path;
    const char* root = std::getenv("NEGONETS_OUT_ROOT");
    if (root && *root && !std::filesystem::path(path).is_absolute())
        return (std::filesystem::path(root) / path).string();
    return path;
}

json parse_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        return json(text);
    }
}

void apply_override(json& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw usage_error("override '" + assignment + "' is not of the form key=value");
    const std::string key = assignment.substr(0, eq);
    const json value = parse_value(assignment.substr(eq + 1));

    json* cur = &root;
    std::size_t pos = 0;
    while (true) {
        const auto dot = key.find('.', pos);
        const std::string part = key.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (part.empty()) throw usage_error("override '" + assignment + "' has an empty key part");
        if (dot == std::string::npos) {
            (*cur)[part] = value;
            break;
        }
        cur = &((*cur)[part]);
        pos = dot + 1;
    }
}

ExperimentConfig experiment_from_json(const json& j) {
    ExperimentConfig cfg;
    cfg.scenario = j.value("scenario", std::string());
    cfg.dataset = j.value("dataset", std::string());
    cfg.output_dir = j.value("output_dir", std::string());
    cfg.seed = j.value("seed", 1ULL);
    cfg.with_baseline = j.value("baseline", true);
    cfg.val_frac = j.value("val_frac", 0.2);
    cfg.test_frac = j.value("test_frac", 0.2);

    const json jt = j.value("train", json::object());
    cfg.train.epochs = jt.value("epochs", 80);
    cfg.train.batch_size = jt.value("batch_size", 128ULL);
    cfg.train.buyer_lr = jt.value("buyer_lr", 0.01);
    cfg.train.seller_lr = jt.value("seller_lr", 0.01);
    cfg.train.buyer_steps = jt.value("buyer_steps", 1);
    cfg.train.seller_steps = jt.value("seller_steps", 1);
    cfg.train.hidden = jt.value("hidden", std::vector<std::size_t>{16, 16, 16});
    cfg.train.patience = jt.value("patience", 10);
    cfg.train.early_stop_tol = jt.value("early_stop_tol", 1e-6);
    cfg.train.seed = cfg.seed;

    const json jl = j.value("loss", json::object());
    cfg.train.loss.c1 = jl.value("c1", 0.5);
    cfg.train.loss.c2 = jl.value("c2", 2.0);
    cfg.train.loss.lambda = jl.value("lambda", 1.0);
    cfg.train.loss.fd_delta = jl.value("fd_delta", 1e-3);
    cfg.train.loss.classification_threshold = jl.value("threshold", 0.5);
    cfg.train.loss.pointwise_in_seller = jl.value("pointwise_in_seller", false);
    cfg.train.loss.revenue_in_buyer = jl.value("revenue_in_buyer", false);

    if (cfg.scenario.empty() == cfg.dataset.empty())
        throw config_error("config: exactly one of 'scenario' or 'dataset' must be set");
    if (cfg.output_dir.empty()) throw config_error("config: 'output_dir' is required");
    cfg.output_dir = resolve_out(cfg.output_dir);
    cfg.train.loss.validate();
    return cfg;
}

/// Fully-resolved canonical form; its hash identifies the run.
json canonical_config(const ExperimentConfig& cfg) {
    json j;
    j["scenario"] = cfg.scenario;
    j["dataset"] = cfg.dataset;
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed;
    j["baseline"] = cfg.with_baseline;
    j["val_frac"] = cfg.val_frac;
    j["test_frac"] = cfg.test_frac;
    j["train"] = {{"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"buyer_lr", cfg.train.buyer_lr},
                  {"seller_lr", cfg.train.seller_lr},
                  {"buyer_steps", cfg.train.buyer_steps},
                  {"seller_steps", cfg.train.seller_steps},
                  {"hidden", cfg.train.hidden},
                  {"patience", cfg.train.patience},
                  {"early_stop_tol", cfg.train.early_stop_tol}};
    j["loss"] = {{"c1", cfg.train.loss.c1},
                 {"c2", cfg.train.loss.c2},
                 {"lambda", cfg.train.loss.lambda},
                 {"fd_delta", cfg.train.loss.fd_delta},
                 {"threshold", cfg.train.loss.classification_threshold},
                 {"pointwise_in_seller", cfg.train.loss.pointwise_in_seller},
                 {"revenue_in_buyer", cfg.train.loss.revenue_in_buyer}};
    return j;
}

ExperimentConfig load_experiment(const std::string& config_path,
                                 const std::vector<std::string>& overrides) {
    json j;
    try {
        j = json::parse(read_file(config_path));
    } catch (const json::exception& e) {
        throw config_error("config '" + config_path + "': " + e.what());
    } catch (const io_error& e) {
        throw config_error(e.what());
    }
    for (const auto& o : overrides) apply_override(j, o);
    try {
        return experiment_from_json(j);
    } catch (const json::exception& e) {
        throw config_error("config '" + config_path + "': " + e.what());
    }
}

// ---------------------------------------------------------------------
// data resolution

struct ResolvedData {
    Dataset train;
    Dataset val;
    Dataset eval;
    std::string eval_name;
};

ResolvedData resolve_data(const ExperimentConfig& cfg) {
    ResolvedData rd;
    if (!cfg.dataset.empty()) {
        std::vector<std::string> warnings;
        const Dataset all = load_csv(cfg.dataset, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        const SplitResult parts = split(all, cfg.test_frac, cfg.val_frac, derive_seed(cfg.seed, 11));
        rd.train = parts.train;
        rd.val = parts.val;
        rd.eval = parts.test;
        rd.eval_name = cfg.dataset + " (held-out 20%)";
        return rd;
    }

    if (cfg.scenario == "preset:paper-sim") {
        // 8 train flights row-split for validation; the 2 low-price flights
        // are the evaluation set (whole-flight split).
        ScenarioPresets presets = scenario_presets(cfg.seed);
        const Dataset train_all = simulate_market(presets.train);
        std::tie(rd.train, rd.val) = split_train_val(train_all, cfg.val_frac, derive_seed(cfg.seed, 12));
        rd.eval = simulate_market(presets.test);
        rd.eval_name = "paper-sim-test";
        return rd;
    }

    MarketScenario scenario;
    if (cfg.scenario == "preset:nonmono-sim") {
        scenario = scenario_presets(cfg.seed).nonmonotone;
    } else if (cfg.scenario.rfind("preset:", 0) == 0) {
        throw config_error("unknown preset '" + cfg.scenario + "'");
    } else {
        scenario = scenario_from_json_file(cfg.scenario);
        scenario.seed = cfg.seed;
    }
    const Dataset all = simulate_market(scenario);
    const SplitResult parts = split(all, cfg.test_frac, cfg.val_frac, derive_seed(cfg.seed, 13));
    rd.train = parts.train;
    rd.val = parts.val;
    rd.eval = parts.test;
    rd.eval_name = scenario.name + " (held-out 20%)";
    return rd;
}

// ---------------------------------------------------------------------
// shared pieces

json effective_loss_terms(const LossConfig& loss) {
    json buyer = json::array({"pointwise"});
    json seller = json::array({"revenue"});
    if (loss.revenue_in_buyer) buyer.push_back("revenue");
    if (loss.lambda > 0.0) {
        buyer.push_back("cross_entropy");
        seller.push_back("boundary");
    }
    if (loss.pointwise_in_seller) seller.push_back("pointwise");
    return {{"buyer", buyer}, {"seller", seller}};
}

struct TrainOutcome {
    TrainedNegonets nets;
    std::optional<BaselineSeller> baseline;
    json manifest;
};

double history_sugg_std(const TrainHistory& h) {
    for (const auto& r : h.epochs)
        if (r.epoch == h.best_epoch) return r.suggested_price_std;
    return h.epochs.empty() ? 0.0 : h.epochs.back().suggested_price_std;
}

TrainOutcome do_train(const ExperimentConfig& cfg, bool resume) {
    const ResolvedData data = resolve_data(cfg);
    const json config_json = canonical_config(cfg);
    const std::string config_hash = hash_hex(config_json.dump());
    const std::string out = cfg.output_dir;

    std::optional<Mlp> seller_init, buyer_init;
    if (resume) {
        json prev;
        try {
            prev = json::parse(read_file(out + "/manifest.json"));
        } catch (const std::exception&) {
            throw config_error("resume: no readable manifest in '" + out + "'");
        }
        if (prev.value("config_hash", std::string()) != config_hash)
            throw config_error("resume: config hash mismatch in '" + out +
                               "' (refusing to continue a different experiment)");
        seller_init = load_checkpoint(out + "/seller.ckpt");
        buyer_init = load_checkpoint(out + "/buyer.ckpt");
    }

    TrainOutcome outcome;
    outcome.nets = train_negonets(data.train, data.val, cfg.train,
                                  seller_init ? &*seller_init : nullptr,
                                  buyer_init ? &*buyer_init : nullptr);

    write_file_atomic(out + "/seller.ckpt", checkpoint_to_string(outcome.nets.seller));
    write_file_atomic(out + "/buyer.ckpt", checkpoint_to_string(outcome.nets.buyer));
    write_file_atomic(out + "/history.tsv", render_history(outcome.nets.history));

    if (cfg.with_baseline) {
        ForecastHistory fh;
        Mlp forecaster = train_forecaster(data.train, data.val, cfg.train, &fh);
        outcome.baseline = make_baseline_seller(std::move(forecaster), data.train.contexts());
        write_file_atomic(out + "/forecaster.ckpt",
                          checkpoint_to_string(outcome.baseline->forecaster));
        json bj{{"grid_points", outcome.baseline->price_grid.size()},
                {"intercept", outcome.baseline->intercept},
                {"slope", outcome.baseline->slope},
                {"degenerate_fit", outcome.baseline->degenerate_fit}};
        write_file_atomic(out + "/baseline_seller.json", bj.dump(2) + "\n");
        std::ostringstream fhist;
        fhist << "epoch\ttrain_ce\tval_ce\n";
        char buf[96];
        for (std::size_t i = 0; i < fh.epochs.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu\t%.6f\t%.6f\n", i + 1, fh.epochs[i].first,
                          fh.epochs[i].second);
            fhist << buf;
        }
        write_file_atomic(out + "/forecast_history.tsv", fhist.str());
    }

    const auto& hist = outcome.nets.history;
    json manifest;
    manifest["tool"] = "negonets";
    manifest["version"] = kToolVersion;
    manifest["command"] = "train";
    manifest["config"] = config_json;
    manifest["config_hash"] = config_hash;
    manifest["seed"] = cfg.seed;
    manifest["effective_loss"] = effective_loss_terms(cfg.train.loss);
    manifest["epochs_run"] = hist.epochs.size();
    manifest["best_epoch"] = hist.best_epoch;
    manifest["mode_collapse_flagged"] = hist.mode_collapse_flagged;
    if (!hist.epochs.empty()) {
        const auto& last = hist.epochs.back();
        manifest["final"] = {{"val_buyer_loss", last.val_buyer_loss},
                             {"val_seller_objective", last.val_seller_objective},
                             {"suggested_price_std", history_sugg_std(hist)}};
    }
    if (outcome.baseline)
        manifest["baseline"] = {{"intercept", outcome.baseline->intercept},
                                {"slope", outcome.baseline->slope},
                                {"degenerate_fit", outcome.baseline->degenerate_fit}};
    write_file_atomic(out + "/manifest.json", manifest.dump(2) + "\n");
    outcome.manifest = manifest;
    return outcome;
}

Matrix subsample_contexts(const Dataset& data, std::size_t max_contexts) {
    const std::size_t n = std::min(max_contexts, data.size());
    const std::size_t stride = std::max<std::size_t>(1, data.size() / n);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size() && idx.size() < n; i += stride) idx.push_back(i);
    Matrix m(idx.size(), data.dim());
    for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < data.dim(); ++c) m(r, c) = data.rows[idx[r]].x[c];
    return m;
}

struct EvalOptions {
    std::size_t bins = 20;
    std::size_t grid_points = 21;
    std::size_t mono_contexts = 200;
    double threshold = 0.5;
};

json do_evaluate(const std::string& run_dir, const Dataset& data, const std::string& out_dir,
                 const EvalOptions& opt, const std::string& data_label) {
    const Mlp seller = load_checkpoint(run_dir + "/seller.ckpt");
    const Mlp buyer = load_checkpoint(run_dir + "/buyer.ckpt");
    if (seller.input_dim != data.dim())
        throw config_error("evaluate: seller expects " + std::to_string(seller.input_dim) +
                           " features, dataset has " + std::to_string(data.dim()));

    const Matrix ctx = data.contexts();
    const auto prices = data.prices();
    const auto labels = data.labels();

    Matrix with_price(ctx.rows, ctx.cols + 1);
    for (std::size_t r = 0; r < ctx.rows; ++r) {
        for (std::size_t c = 0; c < ctx.cols; ++c) with_price(r, c) = ctx(r, c);
        with_price(r, ctx.cols) = prices[r];
    }

    const auto nego_fs = suggest_prices(seller, ctx);
    const auto nego_q = forward(buyer, with_price).outputs;
    std::vector<EvalRecord> nego_records(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        nego_records[i] = {prices[i], nego_fs[i], nego_q[i], labels[i]};

    const Matrix mono_ctx = subsample_contexts(data, opt.mono_contexts);
    const auto grid = linspace(0.0, 1.0, opt.grid_points);

    std::vector<MetricsReport> reports;
    reports.push_back(
        evaluate_records("negonets", nego_records, &buyer, mono_ctx, grid, opt.threshold));

    std::optional<BaselineSeller> baseline;
    if (std::filesystem::exists(run_dir + "/forecaster.ckpt")) {
        baseline = load_baseline(run_dir);
        const auto base_fs = baseline_prices(*baseline, ctx);
        const auto base_q = forward(baseline->forecaster, with_price).outputs;
        std::vector<EvalRecord> base_records(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            base_records[i] = {prices[i], base_fs[i], base_q[i], labels[i]};
        reports.push_back(evaluate_records("baseline", base_records, &baseline->forecaster,
                                           mono_ctx, grid, opt.threshold));
        write_file_atomic(out_dir + "/heatmap_baseline.tsv", heatmap_tsv(base_records, opt.bins));
    }

    write_file_atomic(out_dir + "/metrics_report.txt", render_report_keys(reports));
    write_file_atomic(out_dir + "/metrics_table.txt", render_report_table(reports));
    write_file_atomic(out_dir + "/price_hist.tsv", price_histogram_tsv(prices, opt.bins));
    write_file_atomic(out_dir + "/conversion.tsv",
                      conversion_by_bucket_tsv(prices, labels, std::max<std::size_t>(1, opt.bins / 2)));
    write_file_atomic(out_dir + "/heatmap_negonets.tsv", heatmap_tsv(nego_records, opt.bins));

    json metrics;
    for (const auto& r : reports) {
        json jr{{"f1", r.f1},
                {"f1_std", r.f1_std},
                {"m", r.monotonicity.mean},
                {"m_std", r.monotonicity.std},
                {"n", r.n},
                {"purchases", r.purchases}};
        auto put = [&jr](const char* key, const std::optional<double>& v) {
            if (v) jr[key] = *v;
        };
        put("pdr", r.decrease.recall);
        put("pdp", r.decrease.precision);
        put("pdf1", r.decrease.f1);
        put("pir", r.increase.recall);
        put("pip", r.increase.precision);
        put("pif1", r.increase.f1);
        put("rs", r.rs);
        metrics[r.model] = jr;
    }

    json manifest;
    manifest["tool"] = "negonets";
    manifest["version"] = kToolVersion;
    manifest["command"] = "evaluate";
    manifest["run"] = run_dir;
    manifest["data"] = data_label;
    manifest["options"] = {{"bins", opt.bins},
                           {"grid_points", opt.grid_points},
                           {"mono_contexts", opt.mono_contexts},
                           {"threshold", opt.threshold}};
    manifest["metrics"] = metrics;
    manifest["config_hash"] =
        hash_hex(manifest["options"].dump() + data_label + run_dir);
    write_file_atomic(out_dir + "/manifest.json", manifest.dump(2) + "\n");

    std::cout << render_report_table(reports);
    return manifest;
}

void print_dataset_summary(const char* label, const Dataset& data) {
    double conv = 0.0, pmin = 1.0, pmax = 0.0;
    for (const auto& r : data.rows) {
        conv += r.label;
        pmin = std::min(pmin, r.price);
        pmax = std::max(pmax, r.price);
    }
    if (!data.rows.empty()) conv /= static_cast<double>(data.size());
    std::printf("%s: %zu interactions, conversion %.3f, normalized prices [%.3f, %.3f], "
                "raw window [%.1f, %.1f]\n",
                label, data.size(), conv, data.rows.empty() ? 0.0 : pmin,
                data.rows.empty() ? 0.0 : pmax, data.window.min, data.window.max);
}

// ---------------------------------------------------------------------
// subcommands

int cmd_simulate(const std::string& preset, const std::string& scenario_path,
                 const std::string& out_arg, std::uint64_t seed, bool seed_given) {
    const std::string out = resolve_out(out_arg);
    json manifest;
    manifest["tool"] = "negonets";
    manifest["version"] = kToolVersion;
    manifest["command"] = "simulate";
    manifest["seed"] = seed;

    std::vector<std::string> warnings;
    if (preset == "paper-sim") {
        ScenarioPresets presets = scenario_presets(seed);
        const Dataset train = simulate_market(presets.train, &warnings);
        const Dataset test = simulate_market(presets.test, &warnings);
        save_csv(train, out + "/train.csv");
        save_csv(test, out + "/test.csv");
        print_dataset_summary("train", train);
        print_dataset_summary("test", test);
        manifest["preset"] = preset;
        manifest["outputs"] = {{"train.csv", train.size()}, {"test.csv", test.size()}};
    } else if (preset == "nonmono-sim") {
        MarketScenario scenario = scenario_presets(seed).nonmonotone;
        const Dataset data = simulate_market(scenario, &warnings);
        save_csv(data, out + "/data.csv");
        print_dataset_summary("data", data);
        manifest["preset"] = preset;
        manifest["outputs"] = {{"data.csv", data.size()}};
    } else if (!preset.empty()) {
        throw config_error("unknown preset '" + preset + "' (try paper-sim or nonmono-sim)");
    } else {
        MarketScenario scenario = scenario_from_json_file(scenario_path);
        if (seed_given) scenario.seed = seed;
        manifest["seed"] = scenario.seed;
        const Dataset data = simulate_market(scenario, &warnings);
        save_csv(data, out + "/data.csv");
        print_dataset_summary("data", data);
        manifest["scenario"] = scenario_path;
        manifest["outputs"] = {{"data.csv", data.size()}};
    }
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    write_file_atomic(out + "/manifest.json", manifest.dump(2) + "\n");
    return 0;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              bool resume) {
    const ExperimentConfig cfg = load_experiment(config_path, overrides);
    const TrainOutcome outcome = do_train(cfg, resume);
    const auto& hist = outcome.nets.history;
    std::printf("trained %zu epochs (best %d), final val buyer loss %.6f\n", hist.epochs.size(),
                hist.best_epoch, hist.epochs.empty() ? 0.0 : hist.epochs.back().val_buyer_loss);
    if (hist.mode_collapse_flagged)
        std::cerr << "warning: suggested-price std fell below 1e-3 (possible mode collapse)\n";
    std::printf("outputs written to %s\n", cfg.output_dir.c_str());
    return 0;
}

int cmd_evaluate(const std::string& run_dir, const std::string& data_path,
                 const std::string& out_arg, const EvalOptions& opt) {
    std::vector<std::string> warnings;
    const Dataset data = load_csv(data_path, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    if (data.size() == 0) throw usage_error("evaluate: dataset is empty");
    do_evaluate(run_dir, data, resolve_out(out_arg), opt, data_path);
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& param, const std::vector<double>& values, bool parallel) {
    static const std::vector<std::string> kParams = {"lambda", "c1", "c2", "seller_lr",
                                                     "buyer_lr"};
    if (std::find(kParams.begin(), kParams.end(), param) == kParams.end())
        throw usage_error("sweep: unknown param '" + param +
                          "' (expected lambda, c1, c2, seller_lr or buyer_lr)");
    if (values.empty()) throw usage_error("sweep: no values given");

    const ExperimentConfig base = load_experiment(config_path, overrides);

    struct Row {
        double value;
        json train_manifest;
        json eval_manifest;
    };
    std::vector<Row> rows(values.size());

    auto run_one = [&](std::size_t i) {
        ExperimentConfig cfg = base;
        const double v = values[i];
        if (param == "lambda") cfg.train.loss.lambda = v;
        else if (param == "c1") cfg.train.loss.c1 = v;
        else if (param == "c2") cfg.train.loss.c2 = v;
        else if (param == "seller_lr") cfg.train.seller_lr = v;
        else if (param == "buyer_lr") cfg.train.buyer_lr = v;
        char tag[64];
        std::snprintf(tag, sizeof(tag), "%s_%g", param.c_str(), v);
        cfg.output_dir = base.output_dir + "/sweep_" + tag;
        const TrainOutcome outcome = do_train(cfg, false);
        const ResolvedData data = resolve_data(cfg);
        const json eval = do_evaluate(cfg.output_dir, data.eval, cfg.output_dir + "/eval",
                                      EvalOptions{}, data.eval_name);
        rows[i] = Row{v, outcome.manifest, eval};
    };

    if (parallel) {
        std::vector<std::thread> workers;
        workers.reserve(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) workers.emplace_back(run_one, i);
        for (auto& w : workers) w.join();
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) run_one(i);
    }

    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.value < b.value; });

    std::ostringstream out;
    out << param
        << "\tf1\tm\tpdf1\tpif1\trs\tsuggested_price_std\tmode_collapse\n";
    char buf[256];
    for (const auto& row : rows) {
        const json& m = row.eval_manifest["metrics"]["negonets"];
        auto opt_str = [&m](const char* key) {
            if (!m.contains(key)) return std::string("n/a");
            char v[32];
            std::snprintf(v, sizeof(v), "%.6f", m[key].get<double>());
            return std::string(v);
        };
        std::snprintf(buf, sizeof(buf), "%g\t%.6f\t%.6f\t%s\t%s\t%s\t%.6f\t%d\n", row.value,
                      m["f1"].get<double>(), m["m"].get<double>(), opt_str("pdf1").c_str(),
                      opt_str("pif1").c_str(), opt_str("rs").c_str(),
                      row.train_manifest["final"]["suggested_price_std"].get<double>(),
                      row.train_manifest["mode_collapse_flagged"].get<bool>() ? 1 : 0);
        out << buf;
    }
    write_file_atomic(base.output_dir + "/sweep_summary.tsv", out.str());

    json manifest;
    manifest["tool"] = "negonets";
    manifest["version"] = kToolVersion;
    manifest["command"] = "sweep";
    manifest["param"] = param;
    json vals = json::array();
    for (const auto& row : rows) vals.push_back(row.value);
    manifest["values"] = vals;
    manifest["config"] = canonical_config(base);
    manifest["config_hash"] = hash_hex(canonical_config(base).dump() + param + vals.dump());
    manifest["parallel"] = parallel;
    write_file_atomic(base.output_dir + "/manifest.json", manifest.dump(2) + "\n");

    std::cout << out.str();
    return 0;
}

int cmd_presets(const std::string& out_arg) {
    ScenarioPresets presets = scenario_presets();
    auto describe = [](const char* label, const MarketScenario& s) {
        const PriceWindow w = s.effective_window();
        std::printf("%-16s %zu flights, horizon %.0f days, window [%.0f, %.0f], beta_price %.1f\n",
                    label, s.flights.size(), s.horizon, w.min, w.max,
                    s.flights.front().choice.beta_price);
    };
    describe("paper-sim-train", presets.train);
    describe("paper-sim-test", presets.test);
    describe("nonmono-sim", presets.nonmonotone);
    if (!out_arg.empty()) {
        const std::string out = resolve_out(out_arg);
        std::filesystem::create_directories(out);
        scenario_to_json_file(presets.train, out + "/paper-sim-train.json");
        scenario_to_json_file(presets.test, out + "/paper-sim-test.json");
        scenario_to_json_file(presets.nonmonotone, out + "/nonmono-sim.json");
        std::printf("scenario files written to %s\n", out.c_str());
    }
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"NegoNets: negotiating seller/buyer networks for contextual pricing"};
    app.set_version_flag("--version", std::string("negonets ") + kToolVersion);
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate market interaction datasets");
    std::string sim_preset, sim_scenario, sim_out = "sim-out";
    std::uint64_t sim_seed = 7;
    sim->add_option("--preset", sim_preset, "paper-sim or nonmono-sim");
    sim->add_option("--scenario", sim_scenario, "scenario JSON file");
    sim->add_option("--out", sim_out, "output directory");
    sim->add_option("--seed", sim_seed, "simulation seed");

    // train
    auto* train = app.add_subcommand("train", "Train NegoNets (and optionally the baseline)");
    std::string train_config;
    std::vector<std::string> train_sets;
    bool train_resume = false;
    train->add_option("config", train_config, "experiment config JSON")->required();
    train->add_option("--set", train_sets, "override a config key, e.g. --set loss.lambda=10");
    train->add_flag("--resume", train_resume, "continue from checkpoints in output_dir");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Evaluate checkpoints against a dataset");
    std::string eval_run, eval_data, eval_out;
    EvalOptions eval_opt;
    eval->add_option("--run", eval_run, "run directory with checkpoints")->required();
    eval->add_option("--data", eval_data, "dataset CSV")->required();
    eval->add_option("--out", eval_out, "output directory")->required();
    eval->add_option("--bins", eval_opt.bins, "histogram bins");
    eval->add_option("--grid", eval_opt.grid_points, "monotonicity price-grid points");
    eval->add_option("--mono-contexts", eval_opt.mono_contexts, "contexts sampled for M");
    eval->add_option("--threshold", eval_opt.threshold, "classification threshold");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Train/evaluate across one hyperparameter");
    std::string sweep_config, sweep_param;
    std::vector<double> sweep_values;
    std::vector<std::string> sweep_sets;
    bool sweep_parallel = false;
    sweep->add_option("config", sweep_config, "experiment config JSON")->required();
    sweep->add_option("--param", sweep_param, "lambda | c1 | c2 | seller_lr | buyer_lr")->required();
    sweep->add_option("--values", sweep_values, "comma separated values")
        ->required()
        ->delimiter(',');
    sweep->add_option("--set", sweep_sets, "config override key=value");
    sweep->add_flag("--parallel", sweep_parallel, "run sweep values concurrently");

    // presets
    auto* presets = app.add_subcommand("presets", "Describe built-in scenarios");
    std::string presets_out;
    presets->add_option("--out", presets_out, "write scenario JSON files here");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        std::cout << app.version() << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    try {
        if (sim->parsed()) {
            if (sim_preset.empty() == sim_scenario.empty())
                throw usage_error("simulate: pass exactly one of --preset or --scenario");
            return cmd_simulate(sim_preset, sim_scenario, sim_out, sim_seed,
                                sim->count("--seed") > 0);
        }
        if (train->parsed()) return cmd_train(train_config, train_sets, train_resume);
        if (eval->parsed()) return cmd_evaluate(eval_run, eval_data, eval_out, eval_opt);
        if (sweep->parsed())
            return cmd_sweep(sweep_config, sweep_sets, sweep_param, sweep_values, sweep_parallel);
        if (presets->parsed()) return cmd_presets(presets_out);
        std::cerr << app.help();
        return 1;
    } catch (const usage_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ingestion_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const scenario_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace nego::cli
