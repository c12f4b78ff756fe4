#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "sigmmd/dataset.hpp"
#include "sigmmd/errors.hpp"
#include "sigmmd/eval_stats.hpp"
#include "sigmmd/experiments.hpp"
#include "sigmmd/generator.hpp"
#include "sigmmd/heston.hpp"
#include "sigmmd/mmd.hpp"
#include "sigmmd/noise_model.hpp"
#include "sigmmd/paths.hpp"
#include "sigmmd/rng.hpp"
#include "sigmmd/tensor_io.hpp"
#include "sigmmd/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sigmmd;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kDefaultSplit = "2018-09-18";

double now_seconds() {
    const auto t = std::chrono::steady_clock::now().time_since_epoch();
    return std::chrono::duration<double>(t).count();
}

// full-precision, locale-independent float text for CSV artifacts
std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string hex64(std::uint64_t x) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw data_error("cannot create output directory '" + dir + "': " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw data_error("write failed on '" + path + "'");
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

// Reproducibility record: no timestamps or wall-clock, so reruns with the
// same configuration produce byte-identical artifacts.
void write_manifest(const std::string& dir, const std::string& command, const json& config) {
    json manifest;
    manifest["command"] = command;
    manifest["config"] = config;
    manifest["config_hash"] = hex64(fnv1a64(config.dump()));
    manifest["version"] = kVersion;
    write_text(join(dir, "manifest.json"), manifest.dump(2) + "\n");
}

std::size_t find_row(const Dataset& data, const std::string& iso, const char* flag) {
    std::int64_t day = 0;
    try {
        day = parse_iso_date(iso);
    } catch (const data_error& e) {
        throw config_error(std::string(flag) + ": " + e.what());
    }
    const auto it = std::lower_bound(data.day_numbers.begin(), data.day_numbers.end(), day);
    if (it == data.day_numbers.end() || *it != day) {
        throw config_error(std::string(flag) + ": '" + iso + "' is not a date in the dataset");
    }
    return static_cast<std::size_t>(it - data.day_numbers.begin());
}

// the split string is configuration, not data, so reject it as such
std::int64_t check_split(const std::string& split) {
    try {
        return parse_iso_date(split);
    } catch (const data_error& e) {
        throw config_error(std::string("--split: ") + e.what());
    }
}

// first row strictly after the split date; data.size() when none
std::size_t first_row_after(const Dataset& data, const std::string& split) {
    const std::int64_t day = check_split(split);
    const auto it = std::upper_bound(data.day_numbers.begin(), data.day_numbers.end(), day);
    return static_cast<std::size_t>(it - data.day_numbers.begin());
}

std::vector<double> log_diffs(const Dataset& data) {
    std::vector<double> out;
    out.reserve(data.size() - 1);
    for (std::size_t i = 0; i + 1 < data.size(); ++i) {
        out.push_back(data.log_prices[i + 1] - data.log_prices[i]);
    }
    return out;
}

json moments_json(const MomentReport& m) {
    json out;
    out["ann_return"] = m.ann_return;
    out["volatility"] = m.volatility;
    out["skew"] = m.skew ? json(*m.skew) : json(nullptr);
    out["excess_kurtosis"] = m.kurtosis ? json(*m.kurtosis) : json(nullptr);
    return out;
}

json mean_sd_json(const std::vector<double>& xs) {
    if (xs.empty()) return json(nullptr);
    const MeanSd ms = mean_sd(xs);
    return json{{"mean", ms.mean}, {"sd", ms.sd}, {"count", xs.size()}};
}

json test_json(const PermutationTestResult& t) {
    json out;
    out["statistic"] = t.statistic;
    out["p_value"] = t.p_value;
    out["p_value_raw"] = t.p_value_raw;
    out["n_ge"] = t.n_ge;
    out["n_permutations"] = t.n_permutations;
    return out;
}

std::string losses_csv(const std::vector<double>& losses) {
    std::string text = "step,loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i) {
        text += std::to_string(i + 1) + "," + fmt(losses[i]) + "\n";
    }
    return text;
}

json report_json(const TrainReport& report) {
    json out;
    out["steps"] = report.losses.size();
    out["epochs_completed"] = report.epochs_completed;
    out["stopped_early"] = report.stopped_early;
    out["final_loss"] = report.losses.empty() ? json(nullptr) : json(report.losses.back());
    out["best_moving_average"] = std::isfinite(report.best_moving_average)
                                     ? json(report.best_moving_average)
                                     : json(nullptr);
    json changes = json::array();
    for (const LrChange& c : report.lr_changes) {
        changes.push_back({{"step", c.step}, {"learning_rate", c.learning_rate}});
    }
    out["lr_changes"] = changes;
    return out;
}

const char* drop_name(AblationDrop drop) {
    switch (drop) {
        case AblationDrop::none: return "none";
        case AblationDrop::prev_return: return "prev_return";
        case AblationDrop::dt: return "dt";
        case AblationDrop::both: return "both";
    }
    return "none";
}

AblationDrop parse_drop(const std::string& name) {
    if (name == "none") return AblationDrop::none;
    if (name == "prev") return AblationDrop::prev_return;
    if (name == "dt") return AblationDrop::dt;
    if (name == "both") return AblationDrop::both;
    throw config_error("--drop: expected one of none|dt|prev|both, got '" + name + "'");
}

// Options shared by the commands that read a dataset plus a noise model.
struct MarketOptions {
    std::string csv;
    std::string noise_path;
    std::string split = kDefaultSplit;
    std::size_t k = 50;
    std::size_t n = 299;
    int order = 10;
    double alpha = 1.0;
    double length_scale = 0.1;
    std::size_t noise_dim = 4;
    std::size_t batch = 64;
    std::size_t epochs = 100;
    double lr = 1e-3;
    std::size_t stride = 1;
    std::size_t hidden = 64;
    std::size_t lag = 1;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out;
};

void add_market_data_options(CLI::App* cmd, MarketOptions& o) {
    cmd->add_option("--csv", o.csv, "input CSV with date and close columns")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--noise", o.noise_path, "fitted noise model file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--k", o.k, "conditioning length in points (default 50)");
    cmd->add_option("--n", o.n, "total steps per segment (default 299)");
    cmd->add_option("--seed", o.seed, "random seed (default 0)");
    cmd->add_option("--out", o.out, "output directory")->required();
}

void add_train_options(CLI::App* cmd, MarketOptions& o) {
    cmd->add_option("--split", o.split, "last training date, inclusive (default 2018-09-18)");
    cmd->add_option("--order", o.order, "signature truncation order (default 10)");
    cmd->add_option("--alpha", o.alpha, "rational quadratic alpha (default 1.0)");
    cmd->add_option("--length-scale", o.length_scale, "static kernel length scale (default 0.1)");
    cmd->add_option("--noise-dim", o.noise_dim, "noise dimensions d_z (default 4)");
    cmd->add_option("--batch", o.batch, "batch size (default 64)");
    cmd->add_option("--epochs", o.epochs, "training epochs (default 100)");
    cmd->add_option("--lr", o.lr, "learning rate (default 1e-3)");
    cmd->add_option("--stride", o.stride, "anchor stride in trading days (default 1)");
    cmd->add_option("--hidden", o.hidden, "LSTM hidden size (default 64)");
    cmd->add_option("--lag", o.lag, "lead-lag shift in steps (default 1)");
    cmd->add_option("--threads", o.threads, "worker threads, 1 = reproducible (default 1)")
        ->envname("SIGMMD_THREADS");
}

json market_config_json(const MarketOptions& o) {
    json cfg;
    cfg["csv"] = o.csv;
    cfg["noise"] = o.noise_path;
    cfg["split"] = o.split;
    cfg["k"] = o.k;
    cfg["n"] = o.n;
    cfg["order"] = o.order;
    cfg["alpha"] = o.alpha;
    cfg["length_scale"] = o.length_scale;
    cfg["noise_dim"] = o.noise_dim;
    cfg["batch"] = o.batch;
    cfg["epochs"] = o.epochs;
    cfg["lr"] = o.lr;
    cfg["stride"] = o.stride;
    cfg["hidden"] = o.hidden;
    cfg["lag"] = o.lag;
    cfg["seed"] = o.seed;
    cfg["threads"] = o.threads;
    return cfg;
}

TrainConfig market_train_config(const MarketOptions& o, std::size_t ma_order) {
    TrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch;
    cfg.learning_rate = o.lr;
    cfg.sig.order = o.order;
    cfg.sig.static_kernel.kind = StaticKernelConfig::Kind::rational_quadratic;
    cfg.sig.static_kernel.alpha = o.alpha;
    cfg.sig.static_kernel.length_scale = o.length_scale;
    cfg.history_len = o.k;
    cfg.total_steps = o.n;
    cfg.noise_dim = o.noise_dim;
    cfg.ma_order = ma_order;
    cfg.augmentation = Augmentation::lead_lag_time;
    cfg.lag_steps = o.lag;
    cfg.seed = o.seed;
    cfg.threads = o.threads;
    return cfg;
}

// Training span: rows through the split date, noise history cut to match, so
// nothing after the boundary can reach the optimizer.
MarketData training_market_data(const Dataset& train, const NoiseModel& noise,
                                const MarketOptions& o) {
    if (train.size() < 2) throw config_error("training split has fewer than 2 rows");
    const std::size_t train_returns = train.size() - 1;
    if (noise.gaussianized_history.size() < train_returns) {
        throw config_error("noise history is shorter than the training span; refit the noise "
                           "model on this dataset");
    }
    NoiseModel sliced = noise;
    sliced.gaussianized_history.resize(train_returns);
    return MarketData(train, std::move(sliced), o.k, o.n, o.noise_dim, o.stride);
}

struct IngestOptions {
    std::string csv;
    std::string split = kDefaultSplit;
    std::string out;
};

std::string dataset_csv(const Dataset& data) {
    std::string text = "date,close\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        text += data.dates[i] + "," + fmt(data.closes[i]) + "\n";
    }
    return text;
}

int cmd_ingest(const IngestOptions& o) {
    const Dataset data = ingest_csv(o.csv);
    check_split(o.split);
    const SplitDataset split = split_by_date(data, o.split);

    ensure_dir(o.out);
    write_text(join(o.out, "dataset.csv"), dataset_csv(data));
    write_text(join(o.out, "train.csv"), dataset_csv(split.train));
    write_text(join(o.out, "test.csv"), dataset_csv(split.test));

    json report;
    report["rows"] = data.size();
    report["first_date"] = data.dates.front();
    report["last_date"] = data.dates.back();
    report["train_rows"] = split.train.size();
    report["test_rows"] = split.test.size();
    report["split"] = o.split;
    write_text(join(o.out, "ingest_report.json"), report.dump(2) + "\n");

    json cfg;
    cfg["csv"] = o.csv;
    cfg["split"] = o.split;
    write_manifest(o.out, "ingest", cfg);

    std::cout << "ingested " << data.size() << " rows (" << split.train.size() << " train, "
              << split.test.size() << " test) -> " << o.out << "\n";
    return 0;
}

struct FitNoiseOptions {
    std::string csv;
    std::string split = kDefaultSplit;
    std::size_t p = 20;
    bool robust = false;
    double drawdown = 0.30;
    bool average = false;
    std::string out;
};

int cmd_fit_noise(const FitNoiseOptions& o) {
    const Dataset full = ingest_csv(o.csv);
    check_split(o.split);
    const SplitDataset split = split_by_date(full, o.split);
    if (split.train.size() < 2) throw config_error("fit-noise: training split is empty");

    const std::vector<double> train_returns = log_diffs(split.train);
    const std::vector<double> annualized = annualize(train_returns, split.train.dts);
    const Standardized std_returns = standardize(annualized);
    const GaussianizeResult gauss = gaussianize(std_returns.values);

    MAParams ma;
    json robust_info(nullptr);
    if (o.robust) {
        const auto windows = drawdown_windows(split.train.log_prices, o.drawdown);
        std::vector<std::vector<double>> groups;
        json window_rows = json::array();
        for (const auto& [first, last] : windows) {
            // return i spans prices i -> i+1; keep returns wholly inside
            if (last - first < 2) continue;
            groups.emplace_back(gauss.r_w.begin() + static_cast<std::ptrdiff_t>(first),
                                gauss.r_w.begin() + static_cast<std::ptrdiff_t>(last - 1));
            window_rows.push_back(
                {{"first_row", first}, {"last_row", last}, {"returns", last - 1 - first}});
        }
        ma = fit_robust(groups, o.p, o.average);
        robust_info =
            json{{"drawdown", o.drawdown}, {"average", o.average}, {"windows", window_rows}};
    } else {
        ma = fit_ma(gauss.r_w, o.p);
    }

    // the fitted transform applied to the whole series, so later commands can
    // condition on any date; parameters never see data past the split
    const std::vector<double> full_annualized = annualize(log_diffs(full), full.dts);
    NoiseModel model;
    model.lambert = gauss.params;
    model.ma = ma;
    model.gaussianized_history.reserve(full_annualized.size());
    for (double a : full_annualized) {
        model.gaussianized_history.push_back(
            lambert_inverse((a - std_returns.mean) / std_returns.sd, gauss.params));
    }
    model.validate();

    ensure_dir(o.out);
    save_noise_model(join(o.out, "noise.bin"), model);

    json report;
    report["lambert"] = {{"delta", model.lambert.delta},
                         {"mu", model.lambert.mu},
                         {"sigma", model.lambert.sigma}};
    report["standardize"] = {{"mean", std_returns.mean}, {"sd", std_returns.sd}};
    report["igmm"] = {{"iterations", gauss.iterations},
                      {"transformed_kurtosis", gauss.transformed_kurtosis}};
    json betas = json::array();
    for (double b : ma.betas) betas.push_back(b);
    report["ma"] = {{"p", ma.p()}, {"omega", ma.omega}, {"betas", betas}};
    report["robust"] = robust_info;
    report["history_len"] = model.gaussianized_history.size();
    report["train_returns"] = train_returns.size();
    write_text(join(o.out, "noise_report.json"), report.dump(2) + "\n");

    json cfg;
    cfg["csv"] = o.csv;
    cfg["split"] = o.split;
    cfg["p"] = o.p;
    cfg["robust"] = o.robust;
    cfg["drawdown"] = o.drawdown;
    cfg["average"] = o.average;
    write_manifest(o.out, "fit-noise", cfg);

    double beta_sum = 0.0;
    for (double b : ma.betas) beta_sum += b;
    std::cout << "fitted noise model on " << train_returns.size() << " training returns: delta="
              << model.lambert.delta << " omega=" << ma.omega << " sum(beta)=" << beta_sum
              << " -> " << join(o.out, "noise.bin") << "\n";
    return 0;
}

int cmd_train(const MarketOptions& o) {
    const Dataset full = ingest_csv(o.csv);
    check_split(o.split);
    const SplitDataset split = split_by_date(full, o.split);
    const NoiseModel noise = load_noise_model(o.noise_path);
    const MarketData data = training_market_data(split.train, noise, o);

    TrainConfig cfg = market_train_config(o, noise.ma.p());
    cfg.validate();
    const GeneratorParams init =
        GeneratorParams::init(o.hidden, o.noise_dim, Rng::stream(o.seed, 0).next_u64());

    const TrainResult result = train(cfg, data, init);

    ensure_dir(o.out);
    save_generator(join(o.out, "generator.bin"), result.params);
    write_text(join(o.out, "losses.csv"), losses_csv(result.report.losses));
    json report = report_json(result.report);
    report["anchors"] = data.anchors();
    write_text(join(o.out, "train_report.json"), report.dump(2) + "\n");
    write_manifest(o.out, "train", market_config_json(o));

    std::cout << "trained " << result.report.epochs_completed << " epochs, "
              << result.report.losses.size() << " steps over " << data.anchors() << " anchors"
              << (result.report.stopped_early ? " (stopped early)" : "") << " in "
              << result.report.wall_seconds << " s -> " << join(o.out, "generator.bin") << "\n";
    if (!result.report.losses.empty()) {
        std::cout << "first loss " << result.report.losses.front() << ", last loss "
                  << result.report.losses.back() << "\n";
    }
    return 0;
}

struct GenerateOptions {
    MarketOptions market;
    std::string model;
    std::string anchor_date;
    std::size_t count = 128;
};

int cmd_generate(const GenerateOptions& o) {
    const Dataset full = ingest_csv(o.market.csv);
    const NoiseModel noise = load_noise_model(o.market.noise_path);
    const GeneratorParams params = load_generator(o.model);

    const MarketData data(full, noise, o.market.k, o.market.n, params.noise_dim, 1);
    std::size_t anchor = data.anchors() - 1;
    if (!o.anchor_date.empty()) {
        const std::size_t row = find_row(full, o.anchor_date, "--anchor-date");
        const std::size_t p = noise.ma.p();
        if (row < p) {
            throw config_error("--anchor-date: needs " + std::to_string(p) +
                               " trading days of history before it");
        }
        anchor = row - p;
        if (anchor >= data.anchors()) {
            throw config_error("--anchor-date: fewer than n rows remain after it");
        }
    }
    const std::size_t a = data.anchor_row(anchor);
    const std::vector<double> history(
        full.log_prices.begin() + static_cast<std::ptrdiff_t>(a),
        full.log_prices.begin() + static_cast<std::ptrdiff_t>(a + o.market.k));

    Rng seeds = Rng::stream(o.market.seed, 0);
    std::string csv = "path,step,time,log_price\n";
    for (std::size_t i = 0; i < o.count; ++i) {
        const TrainItem item = data.item(anchor, seeds.next_u64());
        const LogPath path = generate(item.plan, params, history);
        for (std::size_t s = 0; s < path.size(); ++s) {
            csv += std::to_string(i) + "," + std::to_string(s) + "," + fmt(path.times[s]) + "," +
                   fmt(path.values[s]) + "\n";
        }
    }

    ensure_dir(o.market.out);
    write_text(join(o.market.out, "generated.csv"), csv);
    const LogPath ref = data.reference_path(anchor);
    std::string ref_csv = "step,time,log_price\n";
    for (std::size_t s = 0; s < ref.size(); ++s) {
        ref_csv += std::to_string(s) + "," + fmt(ref.times[s]) + "," + fmt(ref.values[s]) + "\n";
    }
    write_text(join(o.market.out, "reference.csv"), ref_csv);

    json report;
    report["anchor_row"] = a;
    report["anchor_date"] = full.dates[a];
    report["paths"] = o.count;
    report["points_per_path"] = o.market.n + 1 - o.market.k;
    write_text(join(o.market.out, "generate_report.json"), report.dump(2) + "\n");

    json cfg;
    cfg["csv"] = o.market.csv;
    cfg["noise"] = o.market.noise_path;
    cfg["model"] = o.model;
    cfg["k"] = o.market.k;
    cfg["n"] = o.market.n;
    cfg["anchor_date"] = o.anchor_date;
    cfg["count"] = o.count;
    cfg["seed"] = o.market.seed;
    write_manifest(o.market.out, "generate", cfg);

    std::cout << "generated " << o.count << " paths of " << (o.market.n + 1 - o.market.k)
              << " points anchored at " << full.dates[a] << " -> "
              << join(o.market.out, "generated.csv") << "\n";
    return 0;
}

enum class Span { train, test, full };

Span parse_span(const std::string& name) {
    if (name == "train") return Span::train;
    if (name == "test") return Span::test;
    if (name == "full") return Span::full;
    throw config_error("--span: expected one of train|test|full, got '" + name + "'");
}

// anchors whose whole segment lies inside the requested span
std::vector<std::size_t> span_anchors(const MarketData& data, const Dataset& full,
                                      const std::string& split, Span span, std::size_t n,
                                      std::size_t max_count) {
    const std::size_t boundary = first_row_after(full, split);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < data.anchors(); ++i) {
        const std::size_t row = data.anchor_row(i);
        const bool keep = span == Span::full ||
                          (span == Span::train ? row + n < boundary : row >= boundary);
        if (keep) out.push_back(i);
        if (max_count > 0 && out.size() == max_count) break;
    }
    if (out.empty()) throw config_error("no full segment fits the requested span");
    return out;
}

struct EvaluateOptions {
    MarketOptions market;
    std::string model;
    std::size_t count = 128;
    std::string span = "test";
    std::size_t acf_lags = 50;
    std::size_t lev_lags = 20;
    std::size_t gl_points = 20;
};

std::string curve_csv(const AggregatedCurve& ref, const AggregatedCurve& gen) {
    std::string text = "lag,reference_mean,reference_mad,generated_mean,generated_mad\n";
    for (std::size_t i = 0; i < ref.mean.size(); ++i) {
        text += std::to_string(i + 1) + "," + fmt(ref.mean[i]) + "," + fmt(ref.mad[i]) + "," +
                fmt(gen.mean[i]) + "," + fmt(gen.mad[i]) + "\n";
    }
    return text;
}

struct Battery {
    std::vector<double> ann, vol, skew, kurt;
    std::vector<std::vector<double>> acf_linear, acf_squared, leverage;
    std::vector<double> pooled_returns;
    std::vector<LogPath> paths;
};

void battery_add(Battery& b, const LogPath& path, std::size_t acf_lags, std::size_t lev_lags) {
    const std::vector<double> r = log_returns(path).returns;
    const MomentReport m = moments(r);
    b.ann.push_back(m.ann_return);
    b.vol.push_back(m.volatility);
    if (m.skew) b.skew.push_back(*m.skew);
    if (m.kurtosis) b.kurt.push_back(*m.kurtosis);
    const std::size_t al = std::min(acf_lags, r.size() - 2);
    const std::size_t ll = std::min(lev_lags, r.size() - 2);
    b.acf_linear.push_back(acf(r, al, false));
    b.acf_squared.push_back(acf(r, al, true));
    b.leverage.push_back(leverage_corr(r, ll));
    b.pooled_returns.insert(b.pooled_returns.end(), r.begin(), r.end());
    b.paths.push_back(path);
}

json battery_json(const Battery& b) {
    json out;
    out["ann_return"] = mean_sd_json(b.ann);
    out["volatility"] = mean_sd_json(b.vol);
    out["skew"] = mean_sd_json(b.skew);
    out["excess_kurtosis"] = mean_sd_json(b.kurt);
    out["segments"] = b.paths.size();
    return out;
}

int cmd_evaluate(const EvaluateOptions& o) {
    const Dataset full = ingest_csv(o.market.csv);
    const NoiseModel noise = load_noise_model(o.market.noise_path);
    const GeneratorParams params = load_generator(o.model);
    const Span span = parse_span(o.span);

    const std::size_t stride = o.market.stride > 0 ? o.market.stride : o.market.n - o.market.k;
    const MarketData data(full, noise, o.market.k, o.market.n, params.noise_dim, stride);
    const std::vector<std::size_t> anchors =
        span_anchors(data, full, o.market.split, span, o.market.n, 0);

    Battery ref;
    for (std::size_t idx : anchors) {
        battery_add(ref, data.reference_path(idx), o.acf_lags, o.lev_lags);
    }

    Battery gen;
    Rng seeds = Rng::stream(o.market.seed, 0);
    for (std::size_t i = 0; i < o.count; ++i) {
        const std::size_t idx = anchors[i % anchors.size()];
        const std::size_t a = data.anchor_row(idx);
        const TrainItem item = data.item(idx, seeds.next_u64());
        const std::vector<double> history(
            full.log_prices.begin() + static_cast<std::ptrdiff_t>(a),
            full.log_prices.begin() + static_cast<std::ptrdiff_t>(a + o.market.k));
        battery_add(gen, generate(item.plan, params, history), o.acf_lags, o.lev_lags);
    }

    ensure_dir(o.market.out);
    write_text(join(o.market.out, "acf_returns.csv"),
               curve_csv(aggregate_curves(ref.acf_linear), aggregate_curves(gen.acf_linear)));
    write_text(join(o.market.out, "acf_squared.csv"),
               curve_csv(aggregate_curves(ref.acf_squared), aggregate_curves(gen.acf_squared)));
    write_text(join(o.market.out, "leverage.csv"),
               curve_csv(aggregate_curves(ref.leverage), aggregate_curves(gen.leverage)));

    // one threshold grid for both sides, anchored to the reference tails
    const std::vector<double> grid = gain_loss_grid(ref.pooled_returns, o.gl_points);
    const auto ref_gl = gain_loss_ratio(ref.pooled_returns, grid);
    const auto gen_gl = gain_loss_ratio(gen.pooled_returns, grid);
    std::string gl = "threshold,reference_ratio,reference_n,reference_low_confidence,"
                     "generated_ratio,generated_n,generated_low_confidence\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        gl += fmt(grid[i]) + ",";
        gl += (ref_gl[i].ratio ? fmt(*ref_gl[i].ratio) : std::string()) + ",";
        gl += std::to_string(ref_gl[i].exceedances) + ",";
        gl += (ref_gl[i].low_confidence ? "1" : "0") + std::string(",");
        gl += (gen_gl[i].ratio ? fmt(*gen_gl[i].ratio) : std::string()) + ",";
        gl += std::to_string(gen_gl[i].exceedances) + ",";
        gl += (gen_gl[i].low_confidence ? "1" : "0") + std::string("\n");
    }
    write_text(join(o.market.out, "gain_loss.csv"), gl);

    std::string endpoints = "side,price_endpoint\n";
    for (double e : endpoint_summary(ref.paths)) endpoints += "reference," + fmt(e) + "\n";
    for (double e : endpoint_summary(gen.paths)) endpoints += "generated," + fmt(e) + "\n";
    write_text(join(o.market.out, "endpoints.csv"), endpoints);

    json report;
    report["span"] = o.span;
    report["data_moments"] = moments_json(moments(ref.pooled_returns));
    report["reference"] = battery_json(ref);
    report["generated"] = battery_json(gen);
    write_text(join(o.market.out, "eval_report.json"), report.dump(2) + "\n");

    json cfg = market_config_json(o.market);
    cfg["model"] = o.model;
    cfg["count"] = o.count;
    cfg["span"] = o.span;
    cfg["acf_lags"] = o.acf_lags;
    cfg["lev_lags"] = o.lev_lags;
    cfg["gl_points"] = o.gl_points;
    write_manifest(o.market.out, "evaluate", cfg);

    std::cout << "evaluated " << gen.paths.size() << " generated paths against "
              << ref.paths.size() << " " << o.span << " segments -> "
              << join(o.market.out, "eval_report.json") << "\n";
    return 0;
}

struct MmdTestOptions {
    MarketOptions market;
    std::string model;
    std::size_t permutations = 10000;
    std::size_t max_segments = 0;
    std::string span = "test";
};

int cmd_mmd_test(const MmdTestOptions& o) {
    const Dataset full = ingest_csv(o.market.csv);
    const NoiseModel noise = load_noise_model(o.market.noise_path);
    const GeneratorParams params = load_generator(o.model);
    const Span span = parse_span(o.span);

    // disjoint segments by default, so the permutation null is exchangeable
    const std::size_t stride = o.market.stride > 0 ? o.market.stride : o.market.n;
    const MarketData data(full, noise, o.market.k, o.market.n, params.noise_dim, stride);
    const std::vector<std::size_t> anchors =
        span_anchors(data, full, o.market.split, span, o.market.n, o.max_segments);
    if (anchors.size() < 2) throw config_error("mmd-test: needs at least 2 segments");

    std::vector<Matrix> gen_mats, ref_mats;
    Rng seeds = Rng::stream(o.market.seed, 0);
    for (std::size_t idx : anchors) {
        const std::size_t a = data.anchor_row(idx);
        ref_mats.push_back(
            lead_lag_time_augment(data.reference_path(idx), o.market.lag).channels());
        const TrainItem item = data.item(idx, seeds.next_u64());
        const std::vector<double> history(
            full.log_prices.begin() + static_cast<std::ptrdiff_t>(a),
            full.log_prices.begin() + static_cast<std::ptrdiff_t>(a + o.market.k));
        const LogPath path = generate(item.plan, params, history);
        gen_mats.push_back(lead_lag_time_augment(path, o.market.lag).channels());
    }

    SigKernelConfig sig;
    sig.order = o.market.order;
    sig.static_kernel.kind = StaticKernelConfig::Kind::rational_quadratic;
    sig.static_kernel.alpha = o.market.alpha;
    sig.static_kernel.length_scale = o.market.length_scale;
    const double t0 = now_seconds();
    const PermutationTestResult test =
        permutation_test(gen_mats, ref_mats, sig, o.permutations,
                         Rng::stream(o.market.seed, 1).next_u64(), o.market.threads);
    const double elapsed = now_seconds() - t0;

    ensure_dir(o.market.out);
    json report = test_json(test);
    report["segments"] = anchors.size();
    report["span"] = o.span;
    report["stride"] = stride;
    write_text(join(o.market.out, "mmd_report.json"), report.dump(2) + "\n");

    json cfg = market_config_json(o.market);
    cfg["model"] = o.model;
    cfg["permutations"] = o.permutations;
    cfg["max_segments"] = o.max_segments;
    cfg["span"] = o.span;
    write_manifest(o.market.out, "mmd-test", cfg);

    std::cout << "mmd^2 = " << test.statistic << ", p = " << test.p_value << " ("
              << anchors.size() << " segments per side, " << o.permutations << " permutations, "
              << elapsed << " s)\n";
    return 0;
}

struct HestonOptions {
    HestonExperimentConfig cfg;
    std::string arm = "both";
    std::string out;
};

json heston_arm_json(const HestonArmResult& arm) {
    json out;
    out["test"] = test_json(arm.test);
    out["train"] = report_json(arm.report);
    return out;
}

int cmd_heston(const HestonOptions& o) {
    o.cfg.validate();
    if (o.arm != "both" && o.arm != "sv" && o.arm != "iid") {
        throw config_error("--arm: expected one of both|sv|iid, got '" + o.arm + "'");
    }
    ensure_dir(o.out);

    json report;
    report["sv"] = nullptr;
    report["iid"] = nullptr;
    const double t0 = now_seconds();
    if (o.arm == "both" || o.arm == "sv") {
        const HestonArmResult sv = run_heston_arm(o.cfg, HestonNoiseKind::stochastic_volatility);
        report["sv"] = heston_arm_json(sv);
        write_text(join(o.out, "losses_sv.csv"), losses_csv(sv.report.losses));
        std::cout << "stochastic-volatility noise: mmd^2 = " << sv.test.statistic
                  << ", p = " << sv.test.p_value << "\n";
    }
    if (o.arm == "both" || o.arm == "iid") {
        const HestonArmResult iid = run_heston_arm(o.cfg, HestonNoiseKind::iid);
        report["iid"] = heston_arm_json(iid);
        write_text(join(o.out, "losses_iid.csv"), losses_csv(iid.report.losses));
        std::cout << "iid noise: mmd^2 = " << iid.test.statistic << ", p = " << iid.test.p_value
                  << "\n";
    }
    write_text(join(o.out, "heston_report.json"), report.dump(2) + "\n");

    json cfg;
    cfg["mu"] = o.cfg.heston.mu;
    cfg["kappa"] = o.cfg.heston.kappa;
    cfg["theta"] = o.cfg.heston.theta;
    cfg["sigma"] = o.cfg.heston.sigma;
    cfg["rho"] = o.cfg.heston.rho;
    cfg["v0"] = o.cfg.heston.v0;
    cfg["train_paths"] = o.cfg.train_paths;
    cfg["test_paths"] = o.cfg.test_paths;
    cfg["seq_steps"] = o.cfg.seq_steps;
    cfg["dt"] = o.cfg.dt;
    cfg["hidden"] = o.cfg.hidden;
    cfg["noise_dim"] = o.cfg.noise_dim;
    cfg["batch"] = o.cfg.batch_size;
    cfg["epochs"] = o.cfg.epochs;
    cfg["lr"] = o.cfg.learning_rate;
    cfg["order"] = o.cfg.sig_order;
    cfg["permutations"] = o.cfg.n_permutations;
    cfg["seed"] = o.cfg.seed;
    cfg["threads"] = o.cfg.threads;
    cfg["arm"] = o.arm;
    write_manifest(o.out, "heston", cfg);

    std::cout << "done in " << (now_seconds() - t0) << " s -> "
              << join(o.out, "heston_report.json") << "\n";
    return 0;
}

struct AblateOptions {
    MarketOptions market;
    std::string drop = "none";
    bool all = false;
    std::size_t eval_window = 50;
};

int cmd_ablate(const AblateOptions& o) {
    const Dataset full = ingest_csv(o.market.csv);
    check_split(o.market.split);
    const SplitDataset split = split_by_date(full, o.market.split);
    const NoiseModel noise = load_noise_model(o.market.noise_path);
    const MarketData data = training_market_data(split.train, noise, o.market);

    TrainConfig base = market_train_config(o.market, noise.ma.p());
    base.validate();
    const GeneratorParams init = GeneratorParams::init(
        o.market.hidden, o.market.noise_dim, Rng::stream(o.market.seed, 0).next_u64());

    ensure_dir(o.market.out);
    json report;
    if (o.all) {
        const std::vector<AblationOutcome> rows = run_ablation(base, data, init, o.eval_window);
        json variants = json::array();
        for (const AblationOutcome& row : rows) {
            json v = report_json(row.report);
            v["drop"] = drop_name(row.drop);
            v["final_loss_ma"] = row.final_loss_ma;
            variants.push_back(v);
            write_text(join(o.market.out, std::string("losses_") + drop_name(row.drop) + ".csv"),
                       losses_csv(row.report.losses));
            std::cout << "drop " << drop_name(row.drop) << ": trailing loss " << row.final_loss_ma
                      << "\n";
        }
        report["variants"] = variants;
        report["ordering"] = {{"base_lt_no_dt", rows[0].final_loss_ma < rows[1].final_loss_ma},
                              {"no_dt_lt_no_r", rows[1].final_loss_ma < rows[2].final_loss_ma},
                              {"no_r_lt_both", rows[2].final_loss_ma < rows[3].final_loss_ma}};
    } else {
        const TrainConfig cfg = ablation_variant(base, parse_drop(o.drop));
        const TrainResult result = train(cfg, data, init);
        report = report_json(result.report);
        report["drop"] = o.drop;
        write_text(join(o.market.out, "losses.csv"), losses_csv(result.report.losses));
        save_generator(join(o.market.out, "generator.bin"), result.params);
        std::cout << "drop " << o.drop << ": " << result.report.losses.size()
                  << " steps, last loss "
                  << (result.report.losses.empty() ? 0.0 : result.report.losses.back()) << " in "
                  << result.report.wall_seconds << " s\n";
    }
    write_text(join(o.market.out, "ablation_report.json"), report.dump(2) + "\n");

    json cfg = market_config_json(o.market);
    cfg["drop"] = o.drop;
    cfg["all"] = o.all;
    cfg["eval_window"] = o.eval_window;
    write_manifest(o.market.out, "ablate", cfg);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"generative models of financial time series trained by signature-kernel MMD"};
    app.require_subcommand(1);
    int code = 0;

    IngestOptions ingest_opts;
    CLI::App* ingest = app.add_subcommand("ingest", "validate a CSV and write the split datasets");
    ingest->add_option("--csv", ingest_opts.csv, "input CSV with date and close columns")
        ->required()
        ->check(CLI::ExistingFile);
    ingest->add_option("--split", ingest_opts.split,
                       "last training date, inclusive (default 2018-09-18)");
    ingest->add_option("--out", ingest_opts.out, "output directory")->required();
    ingest->callback([&] { code = cmd_ingest(ingest_opts); });

    FitNoiseOptions fit_opts;
    CLI::App* fit = app.add_subcommand("fit-noise", "fit the Lambert-W + MA(p) noise model");
    fit->add_option("--csv", fit_opts.csv, "input CSV with date and close columns")
        ->required()
        ->check(CLI::ExistingFile);
    fit->add_option("--split", fit_opts.split,
                    "last training date, inclusive (default 2018-09-18)");
    fit->add_option("--p", fit_opts.p, "MA order, lags of squared noise (default 20)");
    fit->add_flag("--robust", fit_opts.robust, "fit only inside drawdown windows");
    fit->add_option("--drawdown", fit_opts.drawdown,
                    "drawdown threshold for --robust (default 0.30)");
    fit->add_flag("--average", fit_opts.average,
                  "average per-window fits instead of one joint fit");
    fit->add_option("--out", fit_opts.out, "output directory")->required();
    fit->callback([&] { code = cmd_fit_noise(fit_opts); });

    MarketOptions train_opts;
    CLI::App* train_cmd = app.add_subcommand("train", "train a generator on the training split");
    add_market_data_options(train_cmd, train_opts);
    add_train_options(train_cmd, train_opts);
    train_cmd->callback([&] { code = cmd_train(train_opts); });

    GenerateOptions gen_opts;
    CLI::App* gen = app.add_subcommand("generate", "sample paths from a trained generator");
    add_market_data_options(gen, gen_opts.market);
    gen->add_option("--model", gen_opts.model, "trained generator file")
        ->required()
        ->check(CLI::ExistingFile);
    gen->add_option("--anchor-date", gen_opts.anchor_date,
                    "conditioning date (default: latest eligible)");
    gen->add_option("--count", gen_opts.count, "number of paths (default 128)");
    gen->callback([&] { code = cmd_generate(gen_opts); });

    EvaluateOptions eval_opts;
    eval_opts.market.stride = 0;
    CLI::App* eval =
        app.add_subcommand("evaluate", "stylized-facts battery: generated vs real segments");
    add_market_data_options(eval, eval_opts.market);
    eval->add_option("--model", eval_opts.model, "trained generator file")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--split", eval_opts.market.split,
                     "last training date, inclusive (default 2018-09-18)");
    eval->add_option("--span", eval_opts.span, "segment span: train|test|full (default test)");
    eval->add_option("--count", eval_opts.count, "number of generated paths (default 128)");
    eval->add_option("--stride", eval_opts.market.stride,
                     "segment stride (default 0 = scored length n-k)");
    eval->add_option("--acf-lags", eval_opts.acf_lags, "autocorrelation lags (default 50)");
    eval->add_option("--lev-lags", eval_opts.lev_lags,
                     "leverage-correlation lags (default 20)");
    eval->add_option("--gl-points", eval_opts.gl_points,
                     "gain/loss threshold grid size (default 20)");
    eval->callback([&] { code = cmd_evaluate(eval_opts); });

    MmdTestOptions mmd_opts;
    mmd_opts.market.stride = 0;
    CLI::App* mmd =
        app.add_subcommand("mmd-test", "permutation two-sample test: generated vs held-out");
    add_market_data_options(mmd, mmd_opts.market);
    mmd->add_option("--model", mmd_opts.model, "trained generator file")
        ->required()
        ->check(CLI::ExistingFile);
    mmd->add_option("--split", mmd_opts.market.split,
                    "last training date, inclusive (default 2018-09-18)");
    mmd->add_option("--span", mmd_opts.span, "segment span: train|test|full (default test)");
    mmd->add_option("--permutations", mmd_opts.permutations,
                    "number of permutations (default 10000)");
    mmd->add_option("--max-segments", mmd_opts.max_segments,
                    "cap on segments, 0 = all (default 0)");
    mmd->add_option("--stride", mmd_opts.market.stride,
                    "segment stride (default 0 = disjoint, n)");
    mmd->add_option("--order", mmd_opts.market.order, "signature truncation order (default 10)");
    mmd->add_option("--alpha", mmd_opts.market.alpha, "rational quadratic alpha (default 1.0)");
    mmd->add_option("--length-scale", mmd_opts.market.length_scale,
                    "static kernel length scale (default 0.1)");
    mmd->add_option("--lag", mmd_opts.market.lag, "lead-lag shift in steps (default 1)");
    mmd->add_option("--threads", mmd_opts.market.threads,
                    "worker threads, 1 = reproducible (default 1)")
        ->envname("SIGMMD_THREADS");
    mmd->callback([&] { code = cmd_mmd_test(mmd_opts); });

    HestonOptions heston_opts;
    CLI::App* heston = app.add_subcommand(
        "heston", "validation experiment on simulated stochastic-volatility data");
    heston->add_option("--train-paths", heston_opts.cfg.train_paths,
                       "training paths (default 1000)");
    heston->add_option("--test-paths", heston_opts.cfg.test_paths,
                       "held-out and generated paths per side (default 128)");
    heston->add_option("--seq-steps", heston_opts.cfg.seq_steps, "steps per path (default 250)");
    heston->add_option("--dt", heston_opts.cfg.dt, "time step in years (default 1/252)");
    heston->add_option("--hidden", heston_opts.cfg.hidden, "LSTM hidden size (default 16)");
    heston->add_option("--noise-dim", heston_opts.cfg.noise_dim,
                       "noise dimensions d_z (default 2)");
    heston->add_option("--batch", heston_opts.cfg.batch_size, "batch size (default 8)");
    heston->add_option("--epochs", heston_opts.cfg.epochs, "training epochs (default 4)");
    heston->add_option("--lr", heston_opts.cfg.learning_rate, "learning rate (default 0.005)");
    heston->add_option("--order", heston_opts.cfg.sig_order,
                       "signature truncation order (default 5)");
    heston->add_option("--permutations", heston_opts.cfg.n_permutations,
                       "number of permutations (default 1000)");
    heston->add_option("--mu", heston_opts.cfg.heston.mu, "drift (default 0.2)");
    heston->add_option("--kappa", heston_opts.cfg.heston.kappa,
                       "mean-reversion speed (default 1.0)");
    heston->add_option("--theta", heston_opts.cfg.heston.theta, "long-run variance (default 0.25)");
    heston->add_option("--sigma", heston_opts.cfg.heston.sigma, "vol of vol (default 0.7)");
    heston->add_option("--rho", heston_opts.cfg.heston.rho,
                       "price/variance correlation (default -0.7)");
    heston->add_option("--v0", heston_opts.cfg.heston.v0, "initial variance (default 0.09)");
    heston->add_option("--seed", heston_opts.cfg.seed, "random seed (default 1)");
    heston->add_option("--threads", heston_opts.cfg.threads,
                       "worker threads, 1 = reproducible (default 0 = serial)")
        ->envname("SIGMMD_THREADS");
    heston->add_option("--arm", heston_opts.arm, "which noise arm to run: both|sv|iid");
    heston->add_option("--out", heston_opts.out, "output directory")->required();
    heston->callback([&] {
        heston_opts.cfg.gen_paths = heston_opts.cfg.test_paths;
        code = cmd_heston(heston_opts);
    });

    AblateOptions ablate_opts;
    CLI::App* ablate = app.add_subcommand("ablate", "train with generator inputs masked");
    add_market_data_options(ablate, ablate_opts.market);
    add_train_options(ablate, ablate_opts.market);
    ablate->add_option("--drop", ablate_opts.drop, "input to mask: none|dt|prev|both");
    ablate->add_flag("--all", ablate_opts.all, "train all four variants and report the ordering");
    ablate->add_option("--eval-window", ablate_opts.eval_window,
                       "trailing losses averaged per variant (default 50)");
    ablate->callback([&] { code = cmd_ablate(ablate_opts); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int r = app.exit(e);
        return r == 0 ? 0 : 2;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const invalid_input& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_fault& e) {
        std::cerr << "numeric fault: " << e.what() << "\n";
        return 3;
    } catch (const data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return code;
}
