#include "sigmmd/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "sigmmd/errors.hpp"
#include "sigmmd/paths.hpp"
#include "sigmmd/rng.hpp"

namespace sigmmd {

MarketData::MarketData(const Dataset& data, NoiseModel noise, std::size_t history_len,
                       std::size_t total_steps, std::size_t noise_dim, std::size_t stride)
    : noise_(std::move(noise)), k_(history_len), n_(total_steps), dz_(noise_dim) {
    data.validate();
    noise_.validate();
    if (k_ == 0 || n_ <= k_) throw config_error("market data: needs k >= 1 and n > k");
    if (dz_ == 0) throw config_error("market data: noise dimension must be >= 1");
    if (stride == 0) throw config_error("market data: stride must be >= 1");
    if (data.size() < 2) throw config_error("market data: series too short");

    returns_.reserve(data.size() - 1);
    for (std::size_t i = 0; i + 1 < data.size(); ++i) {
        returns_.push_back(data.log_prices[i + 1] - data.log_prices[i]);
    }
    dts_ = data.dts;
    const std::size_t p = noise_.ma.p();
    if (noise_.gaussianized_history.size() != returns_.size()) {
        throw config_error("market data: noise history is not aligned to the return series");
    }

    // anchor row a needs p lag returns before t_0 and n rows after it
    for (std::size_t a = p; a + n_ < data.size(); a += stride) anchor_rows_.push_back(a);
    if (anchor_rows_.empty()) {
        throw config_error("market data: no anchor leaves p lags before and n steps after");
    }
}

TrainItem MarketData::item(std::size_t anchor, std::uint64_t noise_seed) const {
    const std::size_t a = anchor_rows_.at(anchor);
    TrainItem out;
    out.plan.history_len = k_;
    out.plan.total_steps = n_;
    out.plan.history_returns.assign(returns_.begin() + a, returns_.begin() + a + (k_ - 1));
    out.plan.dts.assign(dts_.begin() + a, dts_.begin() + a + n_);
    out.plan.noise = sample_noise(noise_, a - 1, n_, dz_, noise_seed);
    out.reference_returns.assign(returns_.begin() + a, returns_.begin() + a + n_);
    return out;
}

LogPath MarketData::reference_path(std::size_t anchor) const {
    return truncated_reference(item(anchor, 0));
}

LogPath heston_row_truncated(const Matrix& log_prices, std::size_t row, double dt) {
    if (row >= log_prices.rows()) throw invalid_input("heston rows: row out of range");
    if (log_prices.cols() < 3) throw invalid_input("heston rows: need at least 3 points per row");
    const std::size_t n = log_prices.cols() - 1;
    LogPath out;
    out.times.resize(n);
    out.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        out.times[j] = static_cast<double>(j) * dt;
        out.values[j] = log_prices(row, j + 1) - log_prices(row, 1);
    }
    out.validate();
    return out;
}

HestonData::HestonData(const HestonParams& params, HestonNoiseKind kind, std::size_t n_paths,
                       std::size_t n_steps, double dt, std::size_t noise_dim, std::uint64_t seed,
                       int threads)
    : n_steps_(n_steps), dz_(noise_dim), dt_(dt), threads_(threads) {
    batch_ = heston_simulate(params, n_steps, dt, n_paths, seed, threads);
    noise_params_ = kind == HestonNoiseKind::iid ? params.iid_surrogate() : params;
    noise_params_.mu = 0.0;
}

TrainItem HestonData::item(std::size_t anchor, std::uint64_t noise_seed) const {
    if (anchor >= batch_.log_prices.rows()) throw invalid_input("heston data: anchor out of range");
    TrainItem out;
    out.plan.history_len = 1;
    out.plan.total_steps = n_steps_;
    out.plan.dts.assign(n_steps_, dt_);
    out.plan.noise = heston_noise(noise_params_, n_steps_, dt_, 1, dz_, noise_seed, threads_)[0];
    out.reference_returns.resize(n_steps_);
    for (std::size_t i = 0; i < n_steps_; ++i) {
        out.reference_returns[i] = batch_.log_prices(anchor, i + 1) - batch_.log_prices(anchor, i);
    }
    return out;
}

TrainConfig HestonExperimentConfig::train_config() const {
    TrainConfig out;
    out.epochs = epochs;
    out.batch_size = batch_size;
    out.learning_rate = learning_rate;
    out.sig.order = sig_order;
    out.sig.static_kernel.kind = StaticKernelConfig::Kind::rational_quadratic;
    out.sig.static_kernel.alpha = 1.0;
    out.sig.static_kernel.length_scale = 0.1;
    out.history_len = 1;
    out.total_steps = seq_steps;
    out.noise_dim = noise_dim;
    out.augmentation = Augmentation::time_only;
    out.seed = seed;
    out.threads = threads;
    return out;
}

void HestonExperimentConfig::validate() const {
    heston.validate();
    if (train_paths < batch_size) {
        throw config_error("heston experiment: need at least one batch of training paths");
    }
    if (test_paths < 2 || gen_paths != test_paths) {
        throw config_error("heston experiment: generated and held-out sides must match, >= 2");
    }
    if (seq_steps < 2) throw config_error("heston experiment: sequences need >= 2 steps");
    if (!(dt > 0.0)) throw config_error("heston experiment: dt must be > 0");
    if (hidden == 0) throw config_error("heston experiment: hidden size must be >= 1");
    if (n_permutations == 0) throw config_error("heston experiment: needs >= 1 permutation");
    train_config().validate();
}

HestonArmResult run_heston_arm(const HestonExperimentConfig& cfg, HestonNoiseKind kind) {
    cfg.validate();
    // stream ids: 10+arm trains, 20+arm generates, 30 holds out the test set
    const std::uint64_t arm = kind == HestonNoiseKind::iid ? 1 : 0;

    HestonArmResult out;
    out.kind = kind;
    const HestonData train_data(cfg.heston, kind, cfg.train_paths, cfg.seq_steps, cfg.dt,
                                cfg.noise_dim, Rng::stream(cfg.seed, 10 + arm).next_u64(),
                                cfg.threads);
    TrainConfig tc = cfg.train_config();
    tc.seed = Rng::stream(cfg.seed, 12 + arm).next_u64();
    const GeneratorParams init =
        GeneratorParams::init(cfg.hidden, cfg.noise_dim, Rng::stream(cfg.seed, 14 + arm).next_u64());
    TrainResult trained = train(tc, train_data, init);
    out.params = std::move(trained.params);
    out.report = std::move(trained.report);

    // generated side: fresh noise of the same kind through the trained model
    std::vector<Matrix> gen_channels;
    gen_channels.reserve(cfg.gen_paths);
    Rng gen_seeds = Rng::stream(cfg.seed, 20 + arm);
    const std::vector<double> anchor_price(1, 0.0);
    for (std::size_t i = 0; i < cfg.gen_paths; ++i) {
        GenerationPlan plan;
        plan.history_len = 1;
        plan.total_steps = cfg.seq_steps;
        plan.dts.assign(cfg.seq_steps, cfg.dt);
        plan.noise = heston_noise(train_data.noise_params(), cfg.seq_steps, cfg.dt, 1,
                                  cfg.noise_dim, gen_seeds.next_u64(), cfg.threads)[0];
        const LogPath path = generate(plan, out.params, anchor_price);
        gen_channels.push_back(time_augment(path));
    }

    // held-out side: fresh simulated paths through the same truncation
    const HestonBatch held = heston_simulate(cfg.heston, cfg.seq_steps, cfg.dt, cfg.test_paths,
                                             Rng::stream(cfg.seed, 30).next_u64(), cfg.threads);
    std::vector<Matrix> test_channels;
    test_channels.reserve(cfg.test_paths);
    for (std::size_t i = 0; i < cfg.test_paths; ++i) {
        test_channels.push_back(time_augment(heston_row_truncated(held.log_prices, i, cfg.dt)));
    }

    out.test = permutation_test(gen_channels, test_channels, tc.sig, cfg.n_permutations,
                                Rng::stream(cfg.seed, 40 + arm).next_u64(), cfg.threads);
    return out;
}

HestonExperimentResult run_heston_experiment(const HestonExperimentConfig& cfg) {
    HestonExperimentResult out;
    out.sv = run_heston_arm(cfg, HestonNoiseKind::stochastic_volatility);
    out.iid = run_heston_arm(cfg, HestonNoiseKind::iid);
    return out;
}

std::vector<AblationOutcome> run_ablation(const TrainConfig& base, const TrainingData& data,
                                          const GeneratorParams& init, std::size_t eval_window) {
    if (eval_window == 0) throw config_error("ablation: eval window must be >= 1");
    std::vector<AblationOutcome> out;
    for (const AblationDrop drop : {AblationDrop::none, AblationDrop::dt,
                                    AblationDrop::prev_return, AblationDrop::both}) {
        const TrainConfig cfg = ablation_variant(base, drop);
        TrainResult result = train(cfg, data, init);
        AblationOutcome row;
        row.drop = drop;
        row.report = std::move(result.report);
        const std::size_t w = std::min(eval_window, row.report.losses.size());
        row.final_loss_ma = std::accumulate(row.report.losses.end() - static_cast<std::ptrdiff_t>(w),
                                            row.report.losses.end(), 0.0) /
                            static_cast<double>(w);
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace sigmmd
