#pragma once

#include <cstdint>
#include <vector>

#include "sigmmd/dataset.hpp"
#include "sigmmd/heston.hpp"
#include "sigmmd/mmd.hpp"
#include "sigmmd/noise_model.hpp"
#include "sigmmd/trainer.hpp"

namespace sigmmd {

// Anchored segments over a daily close series with MA-model noise. Anchor i
// sits at date row p + i*stride, which leaves p transformed returns of lag
// history before the segment and n rows after it.
class MarketData final : public TrainingData {
  public:
    MarketData(const Dataset& data, NoiseModel noise, std::size_t history_len,
               std::size_t total_steps, std::size_t noise_dim, std::size_t stride);

    std::size_t anchors() const override { return anchor_rows_.size(); }
    TrainItem item(std::size_t anchor, std::uint64_t noise_seed) const override;
    std::size_t anchor_row(std::size_t anchor) const { return anchor_rows_.at(anchor); }

    // The reference path of an anchor, truncated the same way training is.
    LogPath reference_path(std::size_t anchor) const;

  private:
    std::vector<double> returns_;
    std::vector<double> dts_;
    NoiseModel noise_;
    std::size_t k_, n_, dz_;
    std::vector<std::size_t> anchor_rows_;
};

enum class HestonNoiseKind { stochastic_volatility, iid };

// Pre-simulated Heston reference paths with per-draw simulated noise. The
// conditioning phase is degenerate (k=1): states start at zero and the
// scored sequences are the n points after the first.
class HestonData final : public TrainingData {
  public:
    HestonData(const HestonParams& params, HestonNoiseKind kind, std::size_t n_paths,
               std::size_t n_steps, double dt, std::size_t noise_dim, std::uint64_t seed,
               int threads = 0);

    std::size_t anchors() const override { return batch_.log_prices.rows(); }
    TrainItem item(std::size_t anchor, std::uint64_t noise_seed) const override;

    // Noise parameters actually used (driftless, surrogate-degenerate for iid).
    const HestonParams& noise_params() const { return noise_params_; }

  private:
    HestonBatch batch_;
    HestonParams noise_params_;
    std::size_t n_steps_, dz_;
    double dt_;
    int threads_;
};

// k=1 truncation of one simulated row: the n points after the first,
// start-normalized, on the uniform dt grid.
LogPath heston_row_truncated(const Matrix& log_prices, std::size_t row, double dt);

struct HestonExperimentConfig {
    HestonParams heston;  // defaults are the benchmark parameters
    std::size_t train_paths = 1000;
    std::size_t test_paths = 128;  // held-out side of each permutation test
    std::size_t gen_paths = 128;   // generated side of each permutation test
    std::size_t seq_steps = 250;   // n; scored sequences have this many points
    double dt = 1.0 / 252.0;
    std::size_t hidden = 16;
    std::size_t noise_dim = 2;
    std::size_t batch_size = 8;
    std::size_t epochs = 4;
    double learning_rate = 0.005;
    int sig_order = 5;
    std::size_t n_permutations = 1000;
    std::uint64_t seed = 1;
    int threads = 0;

    TrainConfig train_config() const;
    void validate() const;
};

struct HestonArmResult {
    HestonNoiseKind kind = HestonNoiseKind::stochastic_volatility;
    GeneratorParams params;
    TrainReport report;
    PermutationTestResult test;
};

struct HestonExperimentResult {
    HestonArmResult sv;
    HestonArmResult iid;
};

// Trains one generator per noise kind on simulated paths, then permutation
// tests generated sequences against held-out paths neither model saw.
HestonExperimentResult run_heston_experiment(const HestonExperimentConfig& cfg);

// One arm alone (the acceptance gate runs them separately).
HestonArmResult run_heston_arm(const HestonExperimentConfig& cfg, HestonNoiseKind kind);

struct AblationOutcome {
    AblationDrop drop = AblationDrop::none;
    double final_loss_ma = 0.0;  // mean of the trailing eval_window losses
    TrainReport report;
};

// Trains the four input-masking variants from the same initial parameters
// and scores each by its trailing loss average.
std::vector<AblationOutcome> run_ablation(const TrainConfig& base, const TrainingData& data,
                                          const GeneratorParams& init, std::size_t eval_window);

}  // namespace sigmmd
