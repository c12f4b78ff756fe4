#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "sigmmd/generator.hpp"
#include "sigmmd/paths.hpp"
#include "sigmmd/sig_kernel.hpp"

namespace sigmmd {

// lead_lag_time is the production setting; time_only drops the lead-lag
// channels for the stochastic-volatility validation experiment.
enum class Augmentation { lead_lag_time, time_only };

enum class AblationDrop { none, prev_return, dt, both };

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    SigKernelConfig sig;
    std::size_t history_len = 50;   // k, conditioning points
    std::size_t total_steps = 299;  // n, so scored sequences have n+1-k points
    std::size_t noise_dim = 4;
    std::size_t ma_order = 20;      // echoed into reports; the data source owns the fit
    Augmentation augmentation = Augmentation::lead_lag_time;
    std::size_t lag_steps = 1;
    InputMask mask;
    std::uint64_t seed = 0;
    std::size_t early_window = 50;    // steps in the loss moving average
    std::size_t early_patience = 10;  // epoch evaluations without improvement
    double lr_decay = 0.5;
    std::size_t max_lr_decays = 2;  // decays before a further plateau stops training
    int threads = 1;

    std::size_t output_len() const { return total_steps + 1 - history_len; }
    void validate() const;
};

// One anchored sample: the generation inputs plus the reference returns
// r_1..r_n drawn from the same anchor window.
struct TrainItem {
    GenerationPlan plan;
    std::vector<double> reference_returns;
};

// Source of anchored segments. item() must be a pure function of
// (anchor, noise_seed) so a fixed trainer seed reproduces the loss series.
class TrainingData {
  public:
    virtual ~TrainingData() = default;
    virtual std::size_t anchors() const = 0;
    virtual TrainItem item(std::size_t anchor, std::uint64_t noise_seed) const = 0;
};

struct LrChange {
    std::size_t step = 0;  // count of optimizer steps taken when the change applied
    double learning_rate = 0.0;
};

struct TrainReport {
    std::vector<double> losses;  // one unbiased MMD^2 value per optimizer step
    std::vector<LrChange> lr_changes;
    std::size_t epochs_completed = 0;
    bool stopped_early = false;
    double best_moving_average = std::numeric_limits<double>::infinity();
    double wall_seconds = 0.0;
};

struct TrainResult {
    GeneratorParams params;
    TrainReport report;
};

// Reference-side counterpart of generate(): cumulative-sums the returns with
// r_0 = 0, drops the first k points and start-normalizes, so both sides of
// the MMD see sequences of length n+1-k starting at zero.
LogPath truncated_reference(const TrainItem& item);

TrainResult train(const TrainConfig& config, const TrainingData& data, GeneratorParams params);

// Copy of base with the selected generator inputs masked to zero. Input
// dimensions are unchanged, so parameter shapes match the base trainer.
TrainConfig ablation_variant(const TrainConfig& base, AblationDrop drop);

}  // namespace sigmmd
