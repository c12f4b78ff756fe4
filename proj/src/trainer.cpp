#include "sigmmd/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>

#include "sigmmd/errors.hpp"
#include "sigmmd/mmd.hpp"
#include "sigmmd/rng.hpp"
#include "sigmmd/sig_kernel_ad.hpp"
#include "sigmmd/tape.hpp"

namespace sigmmd {

void TrainConfig::validate() const {
    if (epochs == 0) throw config_error("trainer: epochs must be >= 1");
    if (batch_size < 2) {
        throw config_error("trainer: batch size must be >= 2 for the unbiased estimator");
    }
    if (!std::isfinite(learning_rate) || learning_rate <= 0.0) {
        throw config_error("trainer: learning rate must be positive and finite");
    }
    sig.validate();
    if (history_len == 0) throw config_error("trainer: history length k must be >= 1");
    if (total_steps <= history_len) {
        throw config_error("trainer: total steps n must exceed history length k");
    }
    if (noise_dim == 0) throw config_error("trainer: noise dimension must be >= 1");
    if (augmentation == Augmentation::lead_lag_time && lag_steps == 0) {
        throw config_error("trainer: lead-lag augmentation needs lag >= 1");
    }
    if (early_window == 0) throw config_error("trainer: early-stop window must be >= 1");
    if (early_patience == 0) throw config_error("trainer: early-stop patience must be >= 1");
    if (!std::isfinite(lr_decay) || lr_decay <= 0.0 || lr_decay > 1.0) {
        throw config_error("trainer: lr decay factor must be in (0, 1]");
    }
    if (threads < 0) throw config_error("trainer: thread count must be >= 0");
}

LogPath truncated_reference(const TrainItem& item) {
    const std::size_t n = item.plan.total_steps;
    const std::size_t k = item.plan.history_len;
    if (k == 0 || n <= k) throw invalid_input("trainer: reference needs k >= 1 and n > k");
    if (item.reference_returns.size() != n) {
        throw invalid_input("trainer: reference returns must have n entries");
    }
    if (item.plan.dts.size() != n) throw invalid_input("trainer: dts must have n entries");

    std::vector<double> x(n + 1, 0.0), t(n + 1, 0.0);
    for (std::size_t i = 1; i <= n; ++i) {
        x[i] = x[i - 1] + item.reference_returns[i - 1];
        t[i] = t[i - 1] + item.plan.dts[i - 1];
    }
    LogPath out;
    out.times.resize(n + 1 - k);
    out.values.resize(n + 1 - k);
    for (std::size_t j = 0; j < out.size(); ++j) {
        out.times[j] = t[k + j] - t[k];
        out.values[j] = x[k + j] - x[k];
    }
    out.validate();
    return out;
}

TrainConfig ablation_variant(const TrainConfig& base, AblationDrop drop) {
    TrainConfig out = base;
    switch (drop) {
        case AblationDrop::none:
            break;
        case AblationDrop::prev_return:
            out.mask.use_prev_return = false;
            break;
        case AblationDrop::dt:
            out.mask.use_dt = false;
            break;
        case AblationDrop::both:
            out.mask.use_prev_return = false;
            out.mask.use_dt = false;
            break;
    }
    return out;
}

namespace {

struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::size_t t = 0;

    explicit AdamState(const GeneratorParams& params) {
        for (const Matrix* w : params.tensors()) {
            m.emplace_back(w->rows(), w->cols());
            v.emplace_back(w->rows(), w->cols());
        }
    }
};

void adam_update(GeneratorParams& params, const std::vector<Matrix>& grads, AdamState& st,
                 double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++st.t;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.t));
    std::vector<Matrix*> tensors = params.tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        Matrix& w = *tensors[i];
        const Matrix& g = grads[i];
        for (std::size_t kk = 0; kk < w.size(); ++kk) {
            st.m[i][kk] = b1 * st.m[i][kk] + (1.0 - b1) * g[kk];
            st.v[i][kk] = b2 * st.v[i][kk] + (1.0 - b2) * g[kk] * g[kk];
            const double mhat = st.m[i][kk] / c1;
            const double vhat = st.v[i][kk] / c2;
            w[kk] -= lr * mhat / (std::sqrt(vhat) + eps);
            if (!std::isfinite(w[kk])) throw numeric_fault("trainer: non-finite parameter update");
        }
    }
}

Matrix column(const std::vector<double>& v) {
    Matrix out(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) out(i, 0) = v[i];
    return out;
}

Matrix row_as_column(const Matrix& m, std::size_t row) {
    Matrix out(m.cols(), 1);
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, 0) = m(row, j);
    return out;
}

double off_diagonal_mean(const Matrix& gram) {
    const std::size_t n = gram.rows();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) acc += gram(i, j);
        }
    }
    return acc / (static_cast<double>(n) * static_cast<double>(n - 1));
}

void check_item_shape(const TrainConfig& cfg, const TrainItem& item) {
    item.plan.validate(cfg.noise_dim);
    if (item.plan.history_len != cfg.history_len || item.plan.total_steps != cfg.total_steps) {
        throw invalid_input("trainer: data source segment shape does not match the config");
    }
}

// Builds the loss for one batch on a fresh tape and applies the optimizer
// update. The generated side is traced end to end; the reference side enters
// as constants, with the Kyy block computed outside the tape.
double train_step(const TrainConfig& cfg, const std::vector<TrainItem>& batch,
                  GeneratorParams& params, AdamState& adam, double lr) {
    Tape tape;
    std::vector<Value> pvals;
    for (const Matrix* w : std::as_const(params).tensors()) pvals.push_back(tape.input(*w));

    const std::size_t B = batch.size();
    const std::size_t L = cfg.output_len();
    std::vector<std::vector<Value>> xcols(B), ycols(B);
    std::vector<Matrix> ymats;
    ymats.reserve(B);

    for (std::size_t b = 0; b < B; ++b) {
        const TrainItem& item = batch[b];
        check_item_shape(cfg, item);
        const Value v = generate_traced(tape, item.plan, pvals, params.hidden_size,
                                        params.noise_dim, cfg.mask);
        const LogPath ref = truncated_reference(item);

        if (cfg.augmentation == Augmentation::lead_lag_time) {
            const AugmentedPath aug = lead_lag_time_augment(ref, cfg.lag_steps);
            ymats.push_back(aug.channels());
            const std::size_t points = aug.size();
            std::vector<std::size_t> lead_idx(points), lag_idx(points);
            for (std::size_t i = 0; i < points; ++i) {
                lead_idx[i] = std::min(i, L - 1);
                lag_idx[i] = i < cfg.lag_steps ? 0 : i - cfg.lag_steps;
            }
            const Value tcol = tape.constant(column(aug.t));
            xcols[b] = {tcol, tape.gather_rows(v, lead_idx), tape.gather_rows(v, lag_idx)};
            ycols[b] = {tcol, tape.constant(column(aug.lead)), tape.constant(column(aug.lag))};
        } else {
            const Matrix ch = time_augment(ref);
            ymats.push_back(ch);
            const Value tcol = tape.constant(row_as_column(ch, 0));
            xcols[b] = {tcol, v};
            ycols[b] = {tcol, tape.constant(row_as_column(ch, 1))};
        }
    }

    const GramMatrix kyy = gram_symmetric(ymats, cfg.sig, cfg.threads);
    Value loss = tape.constant_scalar(off_diagonal_mean(kyy.entries));

    const double w_xx = 2.0 / (static_cast<double>(B) * static_cast<double>(B - 1));
    const double w_xy = -2.0 / (static_cast<double>(B) * static_cast<double>(B));
    for (std::size_t a = 0; a < B; ++a) {
        for (std::size_t b = a + 1; b < B; ++b) {
            loss = tape.add(loss, tape.scale(sig_kernel_pair(tape, xcols[a], xcols[b], cfg.sig),
                                             w_xx));
        }
    }
    for (std::size_t a = 0; a < B; ++a) {
        for (std::size_t b = 0; b < B; ++b) {
            loss = tape.add(loss, tape.scale(sig_kernel_pair(tape, xcols[a], ycols[b], cfg.sig),
                                             w_xy));
        }
    }

    tape.backward(loss);
    std::vector<Matrix> grads;
    grads.reserve(pvals.size());
    for (Value p : pvals) grads.push_back(tape.grad(p));
    adam_update(params, grads, adam, lr);
    return tape.scalar(loss);
}

}  // namespace

TrainResult train(const TrainConfig& config, const TrainingData& data, GeneratorParams params) {
    config.validate();
    params.validate();
    if (params.noise_dim != config.noise_dim) {
        throw config_error("trainer: generator noise dimension does not match the config");
    }

    const std::size_t n_anchors = data.anchors();
    if (n_anchors < config.batch_size) {
        throw config_error("trainer: batch size exceeds the available anchors");
    }
    const std::size_t steps_per_epoch = n_anchors / config.batch_size;

    std::vector<std::size_t> deck(n_anchors);
    std::iota(deck.begin(), deck.end(), std::size_t{0});
    Rng shuffle_rng = Rng::stream(config.seed, 1);
    Rng noise_seed_rng = Rng::stream(config.seed, 2);

    AdamState adam(params);
    TrainReport report;
    double lr = config.learning_rate;
    std::size_t bad_evals = 0;
    std::size_t decays_done = 0;
    const auto started = std::chrono::steady_clock::now();

    for (std::size_t epoch = 0; epoch < config.epochs && !report.stopped_early; ++epoch) {
        shuffle_rng.shuffle(deck);
        for (std::size_t step = 0; step < steps_per_epoch; ++step) {
            std::vector<TrainItem> batch;
            batch.reserve(config.batch_size);
            for (std::size_t b = 0; b < config.batch_size; ++b) {
                const std::size_t anchor = deck[step * config.batch_size + b];
                batch.push_back(data.item(anchor, noise_seed_rng.next_u64()));
            }
            try {
                report.losses.push_back(train_step(config, batch, params, adam, lr));
            } catch (const numeric_fault& e) {
                std::ostringstream msg;
                msg << "trainer: aborted at epoch " << epoch + 1 << ", step "
                    << report.losses.size() + 1 << " (lr " << lr;
                if (!report.losses.empty()) msg << ", last loss " << report.losses.back();
                msg << "): " << e.what();
                throw numeric_fault(msg.str());
            }
        }
        report.epochs_completed = epoch + 1;

        if (report.losses.size() >= config.early_window) {
            const auto tail = report.losses.end() - static_cast<std::ptrdiff_t>(config.early_window);
            const double ma = std::accumulate(tail, report.losses.end(), 0.0) /
                              static_cast<double>(config.early_window);
            if (ma < report.best_moving_average) {
                report.best_moving_average = ma;
                bad_evals = 0;
            } else if (++bad_evals >= config.early_patience) {
                if (decays_done < config.max_lr_decays) {
                    lr *= config.lr_decay;
                    ++decays_done;
                    bad_evals = 0;
                    report.lr_changes.push_back({report.losses.size(), lr});
                } else {
                    report.stopped_early = true;
                }
            }
        }
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return TrainResult{std::move(params), std::move(report)};
}

}  // namespace sigmmd
