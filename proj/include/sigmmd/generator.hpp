#pragma once

#include <cstdint>
#include <vector>

#include "sigmmd/matrix.hpp"
#include "sigmmd/paths.hpp"
#include "sigmmd/tape.hpp"

namespace sigmmd {

// LSTM + linear readout. Input layout per step is (previous return, dt,
// noise_1..noise_dz), so input_dim = 2 + noise_dim.
struct GeneratorParams {
    std::size_t hidden_size = 64;
    std::size_t noise_dim = 4;

    // gate order: input, forget, candidate, output
    Matrix W_ii, W_hi, b_ii, b_hi;
    Matrix W_if, W_hf, b_if, b_hf;
    Matrix W_ig, W_hg, b_ig, b_hg;
    Matrix W_io, W_ho, b_io, b_ho;
    Matrix W_lin, b_lin;

    std::size_t input_dim() const { return 2 + noise_dim; }

    // Fixed tensor order used by the optimizer and serialization.
    std::vector<Matrix*> tensors();
    std::vector<const Matrix*> tensors() const;
    static std::vector<const char*> tensor_names();

    // uniform(-1/sqrt(h), 1/sqrt(h)) for all weights and biases
    static GeneratorParams init(std::size_t hidden, std::size_t noise_dim, std::uint64_t seed);
    void validate() const;
};

struct LstmState {
    Matrix c;
    Matrix h;
};

struct GenerationPlan {
    std::vector<double> history_returns;  // k-1 values
    std::vector<double> dts;              // n values, all > 0
    std::size_t history_len = 1;          // k
    std::size_t total_steps = 2;          // n
    Matrix noise;                         // n x noise_dim

    void validate(std::size_t noise_dim) const;
};

// Ablation switch: masked inputs are fed as zeros, dimensions unchanged.
struct InputMask {
    bool use_prev_return = true;
    bool use_dt = true;
};

LstmState lstm_step(const Matrix& x, const LstmState& state, const GeneratorParams& params);
double linear_step(const Matrix& h, const GeneratorParams& params);

// Full pre-truncation path x_0..x_n at absolute levels: the first k values
// are exactly history_log_prices, the rest extend it with generated returns.
LogPath generate_full(const GenerationPlan& plan, const GeneratorParams& params,
                      const std::vector<double>& history_log_prices,
                      const InputMask& mask = {});

// Truncated tail x_k..x_n of generate_full, start-normalized (values and
// times both restart at 0).
LogPath generate(const GenerationPlan& plan, const GeneratorParams& params,
                 const std::vector<double>& history_log_prices,
                 const InputMask& mask = {});

// Tape-recorded twin of generate(); returns the (n+1-k) x 1 column of
// truncated, start-normalized log prices. params_values order must match
// GeneratorParams::tensors().
Value generate_traced(Tape& tape, const GenerationPlan& plan,
                      const std::vector<Value>& params_values, std::size_t hidden_size,
                      std::size_t noise_dim, const InputMask& mask = {});

}  // namespace sigmmd
