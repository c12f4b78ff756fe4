#include "sigmmd/generator.hpp"

#include <cmath>

#include "sigmmd/errors.hpp"
#include "sigmmd/rng.hpp"

namespace sigmmd {

std::vector<Matrix*> GeneratorParams::tensors() {
    return {&W_ii, &W_hi, &b_ii, &b_hi, &W_if, &W_hf, &b_if, &b_hf, &W_ig,
            &W_hg, &b_ig, &b_hg, &W_io, &W_ho, &b_io, &b_ho, &W_lin, &b_lin};
}

std::vector<const Matrix*> GeneratorParams::tensors() const {
    return {&W_ii, &W_hi, &b_ii, &b_hi, &W_if, &W_hf, &b_if, &b_hf, &W_ig,
            &W_hg, &b_ig, &b_hg, &W_io, &W_ho, &b_io, &b_ho, &W_lin, &b_lin};
}

std::vector<const char*> GeneratorParams::tensor_names() {
    return {"W_ii", "W_hi", "b_ii", "b_hi", "W_if", "W_hf", "b_if", "b_hf", "W_ig",
            "W_hg", "b_ig", "b_hg", "W_io", "W_ho", "b_io", "b_ho", "W_lin", "b_lin"};
}

GeneratorParams GeneratorParams::init(std::size_t hidden, std::size_t noise_dim,
                                      std::uint64_t seed) {
    if (hidden < 1 || noise_dim < 1) throw config_error("generator: hidden and noise_dim >= 1");
    GeneratorParams p;
    p.hidden_size = hidden;
    p.noise_dim = noise_dim;
    const std::size_t d = p.input_dim();
    for (Matrix* w : {&p.W_ii, &p.W_if, &p.W_ig, &p.W_io}) w->resize(hidden, d);
    for (Matrix* w : {&p.W_hi, &p.W_hf, &p.W_hg, &p.W_ho}) w->resize(hidden, hidden);
    for (Matrix* b : {&p.b_ii, &p.b_hi, &p.b_if, &p.b_hf, &p.b_ig, &p.b_hg, &p.b_io, &p.b_ho}) {
        b->resize(hidden, 1);
    }
    p.W_lin.resize(1, hidden);
    p.b_lin.resize(1, 1);

    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (Matrix* t : p.tensors()) {
        for (std::size_t i = 0; i < t->size(); ++i) (*t)[i] = rng.uniform(-bound, bound);
    }
    return p;
}

void GeneratorParams::validate() const {
    const std::size_t h = hidden_size, d = input_dim();
    const auto expect = [](const Matrix& m, std::size_t r, std::size_t c, const char* name) {
        if (m.rows() != r || m.cols() != c)
            throw invalid_input(std::string("generator params: bad shape for ") + name);
    };
    for (const Matrix* w : {&W_ii, &W_if, &W_ig, &W_io}) expect(*w, h, d, "W_i*");
    for (const Matrix* w : {&W_hi, &W_hf, &W_hg, &W_ho}) expect(*w, h, h, "W_h*");
    for (const Matrix* b : {&b_ii, &b_hi, &b_if, &b_hf, &b_ig, &b_hg, &b_io, &b_ho}) {
        expect(*b, h, 1, "b_*");
    }
    expect(W_lin, 1, h, "W_lin");
    expect(b_lin, 1, 1, "b_lin");
}

void GenerationPlan::validate(std::size_t noise_dim) const {
    if (history_len < 1) throw invalid_input("plan: history_len must be >= 1");
    if (total_steps <= history_len) throw invalid_input("plan: total_steps must exceed history_len");
    if (history_returns.size() + 1 != history_len)
        throw invalid_input("plan: history_returns must hold history_len - 1 values");
    if (dts.size() != total_steps) throw invalid_input("plan: dts must hold total_steps values");
    for (double dt : dts) {
        if (!(dt > 0.0)) throw invalid_input("plan: dts must be positive");
    }
    if (noise.rows() != total_steps || noise.cols() != noise_dim)
        throw invalid_input("plan: noise must be total_steps x noise_dim");
}

namespace {

void gate_affine(const Matrix& W, const Matrix& x, const Matrix& U, const Matrix& h,
                 const Matrix& bi, const Matrix& bh, Matrix& out) {
    out = matmul(W, x);
    const Matrix uh = matmul(U, h);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += uh[i] + bi[i] + bh[i];
}

}  // namespace

LstmState lstm_step(const Matrix& x, const LstmState& state, const GeneratorParams& params) {
    if (x.rows() != params.input_dim() || x.cols() != 1)
        throw invalid_input("lstm_step: input must be input_dim x 1");
    if (state.c.rows() != params.hidden_size || state.h.rows() != params.hidden_size)
        throw invalid_input("lstm_step: state must be hidden_size x 1");

    Matrix gi, gf, gg, go;
    gate_affine(params.W_ii, x, params.W_hi, state.h, params.b_ii, params.b_hi, gi);
    gate_affine(params.W_if, x, params.W_hf, state.h, params.b_if, params.b_hf, gf);
    gate_affine(params.W_ig, x, params.W_hg, state.h, params.b_ig, params.b_hg, gg);
    gate_affine(params.W_io, x, params.W_ho, state.h, params.b_io, params.b_ho, go);

    LstmState next;
    next.c.resize(params.hidden_size, 1);
    next.h.resize(params.hidden_size, 1);
    for (std::size_t i = 0; i < params.hidden_size; ++i) {
        const double ig = 1.0 / (1.0 + std::exp(-gi[i]));
        const double fg = 1.0 / (1.0 + std::exp(-gf[i]));
        const double cand = std::tanh(gg[i]);
        const double og = 1.0 / (1.0 + std::exp(-go[i]));
        next.c[i] = fg * state.c[i] + ig * cand;
        next.h[i] = og * std::tanh(next.c[i]);
    }
    for (std::size_t i = 0; i < params.hidden_size; ++i) {
        if (!std::isfinite(next.c[i]) || !std::isfinite(next.h[i]))
            throw numeric_fault("lstm_step: non-finite state");
    }
    return next;
}

double linear_step(const Matrix& h, const GeneratorParams& params) {
    if (h.rows() != params.hidden_size || h.cols() != 1)
        throw invalid_input("linear_step: hidden must be hidden_size x 1");
    double out = params.b_lin[0];
    for (std::size_t i = 0; i < params.hidden_size; ++i) out += params.W_lin(0, i) * h[i];
    return out;
}

LogPath generate_full(const GenerationPlan& plan, const GeneratorParams& params,
                      const std::vector<double>& history_log_prices, const InputMask& mask) {
    params.validate();
    plan.validate(params.noise_dim);
    const std::size_t k = plan.history_len;
    const std::size_t n = plan.total_steps;
    const std::size_t d = params.input_dim();
    if (history_log_prices.size() != k)
        throw invalid_input("generate: history_log_prices must hold history_len values");

    LstmState state;
    state.c.resize(params.hidden_size, 1);
    state.h.resize(params.hidden_size, 1);

    // full return sequence r_0..r_n with r_0 = 0; indices 1..k-1 are history
    std::vector<double> returns(n + 1, 0.0);
    for (std::size_t i = 0; i < plan.history_returns.size(); ++i) {
        returns[i + 1] = plan.history_returns[i];
    }

    Matrix x(d, 1);
    for (std::size_t t = 1; t <= n; ++t) {
        const double prev = returns[t - 1];
        x(0, 0) = mask.use_prev_return ? prev : 0.0;
        x(1, 0) = mask.use_dt ? plan.dts[t - 1] : 0.0;
        for (std::size_t z = 0; z < params.noise_dim; ++z) x(2 + z, 0) = plan.noise(t - 1, z);
        state = lstm_step(x, state, params);
        const double out = linear_step(state.h, params);
        // conditioning outputs (t < k) are computed then dropped
        if (t >= k) returns[t] = out;
    }

    LogPath full;
    full.values.resize(n + 1);
    full.times.resize(n + 1);
    for (std::size_t i = 0; i < k; ++i) full.values[i] = history_log_prices[i];
    full.times[0] = 0.0;
    for (std::size_t t = 1; t <= n; ++t) {
        if (t >= k) full.values[t] = full.values[t - 1] + returns[t];
        full.times[t] = full.times[t - 1] + plan.dts[t - 1];
    }
    return full;
}

LogPath generate(const GenerationPlan& plan, const GeneratorParams& params,
                 const std::vector<double>& history_log_prices, const InputMask& mask) {
    const LogPath full = generate_full(plan, params, history_log_prices, mask);
    const std::size_t k = plan.history_len;
    LogPath out;
    out.values.assign(full.values.begin() + k, full.values.end());
    out.times.assign(full.times.begin() + k, full.times.end());
    const double v0 = out.values.front();
    const double t0 = out.times.front();
    for (double& v : out.values) v -= v0;
    for (double& t : out.times) t -= t0;
    return out;
}

Value generate_traced(Tape& tape, const GenerationPlan& plan,
                      const std::vector<Value>& params_values, std::size_t hidden_size,
                      std::size_t noise_dim, const InputMask& mask) {
    plan.validate(noise_dim);
    if (params_values.size() != 18) throw invalid_input("generate_traced: expected 18 tensors");
    const std::size_t k = plan.history_len;
    const std::size_t n = plan.total_steps;

    const Value& W_ii = params_values[0];
    const Value& W_hi = params_values[1];
    const Value& b_ii = params_values[2];
    const Value& b_hi = params_values[3];
    const Value& W_if = params_values[4];
    const Value& W_hf = params_values[5];
    const Value& b_if = params_values[6];
    const Value& b_hf = params_values[7];
    const Value& W_ig = params_values[8];
    const Value& W_hg = params_values[9];
    const Value& b_ig = params_values[10];
    const Value& b_hg = params_values[11];
    const Value& W_io = params_values[12];
    const Value& W_ho = params_values[13];
    const Value& b_io = params_values[14];
    const Value& b_ho = params_values[15];
    const Value& W_lin = params_values[16];
    const Value& b_lin = params_values[17];

    Value c = tape.constant(Matrix(hidden_size, 1));
    Value h = tape.constant(Matrix(hidden_size, 1));
    const Value zero = tape.constant_scalar(0.0);

    const auto gate = [&](const Value& W, const Value& U, const Value& bi, const Value& bh,
                          const Value& x) {
        return tape.add(tape.add(tape.matmul(W, x), tape.matmul(U, h)), tape.add(bi, bh));
    };

    Value prev = zero;  // previous return entering the step
    std::vector<Value> kept;
    kept.reserve(n + 1 - k);
    for (std::size_t t = 1; t <= n; ++t) {
        Matrix z(noise_dim, 1);
        for (std::size_t c2 = 0; c2 < noise_dim; ++c2) z(c2, 0) = plan.noise(t - 1, c2);
        const Value zin = tape.constant(std::move(z));
        const Value dt = mask.use_dt ? tape.constant_scalar(plan.dts[t - 1]) : zero;
        const Value r_in = mask.use_prev_return ? prev : zero;
        const Value x = tape.stack_rows({r_in, dt, zin});

        const Value ig = tape.sigmoid(gate(W_ii, W_hi, b_ii, b_hi, x));
        const Value fg = tape.sigmoid(gate(W_if, W_hf, b_if, b_hf, x));
        const Value gg = tape.tanh(gate(W_ig, W_hg, b_ig, b_hg, x));
        const Value og = tape.sigmoid(gate(W_io, W_ho, b_io, b_ho, x));
        c = tape.add(tape.mul(fg, c), tape.mul(ig, gg));
        h = tape.mul(og, tape.tanh(c));

        const Value out = tape.add(tape.matmul(W_lin, h), b_lin);
        if (t >= k) {
            // r_k shifts the level of x_k, which start-normalization removes,
            // so only returns from step k+1 on enter the output values
            if (t > k) kept.push_back(out);
            prev = out;
        } else {
            // conditioning: the output is recorded on the tape but the next
            // input comes from history
            prev = tape.constant_scalar(plan.history_returns[t - 1]);
        }
    }

    const Value kept_col = tape.stack_rows(kept);
    return tape.stack_rows({zero, tape.cumsum_rows(kept_col)});
}

}  // namespace sigmmd
