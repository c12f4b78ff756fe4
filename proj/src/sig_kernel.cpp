#include "sigmmd/sig_kernel.hpp"

#include <algorithm>
#include <cmath>

#include "sigmmd/errors.hpp"
#include "sigmmd/parallel.hpp"

namespace sigmmd {

namespace {

// out[i][j] = sum over i' < i, j' < j of in[i'][j']
void ecs_both(const Matrix& in, Matrix& out) {
    const std::size_t P = in.rows(), Q = in.cols();
    out.resize(P, Q);
    for (std::size_t j = 0; j < Q; ++j) out(0, j) = 0.0;
    for (std::size_t i = 1; i < P; ++i) {
        out(i, 0) = 0.0;
        for (std::size_t j = 1; j < Q; ++j) {
            out(i, j) = in(i - 1, j - 1) + out(i - 1, j) + out(i, j - 1) - out(i - 1, j - 1);
        }
    }
}

// out[i][j] = sum over i' < i of in[i'][j]
void ecs_rows(const Matrix& in, Matrix& out) {
    const std::size_t P = in.rows(), Q = in.cols();
    out.resize(P, Q);
    for (std::size_t j = 0; j < Q; ++j) out(0, j) = 0.0;
    for (std::size_t i = 1; i < P; ++i) {
        for (std::size_t j = 0; j < Q; ++j) out(i, j) = out(i - 1, j) + in(i - 1, j);
    }
}

// out[i][j] = sum over j' < j of in[i][j']
void ecs_cols(const Matrix& in, Matrix& out) {
    const std::size_t P = in.rows(), Q = in.cols();
    out.resize(P, Q);
    for (std::size_t i = 0; i < P; ++i) {
        out(i, 0) = 0.0;
        for (std::size_t j = 1; j < Q; ++j) out(i, j) = out(i, j - 1) + in(i, j - 1);
    }
}

// suffix counterparts used by the adjoint: sums over strictly larger indices
void ecs_both_adj(const Matrix& in, Matrix& out) {
    const std::size_t P = in.rows(), Q = in.cols();
    out.resize(P, Q);
    for (std::size_t j = 0; j < Q; ++j) out(P - 1, j) = 0.0;
    for (std::size_t i = P - 1; i-- > 0;) {
        out(i, Q - 1) = 0.0;
        for (std::size_t j = Q - 1; j-- > 0;) {
            out(i, j) = in(i + 1, j + 1) + out(i + 1, j) + out(i, j + 1) - out(i + 1, j + 1);
        }
    }
}

void ecs_rows_adj(const Matrix& in, Matrix& out) {
    const std::size_t P = in.rows(), Q = in.cols();
    out.resize(P, Q);
    for (std::size_t j = 0; j < Q; ++j) out(P - 1, j) = 0.0;
    for (std::size_t i = P - 1; i-- > 0;) {
        for (std::size_t j = 0; j < Q; ++j) out(i, j) = out(i + 1, j) + in(i + 1, j);
    }
}

void ecs_cols_adj(const Matrix& in, Matrix& out) {
    const std::size_t P = in.rows(), Q = in.cols();
    out.resize(P, Q);
    for (std::size_t i = 0; i < P; ++i) {
        out(i, Q - 1) = 0.0;
        for (std::size_t j = Q - 1; j-- > 0;) out(i, j) = out(i, j + 1) + in(i, j + 1);
    }
}

void add_into(Matrix& acc, const Matrix& m) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += m[i];
}

// acc += a .* b * scale
void fma_into(Matrix& acc, const Matrix& a, const Matrix& b, double scale) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += a[i] * b[i] * scale;
}

void hadamard(const Matrix& a, const Matrix& b, double scale, Matrix& out) {
    out.resize(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i] * scale;
}

// One level step: build the d x d state grid for `level` from the previous
// grid. Grids are row-major vectors of matrices indexed a * d + b.
void level_step(const Matrix& K, int level, const std::vector<Matrix>& prev,
                std::vector<Matrix>& next) {
    const int d_prev = level - 1;
    const int d = level;
    const std::size_t P = K.rows(), Q = K.cols();

    Matrix agg(P, Q), scratch(P, Q);

    next.assign(static_cast<std::size_t>(d) * d, Matrix());

    // total aggregate for the fresh-fresh state
    agg.fill(0.0);
    for (const Matrix& m : prev) add_into(agg, m);
    ecs_both(agg, scratch);
    hadamard(K, scratch, 1.0, next[0]);

    // fresh i, extended j-run: needs column-b aggregates of the previous grid
    for (int b = 1; b < d; ++b) {
        agg.fill(0.0);
        for (int a = 0; a < d_prev; ++a) add_into(agg, prev[a * d_prev + (b - 1)]);
        ecs_rows(agg, scratch);
        hadamard(K, scratch, 1.0 / (b + 1), next[b]);
    }

    // extended i-run, fresh j
    for (int a = 1; a < d; ++a) {
        agg.fill(0.0);
        for (int b = 0; b < d_prev; ++b) add_into(agg, prev[(a - 1) * d_prev + b]);
        ecs_cols(agg, scratch);
        hadamard(K, scratch, 1.0 / (a + 1), next[a * d]);
    }

    // both runs extended
    for (int a = 1; a < d; ++a) {
        for (int b = 1; b < d; ++b) {
            hadamard(K, prev[(a - 1) * d_prev + (b - 1)], 1.0 / ((a + 1.0) * (b + 1.0)),
                     next[a * d + b]);
        }
    }
}

}  // namespace

void SigKernelConfig::validate() const {
    static_kernel.validate();
    if (order < 0) throw config_error("sig kernel: order must be >= 0");
}

Matrix increment_matrix(const Matrix& pointwise_gram) {
    if (pointwise_gram.rows() < 2 || pointwise_gram.cols() < 2)
        throw invalid_input("increment_matrix: needs at least 2 points per path");
    const std::size_t P = pointwise_gram.rows() - 1;
    const std::size_t Q = pointwise_gram.cols() - 1;
    Matrix K(P, Q);
    for (std::size_t i = 0; i < P; ++i) {
        for (std::size_t j = 0; j < Q; ++j) {
            K(i, j) = pointwise_gram(i + 1, j + 1) - pointwise_gram(i, j + 1) -
                      pointwise_gram(i + 1, j) + pointwise_gram(i, j);
        }
    }
    return K;
}

double sig_kernel_from_increments(const Matrix& K, int order) {
    if (order == 0) return 1.0;
    double total = 1.0 + K.sum();
    std::vector<Matrix> prev{K};
    std::vector<Matrix> next;
    for (int level = 2; level <= order; ++level) {
        level_step(K, level, prev, next);
        for (const Matrix& m : next) total += m.sum();
        prev.swap(next);
    }
    return total;
}

double sig_kernel_forward_stored(const Matrix& K, int order, SigKernelLevels& levels) {
    levels.grids.clear();
    if (order == 0) return 1.0;
    double total = 1.0 + K.sum();
    levels.grids.push_back({K});
    for (int level = 2; level <= order; ++level) {
        std::vector<Matrix> next;
        level_step(K, level, levels.grids.back(), next);
        for (const Matrix& m : next) total += m.sum();
        levels.grids.push_back(std::move(next));
    }
    return total;
}

Matrix sig_kernel_increment_grad(const Matrix& K, int order, const SigKernelLevels& levels,
                                 double seed) {
    const std::size_t P = K.rows(), Q = K.cols();
    Matrix Kbar(P, Q);
    if (order == 0) return Kbar;

    // Adjoint state for the level currently being processed. Every level's
    // grid feeds the final sum, so each starts from `seed`.
    std::vector<Matrix> bar(static_cast<std::size_t>(order) * order, Matrix());
    const auto reset_bar = [&](int d) {
        for (int s = 0; s < d * d; ++s) bar[s].resize(P, Q), bar[s].fill(seed);
    };
    reset_bar(order);

    Matrix agg(P, Q), scratch(P, Q), tmp(P, Q);
    std::vector<Matrix> bar_prev;

    for (int level = order; level >= 2; --level) {
        const int d = level;
        const int d_prev = level - 1;
        const std::vector<Matrix>& prev = levels.grids[level - 2];

        bar_prev.assign(static_cast<std::size_t>(d_prev) * d_prev, Matrix());
        for (auto& m : bar_prev) m.resize(P, Q), m.fill(seed);

        // fresh-fresh state
        {
            const Matrix& rb = bar[0];
            agg.fill(0.0);
            for (const Matrix& m : prev) add_into(agg, m);
            ecs_both(agg, scratch);
            fma_into(Kbar, scratch, rb, 1.0);
            hadamard(K, rb, 1.0, tmp);
            ecs_both_adj(tmp, scratch);
            for (auto& m : bar_prev) add_into(m, scratch);
        }
        // fresh i states
        for (int b = 1; b < d; ++b) {
            const Matrix& rb = bar[b];
            agg.fill(0.0);
            for (int a = 0; a < d_prev; ++a) add_into(agg, prev[a * d_prev + (b - 1)]);
            ecs_rows(agg, scratch);
            fma_into(Kbar, scratch, rb, 1.0 / (b + 1));
            hadamard(K, rb, 1.0 / (b + 1), tmp);
            ecs_rows_adj(tmp, scratch);
            for (int a = 0; a < d_prev; ++a) add_into(bar_prev[a * d_prev + (b - 1)], scratch);
        }
        // fresh j states
        for (int a = 1; a < d; ++a) {
            const Matrix& rb = bar[a * d];
            agg.fill(0.0);
            for (int b = 0; b < d_prev; ++b) add_into(agg, prev[(a - 1) * d_prev + b]);
            ecs_cols(agg, scratch);
            fma_into(Kbar, scratch, rb, 1.0 / (a + 1));
            hadamard(K, rb, 1.0 / (a + 1), tmp);
            ecs_cols_adj(tmp, scratch);
            for (int b = 0; b < d_prev; ++b) add_into(bar_prev[(a - 1) * d_prev + b], scratch);
        }
        // extended-extended states
        for (int a = 1; a < d; ++a) {
            for (int b = 1; b < d; ++b) {
                const Matrix& rb = bar[a * d + b];
                const double c = 1.0 / ((a + 1.0) * (b + 1.0));
                fma_into(Kbar, prev[(a - 1) * d_prev + (b - 1)], rb, c);
                hadamard(K, rb, c, tmp);
                add_into(bar_prev[(a - 1) * d_prev + (b - 1)], tmp);
            }
        }
        bar.swap(bar_prev);
    }

    add_into(Kbar, bar[0]);
    return Kbar;
}

double sig_kernel(const Matrix& x_points, const Matrix& y_points, const SigKernelConfig& cfg) {
    cfg.validate();
    if (x_points.cols() < 2 || y_points.cols() < 2)
        throw invalid_input("sig_kernel: paths need at least 2 points");
    if (cfg.order == 0) return 1.0;
    const Matrix G = static_gram(x_points, y_points, cfg.static_kernel);
    return sig_kernel_from_increments(increment_matrix(G), cfg.order);
}

double sig_kernel(const AugmentedPath& x, const AugmentedPath& y, const SigKernelConfig& cfg) {
    return sig_kernel(x.channels(), y.channels(), cfg);
}

GramMatrix gram(const std::vector<Matrix>& X, const std::vector<Matrix>& Y,
                const SigKernelConfig& cfg, int threads) {
    cfg.validate();
    if (X.empty() || Y.empty()) throw invalid_input("gram: empty batch");
    GramMatrix out;
    out.config = cfg;
    out.entries.resize(X.size(), Y.size());
    const std::size_t ny = Y.size();
    parallel_for(X.size() * Y.size(), threads, [&](std::size_t idx) {
        const std::size_t i = idx / ny;
        const std::size_t j = idx % ny;
        out.entries(i, j) = sig_kernel(X[i], Y[j], cfg);
    });
    return out;
}

GramMatrix gram_symmetric(const std::vector<Matrix>& X, const SigKernelConfig& cfg, int threads) {
    cfg.validate();
    if (X.empty()) throw invalid_input("gram: empty batch");
    const std::size_t n = X.size();
    GramMatrix out;
    out.config = cfg;
    out.entries.resize(n, n);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n * (n + 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) pairs.emplace_back(i, j);
    }
    parallel_for(pairs.size(), threads, [&](std::size_t idx) {
        const auto [i, j] = pairs[idx];
        const double v = sig_kernel(X[i], X[j], cfg);
        out.entries(i, j) = v;
        out.entries(j, i) = v;
    });
    return out;
}

}  // namespace sigmmd
