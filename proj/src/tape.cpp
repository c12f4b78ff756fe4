#include "sigmmd/tape.hpp"

#include <cmath>
#include <string>

#include "sigmmd/errors.hpp"

namespace sigmmd {

namespace {

Matrix broadcast_apply(const Matrix& a, const Matrix& b, double (*fn)(double, double)) {
    if (a.same_shape(b)) {
        Matrix out = a;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(a[i], b[i]);
        return out;
    }
    if (b.size() == 1) {
        Matrix out = a;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(a[i], b[0]);
        return out;
    }
    Matrix out = b;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(a[0], b[i]);
    return out;
}

}  // namespace

bool Tape::broadcast_compatible(const Matrix& a, const Matrix& b) {
    return a.same_shape(b) || a.size() == 1 || b.size() == 1;
}

void Tape::check_finite(const Matrix& m, const char* name) const {
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!std::isfinite(m[i])) {
            throw numeric_fault(std::string("tape: non-finite value produced by ") + name);
        }
    }
}

Value Tape::push(Node node, const char* name) {
    check_finite(node.value, name);
    node.grad = Matrix(node.value.rows(), node.value.cols());
    nodes_.push_back(std::move(node));
    return Value{nodes_.size() - 1};
}

Value Tape::input(Matrix v) {
    Node n;
    n.op = Op::leaf;
    n.value = std::move(v);
    n.needs_grad = true;
    return push(std::move(n), "input");
}

Value Tape::constant(Matrix v) {
    Node n;
    n.op = Op::constant;
    n.value = std::move(v);
    return push(std::move(n), "constant");
}

Value Tape::constant_scalar(double v) { return constant(Matrix(1, 1, v)); }

double Tape::scalar(Value v) const {
    const Matrix& m = value(v);
    if (m.size() != 1) throw invalid_input("tape: scalar() on non-1x1 value");
    return m[0];
}

Value Tape::add(Value a, Value b) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    if (!broadcast_compatible(va, vb)) throw invalid_input("tape add: shape mismatch");
    Node n;
    n.op = Op::add;
    n.a = a.idx;
    n.b = b.idx;
    n.value = broadcast_apply(va, vb, [](double x, double y) { return x + y; });
    n.needs_grad = nodes_[a.idx].needs_grad || nodes_[b.idx].needs_grad;
    return push(std::move(n), "add");
}

Value Tape::sub(Value a, Value b) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    if (!broadcast_compatible(va, vb)) throw invalid_input("tape sub: shape mismatch");
    Node n;
    n.op = Op::sub;
    n.a = a.idx;
    n.b = b.idx;
    n.value = broadcast_apply(va, vb, [](double x, double y) { return x - y; });
    n.needs_grad = nodes_[a.idx].needs_grad || nodes_[b.idx].needs_grad;
    return push(std::move(n), "sub");
}

Value Tape::mul(Value a, Value b) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    if (!broadcast_compatible(va, vb)) throw invalid_input("tape mul: shape mismatch");
    Node n;
    n.op = Op::mul;
    n.a = a.idx;
    n.b = b.idx;
    n.value = broadcast_apply(va, vb, [](double x, double y) { return x * y; });
    n.needs_grad = nodes_[a.idx].needs_grad || nodes_[b.idx].needs_grad;
    return push(std::move(n), "mul");
}

Value Tape::div(Value a, Value b) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    if (!broadcast_compatible(va, vb)) throw invalid_input("tape div: shape mismatch");
    Node n;
    n.op = Op::div;
    n.a = a.idx;
    n.b = b.idx;
    n.value = broadcast_apply(va, vb, [](double x, double y) { return x / y; });
    n.needs_grad = nodes_[a.idx].needs_grad || nodes_[b.idx].needs_grad;
    return push(std::move(n), "div");
}

Value Tape::matmul(Value a, Value b) {
    Node n;
    n.op = Op::matmul;
    n.a = a.idx;
    n.b = b.idx;
    n.value = sigmmd::matmul(value(a), value(b));
    n.needs_grad = nodes_[a.idx].needs_grad || nodes_[b.idx].needs_grad;
    return push(std::move(n), "matmul");
}

Value Tape::exp(Value a) {
    Node n;
    n.op = Op::exp;
    n.a = a.idx;
    n.value = value(a);
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = std::exp(n.value[i]);
    n.needs_grad = nodes_[a.idx].needs_grad;
    return push(std::move(n), "exp");
}

Value Tape::tanh(Value a) {
    Node n;
    n.op = Op::tanh;
    n.a = a.idx;
    n.value = value(a);
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = std::tanh(n.value[i]);
    n.needs_grad = nodes_[a.idx].needs_grad;
    return push(std::move(n), "tanh");
}

Value Tape::sigmoid(Value a) {
    Node n;
    n.op = Op::sigmoid;
    n.a = a.idx;
    n.value = value(a);
    for (std::size_t i = 0; i < n.value.size(); ++i) {
        n.value[i] = 1.0 / (1.0 + std::exp(-n.value[i]));
    }
    n.needs_grad = nodes_[a.idx].needs_grad;
    return push(std::move(n), "sigmoid");
}

Value Tape::pow(Value a, double exponent) {
    Node n;
    n.op = Op::pow;
    n.a = a.idx;
    n.aux = exponent;
    n.value = value(a);
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = std::pow(n.value[i], exponent);
    n.needs_grad = nodes_[a.idx].needs_grad;
    return push(std::move(n), "pow");
}

Value Tape::sqrt(Value a) {
    Node n;
    n.op = Op::sqrt;
    n.a = a.idx;
    n.value = value(a);
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = std::sqrt(n.value[i]);
    n.needs_grad = nodes_[a.idx].needs_grad;
    return push(std::move(n), "sqrt");
}

Value Tape::sum(Value a) {
    Node n;
    n.op = Op::sum;
    n.a = a.idx;
    n.value = Matrix(1, 1, value(a).sum());
    n.needs_grad = nodes_[a.idx].needs_grad;
    return push(std::move(n), "sum");
}

Value Tape::scale(Value a, double s) {
    Node n;
    n.op = Op::scale;
    n.a = a.idx;
    n.aux = s;
    n.value = value(a) * s;
    n.needs_grad = nodes_[a.idx].needs_grad;
    return push(std::move(n), "scale");
}

Value Tape::stack_rows(const std::vector<Value>& parts) {
    if (parts.empty()) throw invalid_input("tape stack_rows: empty parts");
    std::size_t rows = 0;
    const std::size_t cols = value(parts[0]).cols();
    for (Value p : parts) {
        if (value(p).cols() != cols) throw invalid_input("tape stack_rows: column mismatch");
        rows += value(p).rows();
    }
    Node n;
    n.op = Op::stack;
    n.value = Matrix(rows, cols);
    std::size_t r = 0;
    for (Value p : parts) {
        const Matrix& vp = value(p);
        for (std::size_t i = 0; i < vp.rows(); ++i) {
            for (std::size_t j = 0; j < cols; ++j) n.value(r + i, j) = vp(i, j);
        }
        r += vp.rows();
        n.multi.push_back(p.idx);
        n.needs_grad = n.needs_grad || nodes_[p.idx].needs_grad;
    }
    return push(std::move(n), "stack_rows");
}

Value Tape::slice_rows(Value a, std::size_t row0, std::size_t nrows) {
    const Matrix& va = value(a);
    if (row0 + nrows > va.rows()) throw invalid_input("tape slice_rows: out of range");
    Node n;
    n.op = Op::slice;
    n.a = a.idx;
    n.row0 = row0;
    n.value = Matrix(nrows, va.cols());
    for (std::size_t i = 0; i < nrows; ++i) {
        for (std::size_t j = 0; j < va.cols(); ++j) n.value(i, j) = va(row0 + i, j);
    }
    n.needs_grad = nodes_[a.idx].needs_grad;
    return push(std::move(n), "slice_rows");
}

Value Tape::gather_rows(Value a, const std::vector<std::size_t>& rows) {
    const Matrix& va = value(a);
    if (rows.empty()) throw invalid_input("tape gather_rows: empty index list");
    Node n;
    n.op = Op::gather;
    n.a = a.idx;
    n.multi.assign(rows.begin(), rows.end());
    n.value = Matrix(rows.size(), va.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= va.rows()) throw invalid_input("tape gather_rows: index out of range");
        for (std::size_t j = 0; j < va.cols(); ++j) n.value(i, j) = va(rows[i], j);
    }
    n.needs_grad = nodes_[a.idx].needs_grad;
    return push(std::move(n), "gather_rows");
}

Value Tape::cumsum_rows(Value a) {
    const Matrix& va = value(a);
    Node n;
    n.op = Op::cumsum;
    n.a = a.idx;
    n.value = Matrix(va.rows(), va.cols());
    for (std::size_t j = 0; j < va.cols(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < va.rows(); ++i) {
            acc += va(i, j);
            n.value(i, j) = acc;
        }
    }
    n.needs_grad = nodes_[a.idx].needs_grad;
    return push(std::move(n), "cumsum_rows");
}

Value Tape::custom(Matrix value, std::vector<Value> parents, CustomBackward backward,
                   const char* name) {
    Node n;
    n.op = Op::custom;
    n.value = std::move(value);
    for (Value p : parents) {
        n.multi.push_back(p.idx);
        n.needs_grad = n.needs_grad || nodes_[p.idx].needs_grad;
    }
    n.custom_backward = std::move(backward);
    return push(std::move(n), name);
}

void Tape::accumulate_grad(Value v, const Matrix& g) {
    Node& n = nodes_[v.idx];
    if (!n.needs_grad) return;
    if (!n.grad.same_shape(g)) throw invalid_input("tape accumulate_grad: shape mismatch");
    for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
}

// Adds g to the parent's grad, summing over broadcast if the parent is 1x1.
void Tape::add_reduced(std::size_t target, const Matrix& g) {
    Node& t = nodes_[target];
    if (!t.needs_grad) return;
    if (t.grad.same_shape(g)) {
        for (std::size_t i = 0; i < g.size(); ++i) t.grad[i] += g[i];
    } else {
        t.grad[0] += g.sum();
    }
}

void Tape::backprop_binary(const Node& n) {
    const Matrix& g = n.grad;
    const Matrix& va = nodes_[n.a].value;
    const Matrix& vb = nodes_[n.b].value;
    const auto at = [](const Matrix& m, std::size_t i) { return m.size() == 1 ? m[0] : m[i]; };
    Matrix ga(g.rows(), g.cols());
    Matrix gb(g.rows(), g.cols());
    switch (n.op) {
        case Op::add:
            add_reduced(n.a, g);
            add_reduced(n.b, g);
            return;
        case Op::sub:
            add_reduced(n.a, g);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] = -g[i];
            add_reduced(n.b, gb);
            return;
        case Op::mul:
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] = g[i] * at(vb, i);
                gb[i] = g[i] * at(va, i);
            }
            add_reduced(n.a, ga);
            add_reduced(n.b, gb);
            return;
        case Op::div:
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double bi = at(vb, i);
                ga[i] = g[i] / bi;
                gb[i] = -g[i] * at(va, i) / (bi * bi);
            }
            add_reduced(n.a, ga);
            add_reduced(n.b, gb);
            return;
        default:
            return;
    }
}

void Tape::backprop_node(std::size_t i) {
    Node& n = nodes_[i];
    const Matrix& g = n.grad;
    switch (n.op) {
        case Op::leaf:
        case Op::constant:
            return;
        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::div:
            backprop_binary(n);
            return;
        case Op::matmul: {
            const Matrix& va = nodes_[n.a].value;
            const Matrix& vb = nodes_[n.b].value;
            if (nodes_[n.a].needs_grad) {
                Matrix& ga = nodes_[n.a].grad;
                for (std::size_t r = 0; r < va.rows(); ++r) {
                    for (std::size_t c = 0; c < va.cols(); ++c) {
                        double acc = 0.0;
                        for (std::size_t k = 0; k < g.cols(); ++k) acc += g(r, k) * vb(c, k);
                        ga(r, c) += acc;
                    }
                }
            }
            if (nodes_[n.b].needs_grad) {
                Matrix& gb = nodes_[n.b].grad;
                for (std::size_t r = 0; r < vb.rows(); ++r) {
                    for (std::size_t c = 0; c < vb.cols(); ++c) {
                        double acc = 0.0;
                        for (std::size_t k = 0; k < va.rows(); ++k) acc += va(k, r) * g(k, c);
                        gb(r, c) += acc;
                    }
                }
            }
            return;
        }
        case Op::exp: {
            Matrix ga = g;
            for (std::size_t k = 0; k < ga.size(); ++k) ga[k] *= n.value[k];
            add_reduced(n.a, ga);
            return;
        }
        case Op::tanh: {
            Matrix ga = g;
            for (std::size_t k = 0; k < ga.size(); ++k) ga[k] *= 1.0 - n.value[k] * n.value[k];
            add_reduced(n.a, ga);
            return;
        }
        case Op::sigmoid: {
            Matrix ga = g;
            for (std::size_t k = 0; k < ga.size(); ++k) {
                ga[k] *= n.value[k] * (1.0 - n.value[k]);
            }
            add_reduced(n.a, ga);
            return;
        }
        case Op::pow: {
            const Matrix& va = nodes_[n.a].value;
            Matrix ga = g;
            for (std::size_t k = 0; k < ga.size(); ++k) {
                ga[k] *= n.aux * std::pow(va[k], n.aux - 1.0);
            }
            add_reduced(n.a, ga);
            return;
        }
        case Op::sqrt: {
            Matrix ga = g;
            for (std::size_t k = 0; k < ga.size(); ++k) ga[k] *= 0.5 / n.value[k];
            add_reduced(n.a, ga);
            return;
        }
        case Op::sum: {
            if (!nodes_[n.a].needs_grad) return;
            Matrix& ga = nodes_[n.a].grad;
            for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += g[0];
            return;
        }
        case Op::scale: {
            Matrix ga = g;
            for (std::size_t k = 0; k < ga.size(); ++k) ga[k] *= n.aux;
            add_reduced(n.a, ga);
            return;
        }
        case Op::stack: {
            std::size_t r = 0;
            for (std::size_t pi : n.multi) {
                Node& p = nodes_[pi];
                if (p.needs_grad) {
                    for (std::size_t a = 0; a < p.value.rows(); ++a) {
                        for (std::size_t b = 0; b < p.value.cols(); ++b) {
                            p.grad(a, b) += g(r + a, b);
                        }
                    }
                }
                r += p.value.rows();
            }
            return;
        }
        case Op::slice: {
            Node& p = nodes_[n.a];
            if (!p.needs_grad) return;
            for (std::size_t a = 0; a < g.rows(); ++a) {
                for (std::size_t b = 0; b < g.cols(); ++b) p.grad(n.row0 + a, b) += g(a, b);
            }
            return;
        }
        case Op::gather: {
            Node& p = nodes_[n.a];
            if (!p.needs_grad) return;
            for (std::size_t a = 0; a < g.rows(); ++a) {
                for (std::size_t b = 0; b < g.cols(); ++b) p.grad(n.multi[a], b) += g(a, b);
            }
            return;
        }
        case Op::cumsum: {
            Node& p = nodes_[n.a];
            if (!p.needs_grad) return;
            for (std::size_t b = 0; b < g.cols(); ++b) {
                double acc = 0.0;
                for (std::size_t a = g.rows(); a-- > 0;) {
                    acc += g(a, b);
                    p.grad(a, b) += acc;
                }
            }
            return;
        }
        case Op::custom: {
            std::vector<Value> parents;
            parents.reserve(n.multi.size());
            for (std::size_t pi : n.multi) parents.push_back(Value{pi});
            // copy: the callback may push nothing, but keep g stable anyway
            const Matrix gcopy = g;
            n.custom_backward(*this, gcopy, parents);
            return;
        }
    }
}

void Tape::backward(Value loss) {
    Node& top = nodes_[loss.idx];
    if (top.value.size() != 1) throw invalid_input("tape backward: loss must be 1x1");
    for (Node& n : nodes_) n.grad.fill(0.0);
    top.grad[0] = 1.0;
    for (std::size_t i = loss.idx + 1; i-- > 0;) {
        if (!nodes_[i].needs_grad) continue;
        backprop_node(i);
    }
    for (const Node& n : nodes_) {
        if (!n.needs_grad) continue;
        for (std::size_t k = 0; k < n.grad.size(); ++k) {
            if (!std::isfinite(n.grad[k])) throw numeric_fault("tape: non-finite gradient");
        }
    }
}

double grad_check(const TapeFn& f, const std::vector<Matrix>& point, double h) {
    if (h <= 0.0) throw invalid_input("grad_check: h must be > 0");

    const auto eval = [&](const std::vector<Matrix>& at) {
        Tape tape;
        std::vector<Value> inputs;
        inputs.reserve(at.size());
        for (const Matrix& m : at) inputs.push_back(tape.input(m));
        return tape.scalar(f(tape, inputs));
    };

    Tape tape;
    std::vector<Value> inputs;
    inputs.reserve(point.size());
    for (const Matrix& m : point) inputs.push_back(tape.input(m));
    const Value loss = f(tape, inputs);
    tape.backward(loss);

    double worst = 0.0;
    for (std::size_t p = 0; p < point.size(); ++p) {
        const Matrix& g = tape.grad(inputs[p]);
        for (std::size_t i = 0; i < point[p].size(); ++i) {
            std::vector<Matrix> plus = point, minus = point;
            plus[p][i] += h;
            minus[p][i] -= h;
            const double fd = (eval(plus) - eval(minus)) / (2.0 * h);
            const double denom = std::max({std::abs(g[i]), std::abs(fd), 1e-8});
            worst = std::max(worst, std::abs(g[i] - fd) / denom);
        }
    }
    return worst;
}

}  // namespace sigmmd
