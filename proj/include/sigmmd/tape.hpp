#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "sigmmd/matrix.hpp"

namespace sigmmd {

class Tape;

// Handle into a Tape. Cheap to copy; owns nothing.
struct Value {
    std::size_t idx = static_cast<std::size_t>(-1);
};

// Reverse-mode tape over matrix-valued nodes. Binary elementwise ops accept
// equal shapes or a 1x1 operand, which is broadcast. Nodes are recorded in
// evaluation order, so a single reverse sweep propagates adjoints.
class Tape {
  public:
    using CustomBackward =
        std::function<void(Tape&, const Matrix& out_grad, const std::vector<Value>& parents)>;

    Value input(Matrix v);
    Value constant(Matrix v);
    Value constant_scalar(double v);

    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value mul(Value a, Value b);
    Value div(Value a, Value b);
    Value matmul(Value a, Value b);
    Value exp(Value a);
    Value tanh(Value a);
    Value sigmoid(Value a);
    Value pow(Value a, double exponent);
    Value sqrt(Value a);
    Value sum(Value a);
    Value scale(Value a, double s);
    Value stack_rows(const std::vector<Value>& parts);
    Value slice_rows(Value a, std::size_t row0, std::size_t nrows);
    Value gather_rows(Value a, const std::vector<std::size_t>& rows);
    Value cumsum_rows(Value a);

    // Escape hatch for fused operations (the signature-kernel pair op): the
    // node's value is precomputed and `backward` distributes its adjoint to
    // the parents via accumulate_grad.
    Value custom(Matrix value, std::vector<Value> parents, CustomBackward backward,
                 const char* name);

    void backward(Value loss);

    const Matrix& value(Value v) const { return nodes_[v.idx].value; }
    const Matrix& grad(Value v) const { return nodes_[v.idx].grad; }
    double scalar(Value v) const;
    bool requires_grad(Value v) const { return nodes_[v.idx].needs_grad; }
    void accumulate_grad(Value v, const Matrix& g);
    std::size_t size() const { return nodes_.size(); }

  private:
    enum class Op : unsigned char {
        leaf,
        constant,
        add,
        sub,
        mul,
        div,
        matmul,
        exp,
        tanh,
        sigmoid,
        pow,
        sqrt,
        sum,
        scale,
        stack,
        slice,
        gather,
        cumsum,
        custom
    };

    struct Node {
        Op op = Op::leaf;
        Matrix value;
        Matrix grad;
        std::size_t a = npos;
        std::size_t b = npos;
        std::vector<std::size_t> multi;
        double aux = 0.0;
        std::size_t row0 = 0;
        CustomBackward custom_backward;
        bool needs_grad = false;
    };

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    Value push(Node node, const char* name);
    void check_finite(const Matrix& m, const char* name) const;
    static bool broadcast_compatible(const Matrix& a, const Matrix& b);
    void backprop_binary(const Node& n);
    void backprop_node(std::size_t i);
    void add_reduced(std::size_t target, const Matrix& g);

    std::vector<Node> nodes_;
};

// Builds a scalar loss on a fresh tape from differentiable inputs.
using TapeFn = std::function<Value(Tape&, const std::vector<Value>&)>;

// Compares backward() against central finite differences, component by
// component. Relative error uses a max(|analytic|, |numeric|, 1e-8)
// denominator; returns the worst component.
double grad_check(const TapeFn& f, const std::vector<Matrix>& point, double h);

}  // namespace sigmmd
