#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "sigmmd/errors.hpp"
#include "sigmmd/rng.hpp"
#include "sigmmd/tape.hpp"

using namespace sigmmd;

TEST_CASE("square of three") {
    Tape t;
    const Value x = t.input(Matrix(1, 1, 3.0));
    const Value y = t.mul(x, x);
    CHECK(t.scalar(y) == 9.0);
    t.backward(y);
    CHECK(t.grad(x)[0] == 6.0);
}

TEST_CASE("sigmoid at zero") {
    Tape t;
    const Value x = t.input(Matrix(1, 1, 0.0));
    const Value y = t.sigmoid(x);
    CHECK(t.scalar(y) == 0.5);
    t.backward(y);
    CHECK(t.grad(x)[0] == 0.25);
}

TEST_CASE("linear function grad_check is exact") {
    const TapeFn f = [](Tape& t, const std::vector<Value>& in) {
        const Value w = t.constant(Matrix{{2.0, -3.0, 0.5}});
        return t.sum(t.matmul(w, in[0]));
    };
    const double err = grad_check(f, {Matrix{{1.0}, {2.0}, {3.0}}}, 1e-5);
    CHECK(err < 1e-10);
}

TEST_CASE("exp at one") {
    const TapeFn f = [](Tape& t, const std::vector<Value>& in) { return t.sum(t.exp(in[0])); };
    const double err = grad_check(f, {Matrix(1, 1, 1.0)}, 1e-5);
    CHECK(err < 1e-7);
}

TEST_CASE("every primitive matches finite differences at random points") {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.uniform_int(4);
        Matrix a(n, 1), b(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            a(i, 0) = rng.uniform(-1.5, 1.5);
            b(i, 0) = rng.uniform(0.3, 2.0);  // safe for div/sqrt/pow
        }
        const TapeFn f = [n](Tape& t, const std::vector<Value>& in) {
            const Value add = t.add(in[0], in[1]);
            const Value sub = t.sub(in[0], in[1]);
            const Value mul = t.mul(in[0], in[1]);
            const Value div = t.div(in[0], in[1]);
            const Value ex = t.exp(in[0]);
            const Value th = t.tanh(in[0]);
            const Value sg = t.sigmoid(in[0]);
            const Value pw = t.pow(in[1], 1.7);
            const Value sq = t.sqrt(in[1]);
            const Value cs = t.cumsum_rows(in[0]);
            const Value st = t.stack_rows({add, sub, mul, div, ex, th, sg, pw, sq, cs});
            const Value sl = t.slice_rows(st, 2, 3 * n);
            return t.sum(t.mul(sl, sl));
        };
        const double err = grad_check(f, {a, b}, 1e-6);
        CHECK(err < 1e-6);
    }
}

TEST_CASE("matmul gradient") {
    Rng rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix w(3, 4), x(4, 2);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.normal();
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
        const TapeFn f = [](Tape& t, const std::vector<Value>& in) {
            const Value y = t.matmul(in[0], in[1]);
            return t.sum(t.mul(y, y));
        };
        CHECK(grad_check(f, {w, x}, 1e-6) < 1e-6);
    }
}

TEST_CASE("scalar broadcast in binary ops") {
    const TapeFn f = [](Tape& t, const std::vector<Value>& in) {
        const Value shifted = t.sub(in[0], in[1]);       // vector minus scalar
        const Value scaled = t.mul(shifted, in[1]);      // vector times scalar
        const Value ratio = t.div(scaled, in[1]);        // vector over scalar
        const Value flipped = t.sub(in[1], in[0]);       // scalar minus vector
        return t.add(t.sum(ratio), t.sum(t.mul(flipped, flipped)));
    };
    const double err = grad_check(f, {Matrix{{1.0}, {2.0}, {-0.5}}, Matrix(1, 1, 0.7)}, 1e-6);
    CHECK(err < 1e-6);
}

TEST_CASE("sum of losses has summed gradient") {
    Matrix x0{{0.4}, {-0.2}};
    Tape t;
    const Value x = t.input(x0);
    const Value l1 = t.sum(t.mul(x, x));
    const Value l2 = t.sum(t.exp(x));

    Tape t1;
    const Value x1 = t1.input(x0);
    t1.backward(t1.sum(t1.mul(x1, x1)));
    Tape t2;
    const Value x2 = t2.input(x0);
    t2.backward(t2.sum(t2.exp(x2)));

    t.backward(t.add(l1, l2));
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(t.grad(x)[i] ==
              doctest::Approx(t1.grad(x1)[i] + t2.grad(x2)[i]).epsilon(1e-14));
    }
}

TEST_CASE("disconnected parameters get zero gradient") {
    Tape t;
    const Value used = t.input(Matrix(1, 1, 2.0));
    const Value unused = t.input(Matrix(3, 1, 1.0));
    const Value loss = t.mul(used, used);
    t.backward(loss);
    for (std::size_t i = 0; i < 3; ++i) CHECK(t.grad(unused)[i] == 0.0);
}

TEST_CASE("one LSTM gate step with zero parameters and zero state") {
    // gates sigmoid(0) = 0.5, candidate tanh(0) = 0, so h' stays zero
    const std::size_t h = 4, d = 3;
    Tape t;
    const Value W = t.input(Matrix(h, d));
    const Value U = t.input(Matrix(h, h));
    const Value b = t.input(Matrix(h, 1));
    const Value x = t.constant(Matrix(d, 1, 0.3));
    const Value hprev = t.constant(Matrix(h, 1));
    const Value cprev = t.constant(Matrix(h, 1));

    const Value pre = t.add(t.add(t.matmul(W, x), t.matmul(U, hprev)), b);
    const Value gate = t.sigmoid(pre);
    const Value cand = t.tanh(pre);
    const Value cnext = t.add(t.mul(gate, cprev), t.mul(gate, cand));
    const Value hnext = t.mul(gate, t.tanh(cnext));
    for (std::size_t i = 0; i < h; ++i) {
        CHECK(t.value(gate)[i] == 0.5);
        CHECK(t.value(hnext)[i] == 0.0);
    }
}

TEST_CASE("gather_rows picks rows and scatter-adds the adjoint") {
    Tape t;
    const Value x = t.input(Matrix{{1.0, 10.0}, {2.0, 20.0}, {3.0, 30.0}});
    const Value g = t.gather_rows(x, {2, 0, 0, 1});
    const Matrix& vg = t.value(g);
    REQUIRE(vg.rows() == 4);
    REQUIRE(vg.cols() == 2);
    CHECK(vg(0, 0) == 3.0);
    CHECK(vg(1, 1) == 10.0);
    CHECK(vg(2, 0) == 1.0);
    CHECK(vg(3, 1) == 20.0);

    // loss = sum of gathered entries; each source row collects one unit of
    // adjoint per time it was picked
    t.backward(t.sum(g));
    CHECK(t.grad(x)(0, 0) == 2.0);
    CHECK(t.grad(x)(0, 1) == 2.0);
    CHECK(t.grad(x)(1, 0) == 1.0);
    CHECK(t.grad(x)(2, 0) == 1.0);
}

TEST_CASE("gather_rows gradient matches finite differences with repeats") {
    const TapeFn f = [](Tape& t, const std::vector<Value>& in) {
        const Value g = t.gather_rows(in[0], {0, 3, 3, 1, 0});
        return t.sum(t.mul(g, g));
    };
    const double err = grad_check(f, {Matrix{{0.4}, {-1.1}, {2.0}, {0.7}}}, 1e-6);
    CHECK(err < 1e-7);
}

TEST_CASE("gather_rows validation") {
    Tape t;
    const Value x = t.input(Matrix(3, 1));
    CHECK_THROWS_AS(t.gather_rows(x, {0, 3}), invalid_input);
    CHECK_THROWS_AS(t.gather_rows(x, {}), invalid_input);
}

TEST_CASE("non-finite forward raises numeric fault naming the op") {
    Tape t;
    const Value x = t.input(Matrix(1, 1, 1000.0));
    try {
        const Value y = t.exp(x);
        (void)y;
        FAIL("expected numeric_fault");
    } catch (const numeric_fault& e) {
        CHECK(std::string(e.what()).find("exp") != std::string::npos);
    }
}

TEST_CASE("shape errors") {
    Tape t;
    const Value a = t.input(Matrix(2, 1));
    const Value b = t.input(Matrix(3, 1));
    CHECK_THROWS_AS(t.add(a, b), invalid_input);
    CHECK_THROWS_AS(t.matmul(a, b), invalid_input);
    CHECK_THROWS_AS(t.backward(a), invalid_input);
}
