#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sigmmd/matrix.hpp"

using sigmmd::Matrix;

TEST_CASE("construction and indexing") {
    Matrix m(2, 3, 1.5);
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m(1, 2) == 1.5);
    m(0, 1) = -2.0;
    CHECK(m(0, 1) == -2.0);
    CHECK(m.sum() == doctest::Approx(1.5 * 6 - 3.5));
}

TEST_CASE("initializer list and literals") {
    Matrix m{{1.0, 2.0}, {3.0, 4.0}};
    CHECK(m(0, 0) == 1.0);
    CHECK(m(1, 1) == 4.0);
    CHECK_THROWS_AS((Matrix{{1.0}, {2.0, 3.0}}), sigmmd::invalid_input);
}

TEST_CASE("arithmetic") {
    Matrix a{{1.0, 2.0}, {3.0, 4.0}};
    Matrix b{{5.0, 6.0}, {7.0, 8.0}};
    const Matrix s = a + b;
    CHECK(s(0, 0) == 6.0);
    const Matrix d = b - a;
    CHECK(d(1, 1) == 4.0);
    CHECK_THROWS_AS(a + Matrix(1, 2), sigmmd::invalid_input);
}

TEST_CASE("matmul") {
    Matrix a{{1.0, 2.0}, {3.0, 4.0}};
    Matrix v{{1.0}, {1.0}};
    const Matrix r = matmul(a, v);
    CHECK(r.rows() == 2);
    CHECK(r.cols() == 1);
    CHECK(r(0, 0) == 3.0);
    CHECK(r(1, 0) == 7.0);
    CHECK_THROWS_AS(matmul(a, Matrix(3, 1)), sigmmd::invalid_input);
}
