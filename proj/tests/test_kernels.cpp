#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sitent/kernels.hpp"
#include "sitent/rng.hpp"

#include "support.hpp"

using namespace sitent;
using testsupport::random_matrix;

namespace {
std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}
}  // namespace

TEST_CASE("parallel kernels match the serial reference bitwise") {
    Rng rng(11);
    // sizes straddle the parallel cutoff in both directions
    const std::vector<std::pair<std::size_t, std::size_t>> shapes = {
        {3, 5}, {17, 31}, {1200, 343}, {1200, 600}, {7, 1}};
    for (auto [r, c] : shapes) {
        const Matrix w = random_matrix(r, c, rng);
        const auto x = random_vec(c, rng);
        const auto dy = random_vec(r, rng);

        auto y1 = random_vec(r, rng);
        auto y2 = y1;
        kernels::matvec_acc(w, x.data(), y1.data());
        kernels::ref::matvec_acc(w, x.data(), y2.data());
        CHECK(y1 == y2);

        auto dx1 = random_vec(c, rng);
        auto dx2 = dx1;
        kernels::matvec_t_acc(w, dy.data(), dx1.data());
        kernels::ref::matvec_t_acc(w, dy.data(), dx2.data());
        CHECK(dx1 == dx2);

        Matrix dw1 = random_matrix(r, c, rng);
        Matrix dw2 = dw1;
        kernels::outer_acc(dy.data(), x.data(), dw1);
        kernels::ref::outer_acc(dy.data(), x.data(), dw2);
        CHECK(dw1.a == dw2.a);
    }
}

TEST_CASE("force_serial reroutes through the reference path") {
    CHECK_FALSE(kernels::serial_forced());
    kernels::force_serial(true);
    CHECK(kernels::serial_forced());

    Rng rng(3);
    const Matrix w = random_matrix(40, 60, rng);
    const auto x = random_vec(60, rng);
    std::vector<double> y1(40, 0.0), y2(40, 0.0);
    kernels::matvec_acc(w, x.data(), y1.data());
    kernels::ref::matvec_acc(w, x.data(), y2.data());
    CHECK(y1 == y2);
    kernels::force_serial(false);
}

TEST_CASE("matvec_acc accumulates rather than overwrites") {
    Matrix w(2, 2);
    w(0, 0) = 1.0;
    w(1, 1) = 2.0;
    std::vector<double> x = {3.0, 4.0};
    std::vector<double> y = {10.0, 20.0};
    kernels::matvec_acc(w, x.data(), y.data());
    CHECK(y[0] == doctest::Approx(13.0));
    CHECK(y[1] == doctest::Approx(28.0));
}

TEST_CASE("dot") {
    std::vector<double> a = {1.0, 2.0, 3.0};
    std::vector<double> b = {4.0, 5.0, 6.0};
    CHECK(kernels::dot(a.data(), b.data(), 3) == doctest::Approx(32.0));
}
