#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sitent/crf.hpp"
#include "support.hpp"

using namespace sitent;
using namespace testsupport;

TEST_CASE("log partition of a single position with zero scores is log k") {
    for (std::size_t k : {2u, 7u}) {
        const auto t = TransitionParams::zeros(k);
        const Matrix e(1, k);
        CHECK(crf_log_partition(t, e) ==
              doctest::Approx(std::log(static_cast<double>(k))).epsilon(1e-12));
    }
}

TEST_CASE("log partition matches exhaustive enumeration") {
    Rng rng(41);
    for (std::size_t n = 1; n <= 5; ++n) {
        for (std::size_t k = 2; k <= 4; ++k) {
            for (int draw = 0; draw < 10; ++draw) {
                const auto t = random_transitions(k, rng);
                const Matrix e = random_matrix(n, k, rng);
                CHECK(std::fabs(crf_log_partition(t, e) - brute_log_partition(t, e)) < 1e-10);
            }
        }
    }
}

TEST_CASE("sequence probabilities sum to one under brute force") {
    Rng rng(42);
    for (int draw = 0; draw < 10; ++draw) {
        const std::size_t n = 1 + rng.uniform_int(4), k = 2 + rng.uniform_int(3);
        const auto t = random_transitions(k, rng);
        const Matrix e = random_matrix(n, k, rng);
        const double log_z = crf_log_partition(t, e);
        double total = 0.0;
        enumerate_sequences(n, k, [&](const std::vector<std::size_t>& y) {
            total += std::exp(crf_score(t, e, y) - log_z);
        });
        CHECK(std::fabs(total - 1.0) < 1e-9);
    }
}

TEST_CASE("forward-backward marginals match brute force") {
    Rng rng(43);
    for (int draw = 0; draw < 25; ++draw) {
        const std::size_t n = 2, k = 3;
        const auto t = random_transitions(k, rng);
        const Matrix e = random_matrix(n, k, rng);
        const Matrix mu = crf_marginals(t, e);
        const Matrix ref = brute_marginals(t, e);
        for (std::size_t i = 0; i < mu.size(); ++i) CHECK(std::fabs(mu.a[i] - ref.a[i]) < 1e-10);
    }
}

TEST_CASE("nll is non-negative and vanishes when gold takes all the mass") {
    const auto t = TransitionParams::zeros(3);
    Matrix e(2, 3);
    e(0, 1) = 50.0;
    e(1, 2) = 50.0;
    const std::vector<std::size_t> gold = {1, 2};
    const double loss = crf_nll(t, e, gold);
    CHECK(loss >= 0.0);
    CHECK(loss < 1e-8);

    Rng rng(44);
    for (int draw = 0; draw < 10; ++draw) {
        const auto tr = random_transitions(3, rng);
        const Matrix em = random_matrix(3, 3, rng);
        const std::vector<std::size_t> y = {rng.uniform_int(3), rng.uniform_int(3),
                                            rng.uniform_int(3)};
        CHECK(crf_nll(tr, em, y) >= 0.0);
    }
}

TEST_CASE("nll rejects mismatched label sequences") {
    const auto t = TransitionParams::zeros(3);
    const Matrix e(2, 3);
    CHECK_THROWS_AS(crf_nll(t, e, {0}), std::runtime_error);
}

TEST_CASE("gradient check: crf nll over emissions and transition parameters") {
    Rng rng(45);
    for (int draw = 0; draw < 25; ++draw) {
        const std::size_t n = 1 + rng.uniform_int(4), k = 2 + rng.uniform_int(3);
        auto t = random_transitions(k, rng);
        Matrix e = random_matrix(n, k, rng);
        std::vector<std::size_t> gold(n);
        for (auto& y : gold) y = rng.uniform_int(k);

        auto loss = [&]() { return crf_nll(t, e, gold); };

        Matrix dem(n, k);
        auto dpar = TransitionParams::zeros(k);
        crf_nll(t, e, gold, &dem, &dpar);

        auto params = crf_tensors(t);
        auto grads = crf_tensors(dpar);
        for (auto& tr : matrix_tensor(e, "emissions")) params.push_back(tr);
        for (auto& tr : matrix_tensor(dem, "emissions")) grads.push_back(tr);

        const auto rep = fd_check(params, grads, loss);
        CHECK_MESSAGE(rep.max_rel < 1e-4, rep.worst);
    }
}

TEST_CASE("viterbi with zero transitions is the per-step argmax") {
    Rng rng(46);
    const auto t = TransitionParams::zeros(4);
    const Matrix e = random_matrix(6, 4, rng);
    const auto path = viterbi_decode(t, e);
    for (std::size_t i = 0; i < e.rows; ++i) {
        std::size_t arg = 0;
        for (std::size_t j = 1; j < e.cols; ++j)
            if (e(i, j) > e(i, arg)) arg = j;
        CHECK(path[i] == arg);
    }
}

TEST_CASE("viterbi of a single position maximizes start + emission + end") {
    Rng rng(47);
    auto t = random_transitions(5, rng);
    const Matrix e = random_matrix(1, 5, rng);
    const auto path = viterbi_decode(t, e);
    std::size_t arg = 0;
    double best = -1e30;
    for (std::size_t j = 0; j < 5; ++j) {
        const double v = t.start[j] + e(0, j) + t.end[j];
        if (v > best) {
            best = v;
            arg = j;
        }
    }
    CHECK(path[0] == arg);
}

TEST_CASE("viterbi matches the exhaustive argmax") {
    Rng rng(48);
    for (int draw = 0; draw < 50; ++draw) {
        const std::size_t n = 1 + rng.uniform_int(4), k = 2 + rng.uniform_int(3);
        const auto t = random_transitions(k, rng);
        const Matrix e = random_matrix(n, k, rng);
        CHECK(viterbi_decode(t, e) == brute_viterbi(t, e));
    }

    // the spec's n=4, 5 labels setting: 625 sequences enumerated
    for (int draw = 0; draw < 10; ++draw) {
        const auto t = random_transitions(5, rng);
        const Matrix e = random_matrix(4, 5, rng);
        CHECK(viterbi_decode(t, e) == brute_viterbi(t, e));
    }
}

TEST_CASE("viterbi ties break toward the lower label index") {
    const auto t = TransitionParams::zeros(3);
    const Matrix e(3, 3);  // all zero: every sequence ties
    const auto path = viterbi_decode(t, e);
    CHECK(path == std::vector<std::size_t>{0, 0, 0});
}

TEST_CASE("viterbi path beats 1000 random paths") {
    Rng rng(49);
    const auto t = random_transitions(5, rng);
    const Matrix e = random_matrix(7, 5, rng);
    const double best = crf_score(t, e, viterbi_decode(t, e));
    for (int i = 0; i < 1000; ++i) {
        std::vector<std::size_t> y(7);
        for (auto& v : y) v = rng.uniform_int(5);
        CHECK(crf_score(t, e, y) <= best + 1e-12);
    }
}

TEST_CASE("adding a constant to every emission shifts log Z by n*c, Viterbi unchanged") {
    Rng rng(50);
    const auto t = random_transitions(4, rng);
    const Matrix e = random_matrix(5, 4, rng);
    const double c = 2.31;
    Matrix shifted = e;
    for (double& v : shifted.a) v += c;
    CHECK(crf_log_partition(t, shifted) ==
          doctest::Approx(crf_log_partition(t, e) + 5 * c).epsilon(1e-10));
    CHECK(viterbi_decode(t, shifted) == viterbi_decode(t, e));
}
