#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sitent/nncore.hpp"
#include "support.hpp"

using namespace sitent;
using namespace testsupport;

namespace {

// independent scalar-arithmetic oracle for one LSTM step
void scalar_lstm_step(const LstmCellParams& p, const double* x, const double* h_prev,
                      const double* c_prev, double* h_out, double* c_out) {
    const std::size_t hd = p.hidden_dim, d = p.input_dim;
    for (std::size_t j = 0; j < hd; ++j) {
        double pre[4];
        for (int g = 0; g < 4; ++g) {
            const std::size_t row = g * hd + j;
            pre[g] = p.b[row];
            for (std::size_t m = 0; m < d; ++m) pre[g] += p.w_x(row, m) * x[m];
            for (std::size_t m = 0; m < hd; ++m) pre[g] += p.w_h(row, m) * h_prev[m];
        }
        const double gi = 1.0 / (1.0 + std::exp(-pre[0]));
        const double gf = 1.0 / (1.0 + std::exp(-pre[1]));
        const double gg = std::tanh(pre[2]);
        const double go = 1.0 / (1.0 + std::exp(-pre[3]));
        c_out[j] = gf * c_prev[j] + gi * gg;
        h_out[j] = go * std::tanh(c_out[j]);
    }
}

LstmCellParams random_cell(std::size_t d, std::size_t h, Rng& rng) {
    auto p = LstmCellParams::zeros(d, h);
    for (double& v : p.w_x.a) v = rng.uniform(-0.5, 0.5);
    for (double& v : p.w_h.a) v = rng.uniform(-0.5, 0.5);
    for (double& v : p.b) v = rng.uniform(-0.5, 0.5);
    return p;
}

BiLstmParams random_bilstm(std::size_t d, std::size_t h, Rng& rng) {
    BiLstmParams p = BiLstmParams::zeros(d, h);
    p.fwd = random_cell(d, h, rng);
    p.bwd = random_cell(d, h, rng);
    return p;
}

}  // namespace

TEST_CASE("lstm_cell_step: zero parameters and states give zero outputs") {
    auto p = LstmCellParams::zeros(3, 2);
    std::vector<double> x(3, 0.0), h(2, 0.0), c(2, 0.0), ho(2), co(2);
    lstm_cell_step(p, x.data(), h.data(), c.data(), ho.data(), co.data());
    CHECK(ho == std::vector<double>{0.0, 0.0});
    CHECK(co == std::vector<double>{0.0, 0.0});
}

TEST_CASE("lstm_cell_step: saturated forget gate carries the cell state") {
    auto p = LstmCellParams::zeros(2, 2);
    // forget gate saturated open, input gate saturated shut
    std::fill(p.b.begin() + 2, p.b.begin() + 4, 1000.0);
    std::fill(p.b.begin(), p.b.begin() + 2, -1000.0);
    std::vector<double> x(2, 0.0), h(2, 0.0), c = {0.7, -0.4}, ho(2), co(2);
    lstm_cell_step(p, x.data(), h.data(), c.data(), ho.data(), co.data());
    CHECK(co[0] == 0.7);
    CHECK(co[1] == -0.4);
}

TEST_CASE("lstm_cell_step matches the scalar oracle to 1e-12") {
    Rng rng(21);
    for (int draw = 0; draw < 20; ++draw) {
        const auto p = random_cell(4, 3, rng);
        std::vector<double> x(4), h(3), c(3);
        for (auto& v : x) v = rng.uniform(-1, 1);
        for (auto& v : h) v = rng.uniform(-1, 1);
        for (auto& v : c) v = rng.uniform(-1, 1);
        std::vector<double> ho(3), co(3), ho_ref(3), co_ref(3);
        lstm_cell_step(p, x.data(), h.data(), c.data(), ho.data(), co.data());
        scalar_lstm_step(p, x.data(), h.data(), c.data(), ho_ref.data(), co_ref.data());
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(std::fabs(ho[j] - ho_ref[j]) < 1e-12);
            CHECK(std::fabs(co[j] - co_ref[j]) < 1e-12);
            CHECK(std::fabs(ho[j]) < 1.0);
        }
    }
}

TEST_CASE("lstm_cell_step rejects inconsistent shapes") {
    auto p = LstmCellParams::zeros(3, 2);
    p.b.resize(5);
    std::vector<double> x(3, 0.0), h(2, 0.0), c(2, 0.0), ho(2), co(2);
    CHECK_THROWS_AS(lstm_cell_step(p, x.data(), h.data(), c.data(), ho.data(), co.data()),
                    std::runtime_error);
}

TEST_CASE("bilstm_forward: length-1 input concatenates single steps") {
    Rng rng(5);
    const auto p = random_bilstm(3, 2, rng);
    const Matrix xs = random_matrix(1, 3, rng);
    const Matrix out = bilstm_forward(p, xs);
    REQUIRE(out.rows == 1);
    REQUIRE(out.cols == 4);

    std::vector<double> zeros(2, 0.0), ho(2), co(2);
    lstm_cell_step(p.fwd, xs.row(0), zeros.data(), zeros.data(), ho.data(), co.data());
    CHECK(out(0, 0) == ho[0]);
    CHECK(out(0, 1) == ho[1]);
    lstm_cell_step(p.bwd, xs.row(0), zeros.data(), zeros.data(), ho.data(), co.data());
    CHECK(out(0, 2) == ho[0]);
    CHECK(out(0, 3) == ho[1]);
}

TEST_CASE("bilstm_forward: zero parameters give a zero matrix") {
    const auto p = BiLstmParams::zeros(3, 2);
    Rng rng(6);
    const Matrix xs = random_matrix(4, 3, rng);
    const Matrix out = bilstm_forward(p, xs);
    for (double v : out.a) CHECK(v == 0.0);
}

TEST_CASE("bilstm_forward: reversing input and swapping directions mirrors the output") {
    Rng rng(7);
    const std::size_t len = 5, h = 3;
    const auto p = random_bilstm(4, h, rng);
    const Matrix xs = random_matrix(len, 4, rng);

    BiLstmParams swapped = p;
    std::swap(swapped.fwd, swapped.bwd);
    Matrix rev(len, 4);
    for (std::size_t t = 0; t < len; ++t)
        std::copy(xs.row(len - 1 - t), xs.row(len - 1 - t) + 4, rev.row(t));

    const Matrix a = bilstm_forward(p, xs);
    const Matrix b = bilstm_forward(swapped, rev);
    for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t j = 0; j < h; ++j) {
            CHECK(b(t, j) == a(len - 1 - t, h + j));
            CHECK(b(t, h + j) == a(len - 1 - t, j));
        }
    }
}

TEST_CASE("bilstm_forward: forward block is causal, backward block anti-causal") {
    Rng rng(8);
    const std::size_t len = 6, h = 2;
    const auto p = random_bilstm(3, h, rng);
    const Matrix xs = random_matrix(len, 3, rng);
    const Matrix base = bilstm_forward(p, xs);

    const std::size_t t0 = 3;
    Matrix perturbed = xs;
    perturbed(t0, 1) += 0.37;
    const Matrix out = bilstm_forward(p, perturbed);
    for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t j = 0; j < h; ++j) {
            if (t < t0) CHECK(out(t, j) == base(t, j));          // forward depends on [0..t]
            if (t > t0) CHECK(out(t, h + j) == base(t, h + j));  // backward depends on [t..L)
        }
    }
}

TEST_CASE("span_max_pool worked examples") {
    Matrix h(3, 2);
    h(0, 0) = 1;  h(0, 1) = -2;
    h(1, 0) = 3;  h(1, 1) = 0;
    h(2, 0) = 2;  h(2, 1) = 5;

    const std::vector<Span> spans = {{0, 3}};
    const Matrix pooled = span_max_pool(h, spans);
    CHECK(pooled(0, 0) == 3);
    CHECK(pooled(0, 1) == 5);

    const Matrix single = span_max_pool(h, {{1, 2}});
    CHECK(single(0, 0) == 3);
    CHECK(single(0, 1) == 0);

    // mask excluding row 1
    const std::vector<std::uint8_t> exclude = {0, 1, 0};
    const Matrix masked = span_max_pool(h, spans, &exclude);
    CHECK(masked(0, 0) == 2);
    CHECK(masked(0, 1) == 5);

    // fully excluded span falls back to the unmasked max
    const std::vector<std::uint8_t> all = {1, 1, 1};
    const Matrix fallback = span_max_pool(h, spans, &all);
    CHECK(fallback(0, 0) == 3);
    CHECK(fallback(0, 1) == 5);

    CHECK_THROWS_AS(span_max_pool(h, {{2, 2}}), std::runtime_error);
}

TEST_CASE("span_max_pool never decreases when a span grows") {
    Rng rng(9);
    const Matrix h = random_matrix(8, 5, rng);
    for (std::size_t end = 2; end <= 8; ++end) {
        const Matrix small = span_max_pool(h, {{0, end - 1}});
        const Matrix big = span_max_pool(h, {{0, end}});
        for (std::size_t j = 0; j < 5; ++j) CHECK(big(0, j) >= small(0, j));
    }
}

TEST_CASE("span_max_pool backward routes to the first argmax row only") {
    Matrix h(2, 2);
    h(0, 0) = 1;  h(0, 1) = 5;
    h(1, 0) = 3;  h(1, 1) = 5;  // tie in component 1
    MaxPoolTape tape;
    span_max_pool(h, {{0, 2}}, nullptr, &tape);
    CHECK(tape.argmax[0][0] == 1);
    CHECK(tape.argmax[0][1] == 0);  // first maximal row wins the tie

    Matrix dpool(1, 2);
    dpool(0, 0) = 10;
    dpool(0, 1) = 20;
    Matrix dh(2, 2);
    span_max_pool_backward(tape, dpool, dh);
    CHECK(dh(0, 0) == 0);
    CHECK(dh(0, 1) == 20);
    CHECK(dh(1, 0) == 10);
    CHECK(dh(1, 1) == 0);  // non-argmax rows receive exactly zero
}

TEST_CASE("affine_softmax basics") {
    auto p = AffineParams::zeros(4, kNumLabels);
    std::vector<double> h = {0.3, -0.2, 0.9, 0.1};

    auto probs = affine_softmax(p, h.data());
    double sum = 0.0;
    for (double v : probs) {
        CHECK(v == doctest::Approx(1.0 / 7.0));
        sum += v;
    }
    CHECK(std::fabs(sum - 1.0) < 1e-12);

    p.b[0] = 10.0;
    probs = affine_softmax(p, h.data());
    CHECK(probs[0] > 0.999);

    // shift invariance
    Rng rng(10);
    std::vector<double> logits(kNumLabels);
    for (auto& v : logits) v = rng.uniform(-2, 2);
    auto a = softmax(logits);
    for (auto& v : logits) v += 13.5;
    auto b = softmax(logits);
    for (std::size_t i = 0; i < kNumLabels; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("softmax cross-entropy gradient equals probabilities minus target") {
    Rng rng(12);
    std::vector<double> logits(5);
    for (auto& v : logits) v = rng.uniform(-2, 2);
    std::vector<double> grad(5, 0.0);
    softmax_nll(logits, 2, grad.data());
    const auto probs = softmax(logits);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(grad[i] == doctest::Approx(probs[i] - (i == 2 ? 1.0 : 0.0)).epsilon(1e-12));
}

TEST_CASE("dropout: rate zero and inference mode are the identity") {
    Rng rng(13);
    const Matrix x = random_matrix(4, 6, rng);

    Matrix a = x;
    Rng r1(1);
    dropout_forward({0.0, true, 0}, &r1, a, nullptr);
    CHECK(a.a == x.a);

    Matrix b = x;
    Rng r2(1);
    dropout_forward({0.5, false, 0}, &r2, b, nullptr);
    CHECK(b.a == x.a);

    const Matrix c = dropout_apply({0.5, false, 99}, x);
    CHECK(c.a == x.a);
}

TEST_CASE("dropout zeroes the stated fraction and scales survivors") {
    Matrix x(1000, 1000, 1.0);
    const Matrix y = dropout_apply({0.5, true, 4242}, x);
    std::size_t zeros = 0;
    for (double v : y.a) {
        if (v == 0.0)
            ++zeros;
        else
            CHECK(v == doctest::Approx(2.0));
    }
    const double frac = static_cast<double>(zeros) / 1e6;
    CHECK(frac > 0.498);
    CHECK(frac < 0.502);
}

TEST_CASE("gradient check: lstm sequence run") {
    Rng rng(31);
    for (int draw = 0; draw < 25; ++draw) {
        const std::size_t len = 1 + draw % 4, d = 3, h = 3;
        auto p = random_cell(d, h, rng);
        const Matrix xs = random_matrix(len, d, rng);
        const Matrix coeff = random_matrix(len, h, rng);

        auto loss = [&]() {
            Matrix out(len, h);
            lstm_run(p, xs, 0, len, false, out, 0);
            double s = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) s += out.a[i] * coeff.a[i];
            return s;
        };

        LstmTape tape;
        Matrix out(len, h);
        lstm_run(p, xs, 0, len, false, out, 0, &tape);
        auto grads = LstmCellParams::zeros(d, h);
        lstm_backward(p, xs, tape, coeff, 0, grads, nullptr);

        const auto rep = fd_check(cell_tensors(p, "cell"), cell_tensors(grads, "cell"), loss);
        CHECK_MESSAGE(rep.max_rel < 1e-4, rep.worst);
    }
}

TEST_CASE("gradient check: bilstm including input gradients") {
    Rng rng(32);
    const std::size_t len = 4, d = 3, h = 2;
    auto p = random_bilstm(d, h, rng);
    Matrix xs = random_matrix(len, d, rng);
    const Matrix coeff = random_matrix(len, 2 * h, rng);

    auto loss = [&]() {
        const Matrix out = bilstm_forward(p, xs);
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out.a[i] * coeff.a[i];
        return s;
    };

    BiLstmTape tape;
    bilstm_forward(p, xs, &tape);
    auto grads = BiLstmParams::zeros(d, h);
    Matrix dxs(len, d);
    bilstm_backward(p, xs, tape, coeff, grads, &dxs);

    auto params = bilstm_tensors(p);
    auto gradrefs = bilstm_tensors(grads);
    for (auto& t : matrix_tensor(xs, "xs")) params.push_back(t);
    for (auto& t : matrix_tensor(dxs, "xs")) gradrefs.push_back(t);

    const auto rep = fd_check(params, gradrefs, loss);
    CHECK_MESSAGE(rep.max_rel < 1e-4, rep.worst);
}

TEST_CASE("gradient check: span max pooling input gradients") {
    Rng rng(33);
    for (int draw = 0; draw < 25; ++draw) {
        Matrix h = random_matrix(6, 4, rng, -2.0, 2.0);
        const std::vector<Span> spans = {{0, 2}, {2, 6}};
        const Matrix coeff = random_matrix(2, 4, rng);

        // keep the top two rows per component well separated so the finite
        // difference cannot cross the argmax
        bool ok = true;
        for (const auto& span : spans) {
            for (std::size_t j = 0; j < 4 && ok; ++j) {
                double best = -1e30, second = -1e30;
                for (std::size_t t = span.begin; t < span.end; ++t) {
                    if (h(t, j) > best) {
                        second = best;
                        best = h(t, j);
                    } else if (h(t, j) > second) {
                        second = h(t, j);
                    }
                }
                if (best - second < 1e-3) ok = false;
            }
        }
        if (!ok) continue;

        auto loss = [&]() {
            const Matrix pooled = span_max_pool(h, spans);
            double s = 0.0;
            for (std::size_t i = 0; i < pooled.size(); ++i) s += pooled.a[i] * coeff.a[i];
            return s;
        };

        MaxPoolTape tape;
        span_max_pool(h, spans, nullptr, &tape);
        Matrix dh(6, 4);
        span_max_pool_backward(tape, coeff, dh);

        const auto rep = fd_check(matrix_tensor(h, "h"), matrix_tensor(dh, "h"), loss);
        CHECK_MESSAGE(rep.max_rel < 1e-4, rep.worst);
    }
}

TEST_CASE("gradient check: affine + softmax cross-entropy") {
    Rng rng(34);
    for (int draw = 0; draw < 25; ++draw) {
        auto p = AffineParams::zeros(5, kNumLabels);
        p.init(rng);
        std::vector<double> h(5);
        for (auto& v : h) v = rng.uniform(-1, 1);
        const std::size_t gold = rng.uniform_int(kNumLabels);

        auto loss = [&]() { return softmax_nll(affine_forward(p, h.data()), gold); };

        auto grads = AffineParams::zeros(5, kNumLabels);
        std::vector<double> dlogits(kNumLabels, 0.0), dh(5, 0.0);
        softmax_nll(affine_forward(p, h.data()), gold, dlogits.data());
        affine_backward(p, h.data(), dlogits.data(), grads, dh.data());

        auto params = affine_tensors(p);
        auto gradrefs = affine_tensors(grads);
        params.push_back({"h", h.data(), h.size(), false});
        gradrefs.push_back({"h", dh.data(), dh.size(), false});

        const auto rep = fd_check(params, gradrefs, loss);
        CHECK_MESSAGE(rep.max_rel < 1e-4, rep.worst);
    }
}

TEST_CASE("gradient check: dropout with a replayed mask") {
    Rng rng(35);
    Matrix x = random_matrix(3, 4, rng);
    const Matrix coeff = random_matrix(3, 4, rng);
    const DropoutSpec spec{0.5, true, 777};

    auto loss = [&]() {
        const Matrix y = dropout_apply(spec, x);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += y.a[i] * coeff.a[i];
        return s;
    };

    Matrix forwarded = x;
    DropoutMask mask;
    Rng drng(spec.seed);
    dropout_forward(spec, &drng, forwarded, &mask);
    Matrix dx = coeff;
    dropout_backward(mask, dx);

    const auto rep = fd_check(matrix_tensor(x, "x"), matrix_tensor(dx, "x"), loss);
    CHECK_MESSAGE(rep.max_rel < 1e-4, rep.worst);
}
