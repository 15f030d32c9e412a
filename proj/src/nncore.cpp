#include "sitent/nncore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sitent/kernels.hpp"

namespace sitent {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log_sum_exp(const double* v, std::size_t n) {
    double m = v[0];
    for (std::size_t i = 1; i < n; ++i) m = std::max(m, v[i]);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
    return m + std::log(s);
}

namespace {

void glorot_init(Matrix& w, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
    for (double& v : w.a) v = rng.uniform(-bound, bound);
}

}  // namespace

LstmCellParams LstmCellParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
    LstmCellParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.w_x = Matrix(4 * hidden_dim, input_dim);
    p.w_h = Matrix(4 * hidden_dim, hidden_dim);
    p.b.assign(4 * hidden_dim, 0.0);
    return p;
}

void LstmCellParams::init(Rng& rng) {
    glorot_init(w_x, rng);
    glorot_init(w_h, rng);
    std::fill(b.begin(), b.end(), 0.0);
    // forget-gate bias starts at 1
    std::fill(b.begin() + static_cast<std::ptrdiff_t>(hidden_dim),
              b.begin() + static_cast<std::ptrdiff_t>(2 * hidden_dim), 1.0);
}

BiLstmParams BiLstmParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
    BiLstmParams p;
    p.fwd = LstmCellParams::zeros(input_dim, hidden_dim);
    p.bwd = LstmCellParams::zeros(input_dim, hidden_dim);
    return p;
}

void BiLstmParams::init(Rng& rng) {
    fwd.init(rng);
    bwd.init(rng);
}

AffineParams AffineParams::zeros(std::size_t in_dim, std::size_t out_dim) {
    AffineParams p;
    p.w = Matrix(out_dim, in_dim);
    p.b.assign(out_dim, 0.0);
    return p;
}

void AffineParams::init(Rng& rng) {
    glorot_init(w, rng);
    std::fill(b.begin(), b.end(), 0.0);
}

void lstm_cell_step(const LstmCellParams& p, const double* x, const double* h_prev,
                    const double* c_prev, double* h_out, double* c_out, LstmStepCache* cache) {
    const std::size_t h = p.hidden_dim;
    if (p.w_x.rows != 4 * h || p.w_h.cols != h || p.b.size() != 4 * h)
        throw std::runtime_error("lstm_cell_step: inconsistent parameter shapes");

    std::vector<double> pre(p.b);
    kernels::matvec_acc(p.w_x, x, pre.data());
    kernels::matvec_acc(p.w_h, h_prev, pre.data());

    LstmStepCache local;
    LstmStepCache& s = cache ? *cache : local;
    s.i.resize(h);
    s.f.resize(h);
    s.g.resize(h);
    s.o.resize(h);
    s.c.resize(h);
    s.tanh_c.resize(h);
    s.h.resize(h);
    for (std::size_t j = 0; j < h; ++j) {
        s.i[j] = sigmoid(pre[j]);
        s.f[j] = sigmoid(pre[h + j]);
        s.g[j] = std::tanh(pre[2 * h + j]);
        s.o[j] = sigmoid(pre[3 * h + j]);
        s.c[j] = s.f[j] * c_prev[j] + s.i[j] * s.g[j];
        s.tanh_c[j] = std::tanh(s.c[j]);
        s.h[j] = s.o[j] * s.tanh_c[j];
        h_out[j] = s.h[j];
        c_out[j] = s.c[j];
    }
}

void lstm_run(const LstmCellParams& p, const Matrix& xs, std::size_t begin, std::size_t end,
              bool reverse, Matrix& out, std::size_t col_off, LstmTape* tape) {
    if (begin >= end || end > xs.rows) throw std::runtime_error("lstm_run: bad row range");
    if (xs.cols != p.input_dim) throw std::runtime_error("lstm_run: input width mismatch");
    const std::size_t h = p.hidden_dim;
    const std::size_t len = end - begin;

    std::vector<std::size_t> visit(len);
    for (std::size_t k = 0; k < len; ++k) visit[k] = reverse ? end - 1 - k : begin + k;

    std::vector<double> h_prev(h, 0.0), c_prev(h, 0.0);
    std::vector<LstmStepCache> local_steps;
    auto& steps = tape ? tape->steps : local_steps;
    steps.assign(len, {});
    if (tape) tape->visit = visit;

    for (std::size_t k = 0; k < len; ++k) {
        const std::size_t row = visit[k];
        LstmStepCache& s = steps[k];
        std::vector<double> h_cur(h), c_cur(h);
        lstm_cell_step(p, xs.row(row), h_prev.data(), c_prev.data(), h_cur.data(), c_cur.data(), &s);
        std::copy(h_cur.begin(), h_cur.end(), out.row(row) + col_off);
        h_prev.swap(h_cur);
        c_prev.swap(c_cur);
    }
}

void lstm_backward(const LstmCellParams& p, const Matrix& xs, const LstmTape& tape,
                   const Matrix& dout, std::size_t col_off, LstmCellParams& grads, Matrix* dxs) {
    const std::size_t h = p.hidden_dim;
    const std::size_t len = tape.visit.size();
    if (tape.steps.size() != len) throw std::runtime_error("lstm_backward: no matching forward tape");

    std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0);
    std::vector<double> dpre(4 * h), dh(h), dc(h);

    for (std::size_t k = len; k-- > 0;) {
        const LstmStepCache& s = tape.steps[k];
        const std::size_t row = tape.visit[k];
        const double* c_prev = (k == 0) ? nullptr : tape.steps[k - 1].c.data();
        const double* h_prev = (k == 0) ? nullptr : tape.steps[k - 1].h.data();

        for (std::size_t j = 0; j < h; ++j) {
            dh[j] = dout(row, col_off + j) + dh_next[j];
            const double dtc = dh[j] * s.o[j];
            dc[j] = dtc * (1.0 - s.tanh_c[j] * s.tanh_c[j]) + dc_next[j];
            const double cp = c_prev ? c_prev[j] : 0.0;
            const double di = dc[j] * s.g[j];
            const double df = dc[j] * cp;
            const double dg = dc[j] * s.i[j];
            const double do_ = dh[j] * s.tanh_c[j];
            dpre[j] = di * s.i[j] * (1.0 - s.i[j]);
            dpre[h + j] = df * s.f[j] * (1.0 - s.f[j]);
            dpre[2 * h + j] = dg * (1.0 - s.g[j] * s.g[j]);
            dpre[3 * h + j] = do_ * s.o[j] * (1.0 - s.o[j]);
            dc_next[j] = dc[j] * s.f[j];
        }

        for (std::size_t j = 0; j < 4 * h; ++j) grads.b[j] += dpre[j];
        kernels::outer_acc(dpre.data(), xs.row(row), grads.w_x);
        if (h_prev) {
            kernels::outer_acc(dpre.data(), h_prev, grads.w_h);
            std::fill(dh_next.begin(), dh_next.end(), 0.0);
            kernels::matvec_t_acc(p.w_h, dpre.data(), dh_next.data());
        }
        if (dxs) kernels::matvec_t_acc(p.w_x, dpre.data(), dxs->row(row));
    }
}

void bilstm_segment(const BiLstmParams& p, const Matrix& xs, std::size_t begin, std::size_t end,
                    Matrix& out, BiLstmTape* tape) {
    if (p.fwd.input_dim != p.bwd.input_dim || p.fwd.hidden_dim != p.bwd.hidden_dim)
        throw std::runtime_error("bilstm: direction shape mismatch");
    const std::size_t h = p.hidden_dim();
    lstm_run(p.fwd, xs, begin, end, false, out, 0, tape ? &tape->fwd : nullptr);
    lstm_run(p.bwd, xs, begin, end, true, out, h, tape ? &tape->bwd : nullptr);
}

void bilstm_segment_backward(const BiLstmParams& p, const Matrix& xs, const BiLstmTape& tape,
                             const Matrix& dout, BiLstmParams& grads, Matrix* dxs) {
    lstm_backward(p.fwd, xs, tape.fwd, dout, 0, grads.fwd, dxs);
    lstm_backward(p.bwd, xs, tape.bwd, dout, p.hidden_dim(), grads.bwd, dxs);
}

Matrix bilstm_forward(const BiLstmParams& p, const Matrix& xs, BiLstmTape* tape) {
    Matrix out(xs.rows, 2 * p.hidden_dim());
    bilstm_segment(p, xs, 0, xs.rows, out, tape);
    return out;
}

void bilstm_backward(const BiLstmParams& p, const Matrix& xs, const BiLstmTape& tape,
                     const Matrix& dout, BiLstmParams& grads, Matrix* dxs) {
    bilstm_segment_backward(p, xs, tape, dout, grads, dxs);
}

Matrix span_max_pool(const Matrix& h, const std::vector<Span>& spans,
                     const std::vector<std::uint8_t>* exclude, MaxPoolTape* tape) {
    Matrix out(spans.size(), h.cols);
    if (tape) tape->argmax.assign(spans.size(), std::vector<std::size_t>(h.cols));

    for (std::size_t s = 0; s < spans.size(); ++s) {
        const Span span = spans[s];
        if (span.begin >= span.end || span.end > h.rows)
            throw std::runtime_error("span_max_pool: empty or out-of-range span");

        bool any_kept = false;
        if (exclude) {
            for (std::size_t t = span.begin; t < span.end && !any_kept; ++t)
                any_kept = (*exclude)[t] == 0;
        } else {
            any_kept = true;
        }
        // a fully excluded span falls back to the unmasked max
        const bool use_mask = exclude && any_kept;

        for (std::size_t j = 0; j < h.cols; ++j) {
            double best = 0.0;
            std::size_t best_row = 0;
            bool first = true;
            for (std::size_t t = span.begin; t < span.end; ++t) {
                if (use_mask && (*exclude)[t]) continue;
                const double v = h(t, j);
                if (first || v > best) {
                    best = v;
                    best_row = t;
                    first = false;
                }
            }
            out(s, j) = best;
            if (tape) tape->argmax[s][j] = best_row;
        }
    }
    return out;
}

void span_max_pool_backward(const MaxPoolTape& tape, const Matrix& dpooled, Matrix& dh) {
    if (tape.argmax.size() != dpooled.rows)
        throw std::runtime_error("span_max_pool_backward: no matching forward tape");
    for (std::size_t s = 0; s < dpooled.rows; ++s)
        for (std::size_t j = 0; j < dpooled.cols; ++j) dh(tape.argmax[s][j], j) += dpooled(s, j);
}

std::vector<double> affine_forward(const AffineParams& p, const double* h) {
    std::vector<double> logits(p.b);
    kernels::matvec_acc(p.w, h, logits.data());
    return logits;
}

void affine_backward(const AffineParams& p, const double* h, const double* dlogits,
                     AffineParams& grads, double* dh) {
    for (std::size_t i = 0; i < p.b.size(); ++i) grads.b[i] += dlogits[i];
    kernels::outer_acc(dlogits, h, grads.w);
    if (dh) kernels::matvec_t_acc(p.w, dlogits, dh);
}

std::vector<double> softmax(const std::vector<double>& logits) {
    std::vector<double> out(logits.size());
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

std::vector<double> affine_softmax(const AffineParams& p, const double* h) {
    return softmax(affine_forward(p, h));
}

double softmax_nll(const std::vector<double>& logits, std::size_t gold, double* dlogits,
                   double weight) {
    const double lse = log_sum_exp(logits.data(), logits.size());
    const double loss = lse - logits[gold];
    if (dlogits) {
        for (std::size_t i = 0; i < logits.size(); ++i) {
            const double p = std::exp(logits[i] - lse);
            dlogits[i] += weight * (p - (i == gold ? 1.0 : 0.0));
        }
    }
    return loss;
}

void dropout_forward(const DropoutSpec& spec, Rng* rng, Matrix& x, DropoutMask* mask) {
    if (spec.rate < 0.0 || spec.rate >= 1.0) throw std::runtime_error("dropout rate must be in [0,1)");
    if (!spec.train || spec.rate == 0.0) {
        if (mask) {
            mask->keep.assign(x.size(), 1);
            mask->scale = 1.0;
        }
        return;
    }
    const double scale = 1.0 / (1.0 - spec.rate);
    if (mask) {
        mask->keep.resize(x.size());
        mask->scale = scale;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        const bool keep = rng->uniform01() >= spec.rate;
        if (mask) mask->keep[i] = keep ? 1 : 0;
        x.a[i] = keep ? x.a[i] * scale : 0.0;
    }
}

void dropout_backward(const DropoutMask& mask, Matrix& dx) {
    if (mask.keep.size() != dx.size()) throw std::runtime_error("dropout_backward: mask size mismatch");
    for (std::size_t i = 0; i < dx.size(); ++i) dx.a[i] = mask.keep[i] ? dx.a[i] * mask.scale : 0.0;
}

Matrix dropout_apply(const DropoutSpec& spec, const Matrix& x) {
    Matrix out = x;
    Rng rng(spec.seed);
    dropout_forward(spec, &rng, out, nullptr);
    return out;
}

}  // namespace sitent
