#pragma once

#include <cstdint>
#include <vector>

#include "sitent/rng.hpp"
#include "sitent/tensor.hpp"

namespace sitent {

double sigmoid(double x);
double log_sum_exp(const double* v, std::size_t n);

// Single-direction LSTM parameters. Gate blocks are stacked row-wise in the
// order input, forget, candidate, output, so w_x is (4H x D), w_h is
// (4H x H) and b has 4H components.
struct LstmCellParams {
    Matrix w_x;
    Matrix w_h;
    std::vector<double> b;
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;

    static LstmCellParams zeros(std::size_t input_dim, std::size_t hidden_dim);
    // Glorot-uniform weights, zero biases except the forget block at 1.0
    void init(Rng& rng);
};

struct BiLstmParams {
    LstmCellParams fwd;
    LstmCellParams bwd;

    static BiLstmParams zeros(std::size_t input_dim, std::size_t hidden_dim);
    void init(Rng& rng);
    std::size_t input_dim() const { return fwd.input_dim; }
    std::size_t hidden_dim() const { return fwd.hidden_dim; }
};

struct AffineParams {
    Matrix w;              // out_dim x in_dim
    std::vector<double> b; // out_dim

    static AffineParams zeros(std::size_t in_dim, std::size_t out_dim);
    void init(Rng& rng);
};

// per-timestep activations cached for backpropagation through time
struct LstmStepCache {
    std::vector<double> i, f, g, o, c, tanh_c, h;
};

struct LstmTape {
    std::vector<std::size_t> visit;  // input row visit order
    std::vector<LstmStepCache> steps;
};

struct BiLstmTape {
    LstmTape fwd, bwd;
};

// One LSTM step. h_out and c_out must hold hidden_dim doubles.
void lstm_cell_step(const LstmCellParams& p, const double* x, const double* h_prev,
                    const double* c_prev, double* h_out, double* c_out,
                    LstmStepCache* cache = nullptr);

// Runs one direction over rows [begin, end) of xs (reversed when reverse is
// true) and writes each position's hidden state into out at column col_off.
void lstm_run(const LstmCellParams& p, const Matrix& xs, std::size_t begin, std::size_t end,
              bool reverse, Matrix& out, std::size_t col_off, LstmTape* tape = nullptr);

// Backpropagates dout (gradient on the hidden-state columns starting at
// col_off) through the recorded run, accumulating into grads and, when dxs
// is non-null, into the input gradient rows.
void lstm_backward(const LstmCellParams& p, const Matrix& xs, const LstmTape& tape,
                   const Matrix& dout, std::size_t col_off, LstmCellParams& grads,
                   Matrix* dxs);

// Both directions over rows [begin, end); row t of out gets
// [forward state, backward state] (2H columns).
void bilstm_segment(const BiLstmParams& p, const Matrix& xs, std::size_t begin, std::size_t end,
                    Matrix& out, BiLstmTape* tape = nullptr);
void bilstm_segment_backward(const BiLstmParams& p, const Matrix& xs, const BiLstmTape& tape,
                             const Matrix& dout, BiLstmParams& grads, Matrix* dxs);

Matrix bilstm_forward(const BiLstmParams& p, const Matrix& xs, BiLstmTape* tape = nullptr);
void bilstm_backward(const BiLstmParams& p, const Matrix& xs, const BiLstmTape& tape,
                     const Matrix& dout, BiLstmParams& grads, Matrix* dxs);

struct MaxPoolTape {
    // argmax input row per (span, component); first maximal row on ties
    std::vector<std::vector<std::size_t>> argmax;
};

// Componentwise max over each span's rows. When exclude is given, rows
// flagged nonzero are left out of the max; a fully excluded span falls back
// to the plain max over all of its rows.
Matrix span_max_pool(const Matrix& h, const std::vector<Span>& spans,
                     const std::vector<std::uint8_t>* exclude = nullptr,
                     MaxPoolTape* tape = nullptr);
void span_max_pool_backward(const MaxPoolTape& tape, const Matrix& dpooled, Matrix& dh);

std::vector<double> affine_forward(const AffineParams& p, const double* h);
void affine_backward(const AffineParams& p, const double* h, const double* dlogits,
                     AffineParams& grads, double* dh);

// max-subtracted, components sum to 1
std::vector<double> softmax(const std::vector<double>& logits);
std::vector<double> affine_softmax(const AffineParams& p, const double* h);

// Cross-entropy of the gold index under softmax(logits). When dlogits is
// non-null it receives weight * (softmax(logits) - onehot(gold)) added in.
double softmax_nll(const std::vector<double>& logits, std::size_t gold,
                   double* dlogits = nullptr, double weight = 1.0);

struct DropoutSpec {
    double rate = 0.5;
    bool train = false;
    std::uint64_t seed = 0;
};

struct DropoutMask {
    std::vector<std::uint8_t> keep;
    double scale = 1.0;
};

// Inverted dropout in place: zero with probability rate, survivors scaled
// by 1/(1-rate). Inference mode (train == false) is the identity.
void dropout_forward(const DropoutSpec& spec, Rng* rng, Matrix& x, DropoutMask* mask);
void dropout_backward(const DropoutMask& mask, Matrix& dx);

// standalone, seeded form of the same operation
Matrix dropout_apply(const DropoutSpec& spec, const Matrix& x);

}  // namespace sitent
