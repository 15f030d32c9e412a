#pragma once

// shared test oracles: central finite differences and exhaustive CRF
// enumeration, both independent of the implementation paths they check

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sitent/crf.hpp"
#include "sitent/model.hpp"
#include "sitent/nncore.hpp"
#include "sitent/rng.hpp"
#include "sitent/tensor.hpp"

namespace testsupport {

using namespace sitent;

inline double rel_err(double a, double b) {
    const double denom = std::max({std::fabs(a), std::fabs(b), 1e-6});
    return std::fabs(a - b) / denom;
}

struct FdReport {
    double max_rel = 0.0;
    std::size_t checked = 0;
    std::string worst;
};

// Central finite differences over every component of every tensor in
// `params`, against analytic gradients already stored in `grads` (parallel
// layout). `loss` must re-evaluate the objective from the live parameters.
inline FdReport fd_check(const std::vector<TensorRef>& params, const std::vector<TensorRef>& grads,
                         const std::function<double()>& loss, double eps = 1e-5) {
    FdReport rep;
    for (std::size_t k = 0; k < params.size(); ++k) {
        for (std::size_t i = 0; i < params[k].size; ++i) {
            double& x = params[k].data[i];
            const double saved = x;
            x = saved + eps;
            const double up = loss();
            x = saved - eps;
            const double down = loss();
            x = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double analytic = grads[k].data[i];
            const double r = rel_err(analytic, numeric);
            ++rep.checked;
            if (r > rep.max_rel) {
                rep.max_rel = r;
                rep.worst = params[k].name + "[" + std::to_string(i) + "] analytic " +
                            std::to_string(analytic) + " numeric " + std::to_string(numeric);
            }
        }
    }
    return rep;
}

inline std::vector<TensorRef> cell_tensors(LstmCellParams& p, const std::string& prefix) {
    return {{prefix + ".w_x", p.w_x.data(), p.w_x.size(), true},
            {prefix + ".w_h", p.w_h.data(), p.w_h.size(), true},
            {prefix + ".b", p.b.data(), p.b.size(), false}};
}

inline std::vector<TensorRef> bilstm_tensors(BiLstmParams& p) {
    auto out = cell_tensors(p.fwd, "fwd");
    for (auto& t : cell_tensors(p.bwd, "bwd")) out.push_back(t);
    return out;
}

inline std::vector<TensorRef> affine_tensors(AffineParams& p) {
    return {{"w", p.w.data(), p.w.size(), true}, {"b", p.b.data(), p.b.size(), false}};
}

inline std::vector<TensorRef> crf_tensors(TransitionParams& p) {
    return {{"trans", p.trans.data(), p.trans.size(), true},
            {"start", p.start.data(), p.start.size(), false},
            {"end", p.end.data(), p.end.size(), false}};
}

inline std::vector<TensorRef> matrix_tensor(Matrix& m, const std::string& name) {
    return {{name, m.data(), m.size(), true}};
}

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
    Matrix m(r, c);
    for (double& v : m.a) v = rng.uniform(lo, hi);
    return m;
}

// ---- exhaustive CRF oracle (small n, small label sets) ----

inline void enumerate_sequences(std::size_t n, std::size_t k,
                                const std::function<void(const std::vector<std::size_t>&)>& fn) {
    std::vector<std::size_t> seq(n, 0);
    while (true) {
        fn(seq);
        std::size_t pos = 0;
        while (pos < n) {
            if (++seq[pos] < k) break;
            seq[pos] = 0;
            ++pos;
        }
        if (pos == n) return;
    }
}

inline double brute_log_partition(const TransitionParams& t, const Matrix& e) {
    std::vector<double> scores;
    enumerate_sequences(e.rows, e.cols, [&](const std::vector<std::size_t>& y) {
        scores.push_back(crf_score(t, e, y));
    });
    return log_sum_exp(scores.data(), scores.size());
}

inline Matrix brute_marginals(const TransitionParams& t, const Matrix& e) {
    const double log_z = brute_log_partition(t, e);
    Matrix mu(e.rows, e.cols);
    enumerate_sequences(e.rows, e.cols, [&](const std::vector<std::size_t>& y) {
        const double p = std::exp(crf_score(t, e, y) - log_z);
        for (std::size_t i = 0; i < y.size(); ++i) mu(i, y[i]) += p;
    });
    return mu;
}

// lexicographically first among maximal-score sequences
inline std::vector<std::size_t> brute_viterbi(const TransitionParams& t, const Matrix& e) {
    std::vector<std::size_t> best;
    double best_score = 0.0;
    enumerate_sequences(e.rows, e.cols, [&](const std::vector<std::size_t>& y) {
        const double s = crf_score(t, e, y);
        if (best.empty() || s > best_score) {
            best = y;
            best_score = s;
        }
    });
    return best;
}

inline TransitionParams random_transitions(std::size_t k, Rng& rng, double scale = 1.0) {
    TransitionParams t = TransitionParams::zeros(k);
    for (double& v : t.trans.a) v = rng.uniform(-scale, scale);
    for (double& v : t.start) v = rng.uniform(-scale, scale);
    for (double& v : t.end) v = rng.uniform(-scale, scale);
    return t;
}

}  // namespace testsupport
