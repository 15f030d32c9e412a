#include "sitent/crf.hpp"

#include <cmath>
#include <stdexcept>

#include "sitent/nncore.hpp"

namespace sitent {

TransitionParams TransitionParams::zeros(std::size_t k) {
    TransitionParams t;
    t.trans = Matrix(k, k);
    t.start.assign(k, 0.0);
    t.end.assign(k, 0.0);
    return t;
}

namespace {

void check_shapes(const TransitionParams& t, const Matrix& emissions) {
    const std::size_t k = t.num_labels();
    if (emissions.rows == 0) throw std::runtime_error("crf: empty emission sequence");
    if (emissions.cols != k || t.trans.rows != k || t.trans.cols != k || t.end.size() != k)
        throw std::runtime_error("crf: emission/transition shape mismatch");
}

// alpha(t, j) = log sum over prefixes ending in label j at position t
Matrix forward_scores(const TransitionParams& t, const Matrix& e) {
    const std::size_t n = e.rows, k = e.cols;
    Matrix alpha(n, k);
    for (std::size_t j = 0; j < k; ++j) alpha(0, j) = t.start[j] + e(0, j);
    std::vector<double> acc(k);
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t a = 0; a < k; ++a) acc[a] = alpha(i - 1, a) + t.trans(a, j);
            alpha(i, j) = e(i, j) + log_sum_exp(acc.data(), k);
        }
    }
    return alpha;
}

// beta(t, i) = log sum over suffixes starting after label i at position t
Matrix backward_scores(const TransitionParams& t, const Matrix& e) {
    const std::size_t n = e.rows, k = e.cols;
    Matrix beta(n, k);
    for (std::size_t i = 0; i < k; ++i) beta(n - 1, i) = t.end[i];
    std::vector<double> acc(k);
    for (std::size_t pos = n - 1; pos-- > 0;) {
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j)
                acc[j] = t.trans(i, j) + e(pos + 1, j) + beta(pos + 1, j);
            beta(pos, i) = log_sum_exp(acc.data(), k);
        }
    }
    return beta;
}

}  // namespace

double crf_score(const TransitionParams& t, const Matrix& emissions, const std::vector<std::size_t>& y) {
    check_shapes(t, emissions);
    if (y.size() != emissions.rows) throw std::runtime_error("crf_score: label sequence length mismatch");
    double s = t.start[y[0]] + t.end[y.back()];
    for (std::size_t i = 0; i < y.size(); ++i) s += emissions(i, y[i]);
    for (std::size_t i = 0; i + 1 < y.size(); ++i) s += t.trans(y[i], y[i + 1]);
    return s;
}

double crf_log_partition(const TransitionParams& t, const Matrix& emissions) {
    check_shapes(t, emissions);
    const std::size_t n = emissions.rows, k = emissions.cols;
    const Matrix alpha = forward_scores(t, emissions);
    std::vector<double> fin(k);
    for (std::size_t j = 0; j < k; ++j) fin[j] = alpha(n - 1, j) + t.end[j];
    return log_sum_exp(fin.data(), k);
}

Matrix crf_marginals(const TransitionParams& t, const Matrix& emissions) {
    check_shapes(t, emissions);
    const std::size_t n = emissions.rows, k = emissions.cols;
    const Matrix alpha = forward_scores(t, emissions);
    const Matrix beta = backward_scores(t, emissions);
    std::vector<double> fin(k);
    for (std::size_t j = 0; j < k; ++j) fin[j] = alpha(n - 1, j) + t.end[j];
    const double log_z = log_sum_exp(fin.data(), k);

    Matrix mu(n, k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) mu(i, j) = std::exp(alpha(i, j) + beta(i, j) - log_z);
    return mu;
}

double crf_nll(const TransitionParams& t, const Matrix& emissions, const std::vector<std::size_t>& y,
               Matrix* demissions, TransitionParams* dparams, double weight) {
    check_shapes(t, emissions);
    const std::size_t n = emissions.rows, k = emissions.cols;
    if (y.size() != n) throw std::runtime_error("crf_nll: label sequence length mismatch");

    const Matrix alpha = forward_scores(t, emissions);
    std::vector<double> fin(k);
    for (std::size_t j = 0; j < k; ++j) fin[j] = alpha(n - 1, j) + t.end[j];
    const double log_z = log_sum_exp(fin.data(), k);
    const double loss = log_z - crf_score(t, emissions, y);

    if (demissions || dparams) {
        const Matrix beta = backward_scores(t, emissions);

        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                const double mu = std::exp(alpha(i, j) + beta(i, j) - log_z);
                const double g = weight * (mu - (y[i] == j ? 1.0 : 0.0));
                if (demissions) (*demissions)(i, j) += g;
                if (dparams) {
                    if (i == 0) dparams->start[j] += g;
                    if (i == n - 1) dparams->end[j] += g;
                }
            }
        }
        if (dparams) {
            for (std::size_t i = 0; i + 1 < n; ++i) {
                for (std::size_t a = 0; a < k; ++a) {
                    for (std::size_t b = 0; b < k; ++b) {
                        const double mu = std::exp(alpha(i, a) + t.trans(a, b) + emissions(i + 1, b) +
                                                   beta(i + 1, b) - log_z);
                        const double gold = (y[i] == a && y[i + 1] == b) ? 1.0 : 0.0;
                        dparams->trans(a, b) += weight * (mu - gold);
                    }
                }
            }
        }
    }
    return loss;
}

std::vector<std::size_t> viterbi_decode(const TransitionParams& t, const Matrix& emissions) {
    check_shapes(t, emissions);
    const std::size_t n = emissions.rows, k = emissions.cols;

    Matrix delta(n, k);
    std::vector<std::vector<std::size_t>> back(n, std::vector<std::size_t>(k, 0));
    for (std::size_t j = 0; j < k; ++j) delta(0, j) = t.start[j] + emissions(0, j);
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            double best = delta(i - 1, 0) + t.trans(0, j);
            std::size_t arg = 0;
            for (std::size_t a = 1; a < k; ++a) {
                const double v = delta(i - 1, a) + t.trans(a, j);
                if (v > best) {  // keeps the lower label index on ties
                    best = v;
                    arg = a;
                }
            }
            delta(i, j) = emissions(i, j) + best;
            back[i][j] = arg;
        }
    }

    double best = delta(n - 1, 0) + t.end[0];
    std::size_t arg = 0;
    for (std::size_t j = 1; j < k; ++j) {
        const double v = delta(n - 1, j) + t.end[j];
        if (v > best) {
            best = v;
            arg = j;
        }
    }

    std::vector<std::size_t> path(n);
    path[n - 1] = arg;
    for (std::size_t i = n - 1; i > 0; --i) path[i - 1] = back[i][path[i]];
    return path;
}

}  // namespace sitent
