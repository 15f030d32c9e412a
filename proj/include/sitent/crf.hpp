#pragma once

#include <cstddef>
#include <vector>

#include "sitent/rng.hpp"
#include "sitent/tensor.hpp"

namespace sitent {

// Linear-chain CRF over per-clause emission scores. trans(a, b) scores
// label b immediately following label a; start/end score the boundary
// labels. The label count is generic (tests exercise reduced label sets);
// the model instantiates it with the 7 SE labels.
struct TransitionParams {
    Matrix trans;              // k x k
    std::vector<double> start; // k
    std::vector<double> end;   // k

    static TransitionParams zeros(std::size_t k);
    std::size_t num_labels() const { return start.size(); }
};

// unnormalized path score: start + emissions + transitions + end
double crf_score(const TransitionParams& t, const Matrix& emissions, const std::vector<std::size_t>& y);

// log of the sum of exp(path score) over all label sequences, computed in
// log space with the log-sum-exp recursion
double crf_log_partition(const TransitionParams& t, const Matrix& emissions);

// per-position label marginals under the CRF distribution (n x k)
Matrix crf_marginals(const TransitionParams& t, const Matrix& emissions);

// Negative log-likelihood of the gold sequence. When gradient sinks are
// non-null, weight * (marginal expectation - gold indicator) is accumulated
// into them via forward-backward.
double crf_nll(const TransitionParams& t, const Matrix& emissions, const std::vector<std::size_t>& y,
               Matrix* demissions = nullptr, TransitionParams* dparams = nullptr, double weight = 1.0);

// Highest-scoring label sequence; ties broken toward the lower label index.
std::vector<std::size_t> viterbi_decode(const TransitionParams& t, const Matrix& emissions);

}  // namespace sitent
