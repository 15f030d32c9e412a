#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sitent/corpus.hpp"

namespace sitent {

// Seeded synthetic corpora for tests and experiments. Each generator
// produces a fully labeled dataset whose labels follow a known rule, so a
// model's ability to pick up that rule can be measured exactly.
struct SynthOptions {
    std::size_t paragraphs = 200;
    std::uint64_t seed = 1;
    std::size_t genres = 2;
    std::size_t min_clauses = 2;
    std::size_t max_clauses = 4;
    std::size_t filler_vocab = 100;
    std::size_t fillers_per_clause = 2;
    // label-runs task
    double stay_prob = 0.85;        // probability the next clause repeats the label
    double trigger_fidelity = 0.65; // probability the in-clause trigger matches the label
    std::size_t run_label_count = 2;  // labels participating in the run chain (2..7)
    // connective task
    double plain_clause_prob = 0.3; // connective-free clauses (fixed STATE label)
};

// label of each clause is determined by a trigger word inside that clause
Dataset synth_keyword(const SynthOptions& opt);

// label of clause i is determined by the trigger word in clause i-1;
// the opening clause is always STATE
Dataset synth_context(const SynthOptions& opt);

// labels form runs (sticky Markov chain over STATE/GENERIC) while the
// in-clause trigger is only trigger_fidelity reliable
Dataset synth_label_runs(const SynthOptions& opt);

// label is determined by the clause-initial connective phrase; clauses
// without a connective are STATE
Dataset synth_connective(const SynthOptions& opt);

// keyword task whose trigger-to-label map is shifted in one genre, so a
// model trained on the other genres misreads the held-out genre
Dataset synth_genre_rule(const SynthOptions& opt);

Dataset make_synth(const std::string& kind, const SynthOptions& opt);
const std::vector<std::string>& synth_kinds();

}  // namespace sitent
