#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "sitent/corpus.hpp"

namespace sitent {

using ConfusionCounts = std::array<std::array<std::size_t, kNumLabels>, kNumLabels>;

struct Metrics {
    ConfusionCounts confusion{};  // [gold][predicted]
    std::size_t total = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::array<double, kNumLabels> precision{};
    std::array<double, kNumLabels> recall{};
    std::array<double, kNumLabels> f1{};
    // labels with nonzero gold-or-predicted presence; only these enter the
    // macro average (coincides with all 7 on the full corpus)
    std::array<bool, kNumLabels> present{};
};

Metrics metrics_from_confusion(const ConfusionCounts& confusion);
Metrics score(const std::vector<SELabel>& gold, const std::vector<SELabel>& predicted);

// mean / standard deviation over repeated runs
struct MetricsSummary {
    std::size_t runs = 0;
    double accuracy_mean = 0.0, accuracy_std = 0.0;
    double macro_f1_mean = 0.0, macro_f1_std = 0.0;
    std::array<double, kNumLabels> f1_mean{};
    std::array<double, kNumLabels> f1_std{};
};

MetricsSummary summarize(const std::vector<Metrics>& runs);

}  // namespace sitent
