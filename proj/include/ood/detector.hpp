#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ood/ops.hpp"

namespace ood {

struct Threshold {
    double eta;
    explicit Threshold(double e) : eta(e) {
        require(e > 0.0 && e < 1.0, "threshold must lie in (0,1)");
    }
};

enum class Verdict { IND, OOD };

// Max-softmax confidence of one logit row.
template <typename T>
double max_softmax_score(const Tensor<T>& logits, std::size_t row = 0) {
    require(logits.shape.size() == 2, "max_softmax_score: need [B×K] logits");
    Tensor<T> probs = softmax(logits);
    const std::size_t K = logits.shape[1];
    double best = 0.0;
    for (std::size_t k = 0; k < K; ++k)
        best = std::max(best, static_cast<double>(probs(row, k)));
    return best;
}

// OOD iff score strictly less than η.
inline Verdict detect(double score, const Threshold& eta) {
    return score < eta.eta ? Verdict::OOD : Verdict::IND;
}

// Smallest useful η achieving validation TPR >= target_tpr: place it just
// above the ⌈target·n⌉-th smallest OOD score, at the midpoint to the next
// distinct score (or score + 1e-9 at the top).
inline Threshold select_threshold(std::vector<double> ood_scores, double target_tpr) {
    require(!ood_scores.empty(), "select_threshold: empty score list");
    require(target_tpr > 0.0 && target_tpr <= 1.0, "select_threshold: target must be in (0,1]");
    std::sort(ood_scores.begin(), ood_scores.end());
    const std::size_t n = ood_scores.size();
    std::size_t k = static_cast<std::size_t>(std::ceil(target_tpr * static_cast<double>(n)));
    k = std::min(std::max<std::size_t>(k, 1), n);
    double s = ood_scores[k - 1];
    double eta;
    auto next = std::upper_bound(ood_scores.begin(), ood_scores.end(), s);
    if (next != ood_scores.end()) eta = 0.5 * (s + *next);
    else eta = s + 1e-9;
    eta = std::min(std::max(eta, 1e-12), 1.0 - 1e-12);
    return Threshold(eta);
}

}  // namespace ood
