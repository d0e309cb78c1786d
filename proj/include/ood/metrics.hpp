#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <json.hpp>

#include "ood/common.hpp"

namespace ood {

// Detection-score convention: OOD is the positive class and higher means
// more OOD (callers pass 1 − Score(x) for OOD, Score(x) for IND-positive).

// Rank-sum (Mann-Whitney) AUROC, ties counted 1/2.
inline double auroc(const std::vector<double>& pos, const std::vector<double>& neg) {
    require(!pos.empty() && !neg.empty(), "auroc: empty score list");
    std::vector<std::pair<double, int>> all;  // (score, is_pos)
    all.reserve(pos.size() + neg.size());
    for (double s : pos) all.emplace_back(s, 1);
    for (double s : neg) all.emplace_back(s, 0);
    std::sort(all.begin(), all.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    // midranks over tie blocks
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].first == all[i].first) ++j;
        double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k)
            if (all[k].second) rank_sum_pos += midrank;
        i = j;
    }
    const double np = static_cast<double>(pos.size());
    const double nn = static_cast<double>(neg.size());
    double u = rank_sum_pos - np * (np + 1.0) / 2.0;
    return u / (np * nn);
}

// Average precision with tied scores processed as one block.
inline double average_precision(const std::vector<double>& pos, const std::vector<double>& neg) {
    require(!pos.empty() && !neg.empty(), "average_precision: empty score list");
    std::vector<std::pair<double, int>> all;
    all.reserve(pos.size() + neg.size());
    for (double s : pos) all.emplace_back(s, 1);
    for (double s : neg) all.emplace_back(s, 0);
    std::sort(all.begin(), all.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    const double P = static_cast<double>(pos.size());
    double tp = 0, fp = 0, ap = 0, prev_recall = 0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].first == all[i].first) ++j;
        for (std::size_t k = i; k < j; ++k) (all[k].second ? tp : fp) += 1.0;
        double recall = tp / P;
        double precision = tp / (tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return ap;
}

// Minimal FPR over thresholds (admit score >= thr) achieving TPR >= level.
inline double fpr_at_tpr(const std::vector<double>& pos, const std::vector<double>& neg,
                         double level) {
    require(!pos.empty() && !neg.empty(), "fpr_at_tpr: empty score list");
    require(level > 0.0 && level <= 1.0, "fpr_at_tpr: level must be in (0,1]");
    std::vector<double> thresholds(pos);
    thresholds.insert(thresholds.end(), neg.begin(), neg.end());
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    const double np = static_cast<double>(pos.size());
    const double nn = static_cast<double>(neg.size());
    double best = 1.0;
    for (double thr : thresholds) {
        double tp = 0, fpc = 0;
        for (double s : pos)
            if (s >= thr) tp += 1.0;
        for (double s : neg)
            if (s >= thr) fpc += 1.0;
        if (tp / np >= level) best = std::min(best, fpc / nn);
    }
    return best;
}

struct MetricBlock {
    double auroc = 0;
    double aupr_ood_positive = 0;
    double aupr_ind_positive = 0;
    double fpr_at_95tpr = 0;
    double fpr_at_90tpr = 0;
};

struct ScoreSet {
    std::vector<double> ind_scores;  // Score(x) for IND-labeled eval examples
    std::vector<double> ood_scores;  // Score(x) for OOS-labeled eval examples
};

inline MetricBlock metric_block(const ScoreSet& scores) {
    require(!scores.ind_scores.empty() && !scores.ood_scores.empty(),
            "metric_block: both score lists must be nonempty");
    std::vector<double> ood_det, ind_det;  // 1 − Score(x): higher = more OOD
    for (double s : scores.ood_scores) ood_det.push_back(1.0 - s);
    for (double s : scores.ind_scores) ind_det.push_back(1.0 - s);
    MetricBlock m;
    m.auroc = auroc(ood_det, ind_det);
    m.aupr_ood_positive = average_precision(ood_det, ind_det);
    m.aupr_ind_positive = average_precision(scores.ind_scores, scores.ood_scores);
    m.fpr_at_95tpr = fpr_at_tpr(ood_det, ind_det, 0.95);
    m.fpr_at_90tpr = fpr_at_tpr(ood_det, ind_det, 0.90);
    return m;
}

inline double round2(double x) { return std::round(x * 100.0) / 100.0; }

// Reported ×100 rounded to 2 decimals, raw full-precision alongside.
inline nlohmann::ordered_json metric_block_json(const MetricBlock& m) {
    nlohmann::ordered_json j;
    j["auroc"] = round2(m.auroc * 100.0);
    j["aupr_ood_positive"] = round2(m.aupr_ood_positive * 100.0);
    j["aupr_ind_positive"] = round2(m.aupr_ind_positive * 100.0);
    j["fpr_at_95tpr"] = round2(m.fpr_at_95tpr * 100.0);
    j["fpr_at_90tpr"] = round2(m.fpr_at_90tpr * 100.0);
    j["raw"] = {{"auroc", m.auroc},
                {"aupr_ood_positive", m.aupr_ood_positive},
                {"aupr_ind_positive", m.aupr_ind_positive},
                {"fpr_at_95tpr", m.fpr_at_95tpr},
                {"fpr_at_90tpr", m.fpr_at_90tpr}};
    return j;
}

}  // namespace ood
