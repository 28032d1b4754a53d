#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gazecomp/common.hpp"

namespace gazecomp {

struct LabeledScore {
    double score = 0.0;
    int label = 0;  // 1 = mistake (positive class)
};

struct SweepPoint {
    double threshold = 0.0;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

struct MetricsReport {
    double auc = 0.0;
    double best_f1 = 0.0;
    double precision_at_best_f1 = 0.0;
    double recall_at_best_f1 = 0.0;
    double best_threshold = 0.0;
    long n_positive = 0;
    long n_negative = 0;
    std::vector<SweepPoint> f1_vs_threshold;
};

struct ContingencyTable {
    int rows = 0;
    int cols = 0;
    std::vector<int64_t> counts;  // row-major

    int64_t at(int r, int c) const { return counts[static_cast<size_t>(r) * cols + c]; }
    int64_t& at(int r, int c) { return counts[static_cast<size_t>(r) * cols + c]; }
    int64_t total() const;
};

struct PermutationResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int n_permutations = 0;
};

// Mann-Whitney AUC: P(score_pos > score_neg) with ties counted 1/2.
double roc_auc(const std::vector<LabeledScore>& pairs);

// Sweeps theta over every distinct score plus a sentinel below the minimum
// (mistake predicted when s > theta). Ties on F1 break to higher precision,
// then lower theta. auc is NaN when only one class is present.
MetricsReport threshold_sweep(const std::vector<LabeledScore>& pairs);

double point_biserial(const std::vector<double>& continuous, const std::vector<int>& binary);

double cramers_v(const ContingencyTable& table);

ContingencyTable contingency_from_pairs(const std::vector<int>& a, const std::vector<int>& b);

// ROC curve vertices (FPR, TPR), from (0,0) to (1,1), threshold descending.
std::vector<std::pair<double, double>> roc_points(const std::vector<LabeledScore>& pairs);

// Two-sided permutation test on |point_biserial|, shuffling the binary vector.
PermutationResult point_biserial_permutation(const std::vector<double>& continuous,
                                             const std::vector<int>& binary,
                                             int n_permutations, uint64_t seed);

// Permutation test on Cramér's V over paired categorical observations.
PermutationResult cramers_v_permutation(const std::vector<int>& a, const std::vector<int>& b,
                                        int n_permutations, uint64_t seed);

}  // namespace gazecomp
