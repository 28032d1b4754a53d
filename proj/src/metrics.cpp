#include "gazecomp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gazecomp/seeds.hpp"

namespace gazecomp {

int64_t ContingencyTable::total() const {
    int64_t n = 0;
    for (int64_t c : counts) {
        if (c < 0) throw UndefinedMetricError("contingency table has negative count");
        n += c;
    }
    return n;
}

double roc_auc(const std::vector<LabeledScore>& pairs) {
    size_t n_pos = 0, n_neg = 0;
    for (const auto& p : pairs) (p.label ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw UndefinedMetricError("roc_auc: both classes required (n_pos=" +
                                   std::to_string(n_pos) + ", n_neg=" + std::to_string(n_neg) + ")");

    std::vector<size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return pairs[a].score < pairs[b].score; });

    // Sum of average ranks over positives (Mann-Whitney U).
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() && pairs[order[j + 1]].score == pairs[order[i]].score) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
        for (size_t k = i; k <= j; ++k)
            if (pairs[order[k]].label) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

MetricsReport threshold_sweep(const std::vector<LabeledScore>& pairs) {
    if (pairs.empty()) throw UndefinedMetricError("threshold_sweep: empty input");

    MetricsReport rep;
    for (const auto& p : pairs) (p.label ? rep.n_positive : rep.n_negative)++;
    rep.auc = (rep.n_positive > 0 && rep.n_negative > 0)
                  ? roc_auc(pairs)
                  : std::numeric_limits<double>::quiet_NaN();

    std::vector<LabeledScore> sorted = pairs;
    std::sort(sorted.begin(), sorted.end(),
              [](const LabeledScore& a, const LabeledScore& b) { return a.score < b.score; });

    // Candidate thresholds ascending: sentinel below min, then distinct scores.
    std::vector<double> thetas;
    thetas.push_back(sorted.front().score - 1.0);
    for (const auto& p : sorted)
        if (thetas.back() != p.score) thetas.push_back(p.score);

    // suffix_pos[i] = positives among sorted[i..]; predictions positive iff score > theta.
    const size_t n = sorted.size();
    std::vector<long> suffix_pos(n + 1, 0);
    for (size_t k = n; k-- > 0;) suffix_pos[k] = suffix_pos[k + 1] + (sorted[k].label ? 1 : 0);

    bool have_best = false;
    for (double theta : thetas) {
        const size_t first_above =
            std::upper_bound(sorted.begin(), sorted.end(), theta,
                             [](double t, const LabeledScore& p) { return t < p.score; }) -
            sorted.begin();
        const long predicted_pos = static_cast<long>(n - first_above);
        const long tp = suffix_pos[first_above];
        const long fp = predicted_pos - tp;
        const long fn = rep.n_positive - tp;
        const double precision = predicted_pos > 0 ? static_cast<double>(tp) / predicted_pos : 0.0;
        const double recall = rep.n_positive > 0 ? static_cast<double>(tp) / rep.n_positive : 0.0;
        const double f1 =
            (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        (void)fp;
        (void)fn;
        rep.f1_vs_threshold.push_back({theta, f1, precision, recall});

        const bool better =
            !have_best || f1 > rep.best_f1 ||
            (f1 == rep.best_f1 &&
             (precision > rep.precision_at_best_f1 ||
              (precision == rep.precision_at_best_f1 && theta < rep.best_threshold)));
        if (better) {
            have_best = true;
            rep.best_f1 = f1;
            rep.precision_at_best_f1 = precision;
            rep.recall_at_best_f1 = recall;
            rep.best_threshold = theta;
        }
    }
    return rep;
}

std::vector<std::pair<double, double>> roc_points(const std::vector<LabeledScore>& pairs) {
    long n_pos = 0, n_neg = 0;
    for (const auto& p : pairs) (p.label ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw UndefinedMetricError("roc_points: both classes required");
    std::vector<LabeledScore> sorted = pairs;
    std::sort(sorted.begin(), sorted.end(),
              [](const LabeledScore& a, const LabeledScore& b) { return a.score > b.score; });
    std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
    long tp = 0, fp = 0;
    size_t i = 0;
    while (i < sorted.size()) {
        size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1].score == sorted[i].score) ++j;
        for (size_t k = i; k <= j; ++k) (sorted[k].label ? tp : fp)++;
        pts.emplace_back(static_cast<double>(fp) / n_neg, static_cast<double>(tp) / n_pos);
        i = j + 1;
    }
    return pts;
}

double point_biserial(const std::vector<double>& continuous, const std::vector<int>& binary) {
    if (continuous.size() != binary.size() || continuous.empty())
        throw UndefinedMetricError("point_biserial: size mismatch or empty input");
    const size_t n = continuous.size();
    double m1 = 0.0, m0 = 0.0;
    size_t n1 = 0, n0 = 0;
    for (size_t i = 0; i < n; ++i) {
        if (binary[i]) {
            m1 += continuous[i];
            ++n1;
        } else {
            m0 += continuous[i];
            ++n0;
        }
    }
    if (n1 == 0 || n0 == 0) throw UndefinedMetricError("point_biserial: binary vector is constant");
    m1 /= n1;
    m0 /= n0;

    double mean = 0.0;
    for (double v : continuous) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : continuous) var += (v - mean) * (v - mean);
    var /= n;  // population variance
    if (var <= 0.0)
        throw UndefinedMetricError("point_biserial: continuous variable has zero variance");

    const double p = static_cast<double>(n1) / n;
    const double q = static_cast<double>(n0) / n;
    return (m1 - m0) / std::sqrt(var) * std::sqrt(p * q);
}

double cramers_v(const ContingencyTable& table) {
    if (table.rows < 2 || table.cols < 2)
        throw UndefinedMetricError("cramers_v: need at least a 2x2 table");
    const int64_t n = table.total();
    if (n <= 0) throw UndefinedMetricError("cramers_v: empty table");

    std::vector<int64_t> row_sum(table.rows, 0), col_sum(table.cols, 0);
    for (int r = 0; r < table.rows; ++r)
        for (int c = 0; c < table.cols; ++c) {
            row_sum[r] += table.at(r, c);
            col_sum[c] += table.at(r, c);
        }
    for (int64_t s : row_sum)
        if (s == 0) throw UndefinedMetricError("cramers_v: zero row marginal");
    for (int64_t s : col_sum)
        if (s == 0) throw UndefinedMetricError("cramers_v: zero column marginal");

    double chi2 = 0.0;
    for (int r = 0; r < table.rows; ++r)
        for (int c = 0; c < table.cols; ++c) {
            const double expected =
                static_cast<double>(row_sum[r]) * static_cast<double>(col_sum[c]) / n;
            const double diff = static_cast<double>(table.at(r, c)) - expected;
            chi2 += diff * diff / expected;
        }
    const int k = std::min(table.rows, table.cols);
    return std::sqrt(chi2 / (static_cast<double>(n) * (k - 1)));
}

ContingencyTable contingency_from_pairs(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size() || a.empty())
        throw UndefinedMetricError("contingency_from_pairs: size mismatch or empty input");
    auto index_map = [](const std::vector<int>& v) {
        std::vector<int> values = v;
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        return values;
    };
    const auto ra = index_map(a);
    const auto rb = index_map(b);
    ContingencyTable t;
    t.rows = static_cast<int>(ra.size());
    t.cols = static_cast<int>(rb.size());
    t.counts.assign(static_cast<size_t>(t.rows) * t.cols, 0);
    for (size_t i = 0; i < a.size(); ++i) {
        const int r = static_cast<int>(std::lower_bound(ra.begin(), ra.end(), a[i]) - ra.begin());
        const int c = static_cast<int>(std::lower_bound(rb.begin(), rb.end(), b[i]) - rb.begin());
        t.at(r, c)++;
    }
    return t;
}

namespace {

template <typename StatFn>
PermutationResult permute_labels(const std::vector<int>& labels, StatFn stat, int n_permutations,
                                 uint64_t seed) {
    PermutationResult res;
    res.statistic = stat(labels);
    res.n_permutations = n_permutations;
    Rng rng(seed);
    std::vector<int> shuffled = labels;
    int extreme = 0;
    const double observed = std::abs(res.statistic);
    for (int p = 0; p < n_permutations; ++p) {
        for (size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[rng.uniform_int(0, static_cast<int64_t>(i) - 1)]);
        if (std::abs(stat(shuffled)) >= observed) ++extreme;
    }
    res.p_value = (1.0 + extreme) / (1.0 + n_permutations);
    return res;
}

}  // namespace

PermutationResult point_biserial_permutation(const std::vector<double>& continuous,
                                             const std::vector<int>& binary,
                                             int n_permutations, uint64_t seed) {
    return permute_labels(
        binary, [&](const std::vector<int>& b) { return point_biserial(continuous, b); },
        n_permutations, seed);
}

PermutationResult cramers_v_permutation(const std::vector<int>& a, const std::vector<int>& b,
                                        int n_permutations, uint64_t seed) {
    return permute_labels(
        b, [&](const std::vector<int>& bb) { return cramers_v(contingency_from_pairs(a, bb)); },
        n_permutations, seed);
}

}  // namespace gazecomp
