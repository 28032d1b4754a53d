#include "gazecomp/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace gazecomp {

const char* score_function_name(ScoreFunction f) {
    switch (f) {
        case ScoreFunction::Euclidean: return "euclidean";
        case ScoreFunction::Dtw: return "dtw";
        case ScoreFunction::Heatmap: return "heatmap";
        case ScoreFunction::Entropy: return "entropy";
        case ScoreFunction::Fused: return "fused";
    }
    return "unknown";
}

ScoreFunction score_function_from_name(const std::string& name) {
    if (name == "euclidean") return ScoreFunction::Euclidean;
    if (name == "dtw") return ScoreFunction::Dtw;
    if (name == "heatmap") return ScoreFunction::Heatmap;
    if (name == "entropy") return ScoreFunction::Entropy;
    if (name == "fused") return ScoreFunction::Fused;
    throw UsageError("unknown scoring function '" + name + "'");
}

double point_distance(const GazePoint& a, const GazePoint& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

ScoreRecord score_euclidean(const GazeTrajectory& gt, const GazeTrajectory& pred) {
    if (gt.size() != pred.size()) {
        throw ShapeError("score_euclidean: trajectory lengths differ (" + std::to_string(gt.size()) +
                         " vs " + std::to_string(pred.size()) + ")");
    }
    ScoreRecord rec;
    rec.function = ScoreFunction::Euclidean;
    double s = 0.0;
    int used = 0;
    for (size_t i = 0; i < gt.size(); ++i) {
        if (!gt[i].valid || !pred[i].valid) continue;
        s += point_distance(gt[i], pred[i]);
        ++used;
    }
    rec.frames_used = used;
    rec.absent = used == 0;
    rec.score = s;
    rec.raw = s;
    return rec;
}

ScoreRecord score_dtw(const GazeTrajectory& gt, const GazeTrajectory& pred) {
    std::vector<GazePoint> a, b;
    for (const auto& p : gt.points)
        if (p.valid) a.push_back(p);
    for (const auto& p : pred.points)
        if (p.valid) b.push_back(p);

    ScoreRecord rec;
    rec.function = ScoreFunction::Dtw;
    rec.frames_used = static_cast<int>(a.size());
    if (a.empty() || b.empty()) {
        if (gt.points.empty() || pred.points.empty()) throw ShapeError("score_dtw: empty sequence");
        rec.absent = true;
        return rec;
    }
    const size_t n = a.size(), m = b.size();
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(m, 0.0), cur(m, 0.0);
    for (size_t j = 0; j < m; ++j)
        prev[j] = point_distance(a[0], b[j]) + (j ? prev[j - 1] : 0.0);
    for (size_t i = 1; i < n; ++i) {
        for (size_t j = 0; j < m; ++j) {
            const double d = point_distance(a[i], b[j]);
            const double diag = j ? prev[j - 1] : kInf;
            const double up = prev[j];
            const double left = j ? cur[j - 1] : kInf;
            cur[j] = d + std::min({diag, up, left});
        }
        std::swap(prev, cur);
    }
    rec.score = prev[m - 1];
    rec.raw = rec.score;
    return rec;
}

ScoreRecord score_heatmap(const GazeTrajectory& gt, const HeatmapStack& qhat) {
    if (static_cast<int>(gt.size()) != qhat.frames()) {
        throw ShapeError("score_heatmap: trajectory length " + std::to_string(gt.size()) +
                         " vs heatmap frames " + std::to_string(qhat.frames()));
    }
    ScoreRecord rec;
    rec.function = ScoreFunction::Heatmap;
    double likelihood = 0.0;
    int used = 0;
    for (size_t i = 0; i < gt.size(); ++i) {
        const GazePoint& p = gt[i];
        if (!p.valid) continue;
        if (p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0) {
            throw ShapeError("score_heatmap: gaze point outside [0,1] at index " + std::to_string(i));
        }
        const int r = coord_to_cell(p.y, qhat.height());
        const int c = coord_to_cell(p.x, qhat.width());
        likelihood += qhat.at(static_cast<int>(i), r, c);
        ++used;
    }
    rec.frames_used = used;
    rec.absent = used == 0;
    rec.raw = likelihood;
    rec.score = -likelihood;
    return rec;
}

ScoreRecord score_entropy(const HeatmapStack& qhat) {
    ScoreRecord rec;
    rec.function = ScoreFunction::Entropy;
    const int f = qhat.frames();
    if (f == 0) throw ShapeError("score_entropy: empty heatmap stack");
    double total = 0.0;
    for (int i = 0; i < f; ++i) {
        const double s = qhat.frame_sum(i);
        if (std::abs(s - 1.0) > 1e-4) {
            throw ShapeError("score_entropy: frame " + std::to_string(i) + " not normalized (sum=" +
                             std::to_string(s) + ")");
        }
        const double* p = qhat.frame_data(i);
        for (size_t k = 0; k < qhat.cells_per_frame(); ++k) {
            if (p[k] > 0.0) total -= p[k] * std::log2(p[k]);
        }
    }
    rec.score = total / f;
    rec.raw = rec.score;
    rec.frames_used = f;
    return rec;
}

std::vector<ScoreRecord> late_fuse(const std::vector<ScoreRecord>& a,
                                   const std::vector<ScoreRecord>& b) {
    if (a.size() != b.size()) throw ShapeError("late_fuse: stream lengths differ");
    auto normalized = [](const std::vector<ScoreRecord>& s) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& r : s) {
            if (r.absent) continue;
            lo = std::min(lo, r.score);
            hi = std::max(hi, r.score);
        }
        std::vector<double> out(s.size(), 0.0);
        const double range = hi - lo;
        for (size_t i = 0; i < s.size(); ++i) {
            if (s[i].absent || range <= 0.0) continue;  // zero range -> all zeros
            out[i] = (s[i].score - lo) / range;
        }
        return out;
    };
    const auto na = normalized(a);
    const auto nb = normalized(b);
    std::vector<ScoreRecord> fused(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].timestep != b[i].timestep) {
            throw ShapeError("late_fuse: timestep misalignment at index " + std::to_string(i));
        }
        ScoreRecord r;
        r.timestep = a[i].timestep;
        r.function = ScoreFunction::Fused;
        r.absent = a[i].absent || b[i].absent;
        r.frames_used = std::min(a[i].frames_used, b[i].frames_used);
        r.score = 0.5 * (na[i] + nb[i]);
        r.raw = r.score;
        fused[i] = r;
    }
    return fused;
}

}  // namespace gazecomp
