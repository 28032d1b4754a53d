#pragma once

#include <string>
#include <vector>

#include "gazecomp/heatmap.hpp"

namespace gazecomp {

enum class ScoreFunction { Euclidean, Dtw, Heatmap, Entropy, Fused };

const char* score_function_name(ScoreFunction f);
ScoreFunction score_function_from_name(const std::string& name);

// One mistake score for one timestep. Higher always means "more
// mistake-like", across every function; the heatmap likelihood is negated to
// keep that polarity and the raw (un-negated) value is kept in `raw`.
struct ScoreRecord {
    int64_t timestep = 0;  // 1-based frame number the score attaches to
    double score = 0.0;
    double raw = 0.0;  // function-specific auxiliary (heatmap: likelihood)
    ScoreFunction function = ScoreFunction::Euclidean;
    int frames_used = 0;
    bool absent = false;  // no valid gaze available; excluded from metrics
};

// Sum of per-index Euclidean distances over indices where gt is valid.
ScoreRecord score_euclidean(const GazeTrajectory& gt, const GazeTrajectory& pred);

// Exact dynamic-programming DTW cost (steps: match/insertion/deletion,
// Euclidean point distance, no window constraint). Invalid gt frames are
// dropped before alignment.
ScoreRecord score_dtw(const GazeTrajectory& gt, const GazeTrajectory& pred);

// Likelihood of the observed fixations under the predicted heatmaps:
// raw = sum over valid frames of qhat[frame][cell(gt)]. Stored score is the
// negated likelihood. gt index i pairs with qhat frame i.
ScoreRecord score_heatmap(const GazeTrajectory& gt, const HeatmapStack& qhat);

// Mean entropy (bits) of the predicted heatmaps; needs no ground truth.
ScoreRecord score_entropy(const HeatmapStack& qhat);

// Min-max normalize each stream over the full set to [0,1] (a zero-range
// stream normalizes to all zeros), then average per timestep. Inputs must be
// timestep-aligned.
std::vector<ScoreRecord> late_fuse(const std::vector<ScoreRecord>& a,
                                   const std::vector<ScoreRecord>& b);

double point_distance(const GazePoint& a, const GazePoint& b);

}  // namespace gazecomp
