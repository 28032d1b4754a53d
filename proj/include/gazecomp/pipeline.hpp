#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "gazecomp/model.hpp"
#include "gazecomp/scoring.hpp"
#include "gazecomp/session.hpp"

#include "json.hpp"

namespace gazecomp {

// Per-timestep scores for one session under one scoring function. Timesteps
// are 1-based; warm-up frames t < F carry no record.
struct ScoreStream {
    std::string session_id;
    ScoreFunction function = ScoreFunction::Heatmap;
    std::vector<ScoreRecord> records;
    nlohmann::json config_snapshot;
};

struct WindowExtraction {
    std::vector<ClipWindow> windows;
    bool too_short = false;  // session length < F: no windows, caller may warn
};

// Windows end at t = F, F+stride, ... (1-based); each carries the first F/2
// gaze points as partial_traj and the last F/2 as target_traj.
WindowExtraction extract_windows(const SessionRecord& session, int frames, int stride);

// Scores one already-assembled window; shared by batch and streaming modes.
ScoreRecord score_window(const CompletionModel& model, const ClipWindow& clip, ScoreFunction fn);

ScoreStream detect(const SessionRecord& session, const CompletionModel& model, ScoreFunction fn,
                   int stride = 1);

// One complete() per window, fanned out to several scoring functions.
std::vector<ScoreStream> detect_all(const SessionRecord& session, const CompletionModel& model,
                                    const std::vector<ScoreFunction>& fns, int stride = 1);

// Joins scores with ground-truth frame labels; absent records are dropped.
std::vector<LabeledScore> label_stream(const SessionRecord& session, const ScoreStream& stream);

// Incremental mode: push one frame (grid + gaze) at a time; a ScoreRecord
// pops out whenever a window boundary is crossed. Output matches detect().
class StreamingDetector {
public:
    StreamingDetector(const CompletionModel& model, ScoreFunction fn, int stride = 1);

    std::optional<ScoreRecord> push(const float* grid, const GazePoint& gaze);
    std::optional<ScoreRecord> push(const std::vector<float>& grid, const GazePoint& gaze);

    int64_t frames_seen() const { return t_; }

private:
    const CompletionModel& model_;
    ScoreFunction fn_;
    int stride_;
    int64_t t_ = 0;  // frames pushed so far
    std::deque<std::vector<double>> grids_;  // last F frames, [C][H][W] each
    std::deque<GazePoint> gaze_;
};

}  // namespace gazecomp
