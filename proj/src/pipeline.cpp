#include "gazecomp/pipeline.hpp"

#include <algorithm>

namespace gazecomp {

namespace {

// Copies session frames [first, first+F) into a ClipWindow ending at 1-based
// timestep first+F.
ClipWindow make_window(const SessionRecord& session, int first, int frames) {
    const int half = frames / 2;
    ClipWindow clip;
    clip.frames = frames;
    clip.channels = session.channels;
    clip.height = session.height;
    clip.width = session.width;
    clip.window_end = first + frames;  // 1-based
    const size_t per_frame = session.cells_per_frame();
    clip.grids.resize(static_cast<size_t>(frames) * per_frame);
    for (int f = 0; f < frames; ++f) {
        const float* src = session.frames.data() + static_cast<size_t>(first + f) * per_frame;
        double* dst = clip.grids.data() + static_cast<size_t>(f) * per_frame;
        for (size_t k = 0; k < per_frame; ++k) dst[k] = static_cast<double>(src[k]);
    }
    clip.partial_traj.frame_offset = first;
    clip.partial_traj.points.assign(session.gaze.points.begin() + first,
                                    session.gaze.points.begin() + first + half);
    clip.target_traj.frame_offset = first + half;
    clip.target_traj.points.assign(session.gaze.points.begin() + first + half,
                                   session.gaze.points.begin() + first + frames);
    return clip;
}

HeatmapStack predicted_half(const HeatmapStack& full, int half) {
    HeatmapStack tail(half, full.height(), full.width());
    const size_t n = full.cells_per_frame();
    for (int f = 0; f < half; ++f)
        std::copy(full.frame_data(full.frames() - half + f),
                  full.frame_data(full.frames() - half + f) + n, tail.frame_data(f));
    return tail;
}

nlohmann::json snapshot(const CompletionModel& model, ScoreFunction fn, int stride) {
    nlohmann::json j;
    j["model"] = model.config();
    j["function"] = score_function_name(fn);
    j["stride"] = stride;
    return j;
}

}  // namespace

WindowExtraction extract_windows(const SessionRecord& session, int frames, int stride) {
    session.validate();
    if (frames < 2 || frames % 2 != 0) throw ShapeError("extract_windows: F must be even and >= 2");
    if (stride < 1) throw ShapeError("extract_windows: stride must be >= 1");
    WindowExtraction out;
    const int length = session.frame_count();
    if (length < frames) {
        out.too_short = true;
        log_warn("session '" + session.session_id + "' shorter than window (" +
                 std::to_string(length) + " < " + std::to_string(frames) + "); no windows");
        return out;
    }
    for (int first = 0; first + frames <= length; first += stride)
        out.windows.push_back(make_window(session, first, frames));
    return out;
}

ScoreRecord score_window(const CompletionModel& model, const ClipWindow& clip, ScoreFunction fn) {
    const int half = model.config().half();
    auto [pred_traj, q_full] = model.complete(clip);
    GazeTrajectory gt = clip.target_traj;
    gt.frame_offset = pred_traj.frame_offset;

    ScoreRecord rec;
    switch (fn) {
        case ScoreFunction::Euclidean:
            rec = score_euclidean(gt, pred_traj);
            break;
        case ScoreFunction::Dtw:
            rec = score_dtw(gt, pred_traj);
            break;
        case ScoreFunction::Heatmap:
            rec = score_heatmap(gt, predicted_half(q_full, half));
            break;
        case ScoreFunction::Entropy:
            rec = score_entropy(predicted_half(q_full, half));
            break;
        case ScoreFunction::Fused:
            throw UsageError("fused scores come from late_fuse, not score_window");
    }
    rec.timestep = clip.window_end;
    return rec;
}

ScoreStream detect(const SessionRecord& session, const CompletionModel& model, ScoreFunction fn,
                   int stride) {
    return detect_all(session, model, {fn}, stride).front();
}

std::vector<ScoreStream> detect_all(const SessionRecord& session, const CompletionModel& model,
                                    const std::vector<ScoreFunction>& fns, int stride) {
    const ModelConfig& cfg = model.config();
    if (session.height != cfg.height || session.width != cfg.width ||
        session.channels != cfg.channels) {
        throw ConfigMismatchError("session '" + session.session_id + "' grid " +
                                  std::to_string(session.channels) + "x" +
                                  std::to_string(session.height) + "x" +
                                  std::to_string(session.width) + " does not match model config");
    }
    std::vector<ScoreStream> streams(fns.size());
    for (size_t i = 0; i < fns.size(); ++i) {
        streams[i].session_id = session.session_id;
        streams[i].function = fns[i];
        streams[i].config_snapshot = snapshot(model, fns[i], stride);
    }
    auto extraction = extract_windows(session, cfg.frames, stride);
    for (const auto& clip : extraction.windows) {
        const int half = cfg.half();
        auto [pred_traj, q_full] = model.complete(clip);
        GazeTrajectory gt = clip.target_traj;
        gt.frame_offset = pred_traj.frame_offset;
        HeatmapStack tail = predicted_half(q_full, half);
        for (size_t i = 0; i < fns.size(); ++i) {
            ScoreRecord rec;
            switch (fns[i]) {
                case ScoreFunction::Euclidean: rec = score_euclidean(gt, pred_traj); break;
                case ScoreFunction::Dtw: rec = score_dtw(gt, pred_traj); break;
                case ScoreFunction::Heatmap: rec = score_heatmap(gt, tail); break;
                case ScoreFunction::Entropy: rec = score_entropy(tail); break;
                case ScoreFunction::Fused:
                    throw UsageError("fused scores come from late_fuse, not detect");
            }
            rec.timestep = clip.window_end;
            streams[i].records.push_back(rec);
        }
    }
    return streams;
}

std::vector<LabeledScore> label_stream(const SessionRecord& session, const ScoreStream& stream) {
    std::vector<LabeledScore> pairs;
    for (const auto& rec : stream.records) {
        if (rec.absent) continue;
        const int64_t idx = rec.timestep - 1;  // 1-based timestep -> frame index
        if (idx < 0 || idx >= static_cast<int64_t>(session.labels.size()))
            throw ShapeError("label_stream: no label for timestep " +
                             std::to_string(rec.timestep) + " in session '" +
                             session.session_id + "'");
        pairs.push_back({rec.score, session.labels[idx] ? 1 : 0});
    }
    return pairs;
}

StreamingDetector::StreamingDetector(const CompletionModel& model, ScoreFunction fn, int stride)
    : model_(model), fn_(fn), stride_(stride) {
    if (stride < 1) throw ShapeError("StreamingDetector: stride must be >= 1");
}

std::optional<ScoreRecord> StreamingDetector::push(const std::vector<float>& grid,
                                                   const GazePoint& gaze) {
    const ModelConfig& cfg = model_.config();
    const size_t expected = static_cast<size_t>(cfg.channels) * cfg.height * cfg.width;
    if (grid.size() != expected)
        throw ShapeError("StreamingDetector: frame grid has " + std::to_string(grid.size()) +
                         " cells, expected " + std::to_string(expected));
    return push(grid.data(), gaze);
}

std::optional<ScoreRecord> StreamingDetector::push(const float* grid, const GazePoint& gaze) {
    const ModelConfig& cfg = model_.config();
    const size_t per_frame = static_cast<size_t>(cfg.channels) * cfg.height * cfg.width;
    std::vector<double> converted(per_frame);
    for (size_t k = 0; k < per_frame; ++k) converted[k] = static_cast<double>(grid[k]);
    grids_.push_back(std::move(converted));
    gaze_.push_back(gaze);
    if (static_cast<int>(grids_.size()) > cfg.frames) {
        grids_.pop_front();
        gaze_.pop_front();
    }
    ++t_;
    if (t_ < cfg.frames || (t_ - cfg.frames) % stride_ != 0) return std::nullopt;

    const int half = cfg.half();
    ClipWindow clip;
    clip.frames = cfg.frames;
    clip.channels = cfg.channels;
    clip.height = cfg.height;
    clip.width = cfg.width;
    clip.window_end = static_cast<int>(t_);
    clip.grids.resize(static_cast<size_t>(cfg.frames) * per_frame);
    for (int f = 0; f < cfg.frames; ++f)
        std::copy(grids_[f].begin(), grids_[f].end(),
                  clip.grids.begin() + static_cast<size_t>(f) * per_frame);
    clip.partial_traj.frame_offset = t_ - cfg.frames;
    clip.partial_traj.points.assign(gaze_.begin(), gaze_.begin() + half);
    clip.target_traj.frame_offset = t_ - half;
    clip.target_traj.points.assign(gaze_.begin() + half, gaze_.end());
    return score_window(model_, clip, fn_);
}

}  // namespace gazecomp
