#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gazecomp/common.hpp"
#include "gazecomp/heatmap.hpp"

namespace gazecomp {

// One recorded egocentric session: per-frame object-presence grids, the gaze
// trajectory, and per-frame mistake labels (0 correct / 1 mistake).
struct SessionRecord {
    std::string session_id;
    int height = 0;
    int width = 0;
    int channels = 0;
    // [T][C][H][W] row-major, float32 on disk.
    std::vector<float> frames;
    GazeTrajectory gaze;
    std::vector<uint8_t> labels;
    std::map<std::string, std::string> metadata;

    int frame_count() const { return static_cast<int>(gaze.size()); }
    size_t cells_per_frame() const {
        return static_cast<size_t>(channels) * height * width;
    }
    float grid_at(int t, int c, int r, int col) const {
        return frames[((static_cast<size_t>(t) * channels + c) * height + r) * width + col];
    }
    float& grid_at(int t, int c, int r, int col) {
        return frames[((static_cast<size_t>(t) * channels + c) * height + r) * width + col];
    }

    void validate() const {
        if (height < 1 || width < 1 || channels < 1)
            throw ShapeError("session '" + session_id + "': non-positive grid dims");
        const size_t t = gaze.size();
        if (labels.size() != t)
            throw ShapeError("session '" + session_id + "': label count " +
                             std::to_string(labels.size()) + " != frame count " + std::to_string(t));
        if (frames.size() != t * cells_per_frame())
            throw ShapeError("session '" + session_id + "': grid buffer size mismatch");
    }
};

}  // namespace gazecomp
