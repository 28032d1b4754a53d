#pragma once

#include <vector>

#include "gazecomp/common.hpp"

namespace gazecomp {

// A single gaze fixation in normalized image coordinates. Trackers drop
// frames; `valid=false` marks those, and invalid points are excluded from
// every scoring sum downstream.
struct GazePoint {
    double x = 0.0;  // horizontal, [0,1]
    double y = 0.0;  // vertical, [0,1]
    bool valid = true;
};

struct GazeTrajectory {
    std::vector<GazePoint> points;
    int64_t frame_offset = 0;  // absolute index of the first point

    size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    const GazePoint& operator[](size_t i) const { return points[i]; }
    GazePoint& operator[](size_t i) { return points[i]; }
};

// Per-frame probability grids over the image plane. Every frame sums to 1.
class HeatmapStack {
public:
    HeatmapStack() = default;
    HeatmapStack(int frames, int height, int width)
        : frames_(frames), h_(height), w_(width),
          values_(static_cast<size_t>(frames) * height * width, 0.0) {}

    int frames() const { return frames_; }
    int height() const { return h_; }
    int width() const { return w_; }
    size_t cells_per_frame() const { return static_cast<size_t>(h_) * w_; }

    double& at(int f, int r, int c) { return values_[idx(f, r, c)]; }
    double at(int f, int r, int c) const { return values_[idx(f, r, c)]; }
    double* frame_data(int f) { return values_.data() + static_cast<size_t>(f) * cells_per_frame(); }
    const double* frame_data(int f) const { return values_.data() + static_cast<size_t>(f) * cells_per_frame(); }

    double frame_sum(int f) const;
    // Throws ShapeError when any frame's mass deviates from 1 by more than tol.
    void check_normalized(double tol = 1e-6) const;

    // Frames whose source gaze point was invalid (encoded as uniform).
    std::vector<bool> uniform_flags;

private:
    size_t idx(int f, int r, int c) const {
        return (static_cast<size_t>(f) * h_ + r) * w_ + c;
    }
    int frames_ = 0, h_ = 0, w_ = 0;
    std::vector<double> values_;
};

// Cell-center coordinate conventions. Coordinate 1.0 clamps into the last
// cell so the closed interval [0,1] always maps somewhere.
int coord_to_cell(double coord, int dim);
double cell_to_coord(int cell, int dim);

// Encode each fixation as a discrete isotropic Gaussian (stddev `sigma`, in
// grid cells) centered on the containing cell, normalized to unit mass.
// Invalid points become uniform frames.
HeatmapStack encode_gaussian(const GazeTrajectory& traj, double sigma, int height, int width);

// Decode the per-frame argmax cell back to a trajectory of cell centers.
// Ties break toward the lowest row-major index.
GazeTrajectory decode_peak(const HeatmapStack& stack);

}  // namespace gazecomp
