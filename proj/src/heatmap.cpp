#include "gazecomp/heatmap.hpp"

#include <cmath>

namespace gazecomp {

double HeatmapStack::frame_sum(int f) const {
    const double* p = frame_data(f);
    double s = 0.0;
    for (size_t i = 0; i < cells_per_frame(); ++i) s += p[i];
    return s;
}

void HeatmapStack::check_normalized(double tol) const {
    for (int f = 0; f < frames_; ++f) {
        const double s = frame_sum(f);
        if (std::abs(s - 1.0) > tol) {
            throw ShapeError("heatmap frame " + std::to_string(f) + " not normalized (sum=" +
                             std::to_string(s) + ")");
        }
    }
}

int coord_to_cell(double coord, int dim) {
    int cell = static_cast<int>(std::floor(coord * dim));
    if (cell < 0) cell = 0;
    if (cell >= dim) cell = dim - 1;
    return cell;
}

double cell_to_coord(int cell, int dim) { return (cell + 0.5) / dim; }

HeatmapStack encode_gaussian(const GazeTrajectory& traj, double sigma, int height, int width) {
    if (sigma <= 0.0) throw ShapeError("encode_gaussian: sigma must be positive");
    if (height < 2 || width < 2) throw ShapeError("encode_gaussian: grid must be at least 2x2");

    const int n = static_cast<int>(traj.size());
    HeatmapStack stack(n, height, width);
    stack.uniform_flags.assign(n, false);
    const double uniform = 1.0 / (static_cast<double>(height) * width);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);

    for (int f = 0; f < n; ++f) {
        const GazePoint& p = traj[f];
        if (!p.valid) {
            double* dst = stack.frame_data(f);
            for (size_t i = 0; i < stack.cells_per_frame(); ++i) dst[i] = uniform;
            stack.uniform_flags[f] = true;
            continue;
        }
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw NumericError("encode_gaussian: non-finite gaze coordinate at frame " + std::to_string(f));
        }
        const int r0 = coord_to_cell(p.y, height);
        const int c0 = coord_to_cell(p.x, width);
        double sum = 0.0;
        for (int r = 0; r < height; ++r) {
            for (int c = 0; c < width; ++c) {
                const double d2 = static_cast<double>(r - r0) * (r - r0) +
                                  static_cast<double>(c - c0) * (c - c0);
                const double v = std::exp(-d2 * inv2s2);
                stack.at(f, r, c) = v;
                sum += v;
            }
        }
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c) stack.at(f, r, c) /= sum;
    }
    return stack;
}

GazeTrajectory decode_peak(const HeatmapStack& stack) {
    GazeTrajectory traj;
    traj.points.reserve(stack.frames());
    for (int f = 0; f < stack.frames(); ++f) {
        const double* p = stack.frame_data(f);
        size_t best = 0;
        for (size_t i = 1; i < stack.cells_per_frame(); ++i)
            if (p[i] > p[best]) best = i;  // strict >: ties keep the lowest index
        const int r = static_cast<int>(best) / stack.width();
        const int c = static_cast<int>(best) % stack.width();
        traj.points.push_back({cell_to_coord(c, stack.width()), cell_to_coord(r, stack.height()), true});
    }
    return traj;
}

}  // namespace gazecomp
