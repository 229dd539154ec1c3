#include "adaptmask/heatmap.hpp"

#include <cmath>
#include <stdexcept>

namespace adaptmask {

double peak_value(const Heatmap& map) {
    double best = map.values.empty() ? 0.0 : map.values[0];
    for (double v : map.values)
        if (v > best) best = v;
    return best;
}

std::pair<int, int> peak_cell(const Heatmap& map) {
    size_t best = 0;
    for (size_t i = 1; i < map.values.size(); ++i)
        if (map.values[i] > map.values[best]) best = i;
    return {static_cast<int>(best) / map.width, static_cast<int>(best) % map.width};
}

HeatmapStack synthesize_targets(const KeypointSet& keypoints, double sigma,
                                int out_height, int out_width, double stride) {
    if (sigma <= 0.0) throw std::invalid_argument("synthesize_targets: sigma must be > 0");
    if (stride <= 0.0) throw std::invalid_argument("synthesize_targets: stride must be > 0");
    if (out_height < 1 || out_width < 1)
        throw std::invalid_argument("synthesize_targets: output size must be >= 1");

    HeatmapStack stack;
    stack.maps.reserve(keypoints.joint_count());
    const double radius = 3.0 * sigma;
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);

    for (int j = 0; j < keypoints.joint_count(); ++j) {
        Heatmap map(j, out_height, out_width);
        if (keypoints.labeled(j)) {
            int cx = static_cast<int>(std::lround(keypoints.coords[j].x / stride));
            int cy = static_cast<int>(std::lround(keypoints.coords[j].y / stride));
            int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
            int y1 = std::min(out_height - 1, static_cast<int>(std::ceil(cy + radius)));
            int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
            int x1 = std::min(out_width - 1, static_cast<int>(std::ceil(cx + radius)));
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    double dx = x - cx, dy = y - cy;
                    double d2 = dx * dx + dy * dy;
                    if (d2 > radius * radius) continue;
                    double v = std::exp(-d2 * inv_two_sigma2);
                    if (v < 1e-4) continue;
                    map.at(y, x) = v;
                }
            }
        }
        stack.maps.push_back(std::move(map));
    }
    return stack;
}

std::vector<double> responsiveness(const HeatmapStack& stack) {
    std::vector<double> out;
    out.reserve(stack.maps.size());
    for (const auto& map : stack.maps)
        out.push_back(peak_value(map));
    return out;
}

KeypointSet decode_peaks(const HeatmapStack& stack, double stride) {
    KeypointSet out(stack.joint_count());
    for (int j = 0; j < stack.joint_count(); ++j) {
        const Heatmap& map = stack.maps[j];
        auto [py, px] = peak_cell(map);
        double x = px, y = py;
        // quarter-cell shift toward the higher of the two neighbors
        if (px > 0 && px < map.width - 1) {
            double diff = map.at(py, px + 1) - map.at(py, px - 1);
            if (diff > 0) x += 0.25;
            else if (diff < 0) x -= 0.25;
        }
        if (py > 0 && py < map.height - 1) {
            double diff = map.at(py + 1, px) - map.at(py - 1, px);
            if (diff > 0) y += 0.25;
            else if (diff < 0) y -= 0.25;
        }
        out.coords[j] = {x * stride, y * stride};
        out.visibility[j] = Visibility::LabeledVisible;
    }
    return out;
}

HeatmapStack stack_from_tensor(const Tensor& t, int sample, const std::string& sample_id) {
    HeatmapStack stack;
    stack.sample_id = sample_id;
    stack.maps.reserve(t.c());
    for (int j = 0; j < t.c(); ++j) {
        Heatmap map(j, t.h(), t.w());
        for (int y = 0; y < t.h(); ++y)
            for (int x = 0; x < t.w(); ++x)
                map.at(y, x) = t(sample, j, y, x);
        stack.maps.push_back(std::move(map));
    }
    return stack;
}

Tensor tensor_from_stack(const HeatmapStack& stack) {
    Tensor t(1, stack.joint_count(), stack.height(), stack.width());
    for (int j = 0; j < stack.joint_count(); ++j)
        for (int y = 0; y < stack.height(); ++y)
            for (int x = 0; x < stack.width(); ++x)
                t(0, j, y, x) = stack.maps[j].at(y, x);
    return t;
}

} // namespace adaptmask
