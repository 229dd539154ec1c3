#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adaptmask/tensor.hpp"

namespace adaptmask {

enum class Visibility : uint8_t {
    NotLabeled = 0,
    LabeledInvisible = 1,
    LabeledVisible = 2,
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// K joint coordinates in input-image pixels plus per-joint visibility.
struct KeypointSet {
    std::vector<Point2> coords;
    std::vector<Visibility> visibility;

    KeypointSet() = default;
    explicit KeypointSet(int k)
        : coords(k), visibility(k, Visibility::NotLabeled) {}

    int joint_count() const { return static_cast<int>(coords.size()); }
    bool labeled(int j) const { return visibility[j] != Visibility::NotLabeled; }
    bool visible(int j) const { return visibility[j] == Visibility::LabeledVisible; }
};

/// Per-joint 2D activation surface, row-major (h, w).
struct Heatmap {
    int joint_id = 0;
    int height = 0;
    int width = 0;
    std::vector<double> values;

    Heatmap() = default;
    Heatmap(int joint, int h, int w)
        : joint_id(joint), height(h), width(w),
          values(static_cast<size_t>(h) * w, 0.0) {}

    double& at(int y, int x) { return values[static_cast<size_t>(y) * width + x]; }
    double at(int y, int x) const { return values[static_cast<size_t>(y) * width + x]; }
};

/// One heatmap per joint, joint_ids 0..K-1, all sharing one (h, w).
struct HeatmapStack {
    std::vector<Heatmap> maps;
    std::string sample_id;

    int joint_count() const { return static_cast<int>(maps.size()); }
    int height() const { return maps.empty() ? 0 : maps.front().height; }
    int width() const { return maps.empty() ? 0 : maps.front().width; }
};

/// Peak value of one heatmap, scanning all cells.
double peak_value(const Heatmap& map);

/// Argmax cell (y, x); ties broken by lowest row-major index.
std::pair<int, int> peak_cell(const Heatmap& map);

/// Gaussian targets: peak exactly 1.0 at the heatmap cell nearest
/// coords/stride, truncated at radius 3*sigma and below 1e-4.
/// Joints flagged not-labeled produce all-zero maps.
HeatmapStack synthesize_targets(const KeypointSet& keypoints, double sigma,
                                int out_height, int out_width, double stride);

/// Element j is the max activation of map j, in joint_id order.
std::vector<double> responsiveness(const HeatmapStack& stack);

/// Argmax decode with quarter-cell refinement toward the higher neighbor.
/// All decoded joints come back labeled-visible.
KeypointSet decode_peaks(const HeatmapStack& stack, double stride);

/// (N, K, h, w) tensor <-> per-sample stacks.
HeatmapStack stack_from_tensor(const Tensor& t, int sample,
                               const std::string& sample_id = "");
Tensor tensor_from_stack(const HeatmapStack& stack);

} // namespace adaptmask
