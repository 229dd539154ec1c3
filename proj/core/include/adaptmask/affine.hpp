#pragma once

#include <array>
#include <random>

#include "adaptmask/heatmap.hpp"
#include "adaptmask/tensor.hpp"

namespace adaptmask {

/// Rotation-scale-translation augmentation about the image center.
/// matrix maps source coordinates to augmented coordinates:
///   p' = s * R * (p - c) + c + t
struct AffineAug {
    double rotation_deg = 0.0;
    double scale = 1.0;
    double tx = 0.0;
    double ty = 0.0;
    std::array<double, 6> matrix = {1, 0, 0, 0, 1, 0}; // row-major 2x3

    static AffineAug identity() { return {}; }
    static AffineAug make(double rotation_deg, double scale, double tx, double ty,
                          double center_x, double center_y);
    /// Raw matrix, for relative transforms that are not a single RST.
    static AffineAug from_matrix(const std::array<double, 6>& m);

    Point2 apply(const Point2& p) const {
        return {matrix[0] * p.x + matrix[1] * p.y + matrix[2],
                matrix[3] * p.x + matrix[4] * p.y + matrix[5]};
    }

    AffineAug inverse() const;
    /// this ∘ other (other applied first).
    AffineAug compose(const AffineAug& other) const;
    /// Same mapping expressed in a frame scaled down by `stride`.
    AffineAug in_stride_frame(double stride) const;
};

struct AugRanges {
    double weak_rotation_max = 15.0;
    double weak_scale_min = 0.9, weak_scale_max = 1.1;
    double strong_rotation_max = 45.0;
    double strong_scale_min = 0.7, strong_scale_max = 1.3;
    double strong_translate_frac = 0.1;
};

AffineAug sample_weak(std::mt19937_64& rng, const AugRanges& ranges,
                      int image_h, int image_w);
AffineAug sample_strong(std::mt19937_64& rng, const AugRanges& ranges,
                        int image_h, int image_w);

/// Bilinear warp; out-of-bounds samples read 0.
Tensor warp_image(const Tensor& image, const AffineAug& aug);
HeatmapStack warp_heatmaps(const HeatmapStack& stack, const AffineAug& rel);
KeypointSet warp_keypoints(const KeypointSet& kps, const AffineAug& aug,
                           int image_h, int image_w);

} // namespace adaptmask
