#include "adaptmask/affine.hpp"

#include <cmath>
#include <stdexcept>

namespace adaptmask {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

AffineAug AffineAug::make(double rotation_deg, double scale, double tx, double ty,
                          double center_x, double center_y) {
    if (scale == 0.0) throw std::invalid_argument("AffineAug: scale must be non-zero");
    AffineAug aug;
    aug.rotation_deg = rotation_deg;
    aug.scale = scale;
    aug.tx = tx;
    aug.ty = ty;
    double th = rotation_deg * kPi / 180.0;
    double a = scale * std::cos(th);
    double b = scale * std::sin(th);
    // p' = sR(p - c) + c + t
    aug.matrix = {a, -b, -a * center_x + b * center_y + center_x + tx,
                  b, a, -b * center_x - a * center_y + center_y + ty};
    return aug;
}

AffineAug AffineAug::from_matrix(const std::array<double, 6>& m) {
    AffineAug aug;
    aug.matrix = m;
    aug.rotation_deg = std::atan2(m[3], m[0]) * 180.0 / kPi;
    aug.scale = std::hypot(m[0], m[3]);
    aug.tx = m[2];
    aug.ty = m[5];
    return aug;
}

AffineAug AffineAug::inverse() const {
    double det = matrix[0] * matrix[4] - matrix[1] * matrix[3];
    if (std::abs(det) < 1e-12)
        throw std::invalid_argument("AffineAug: transform is not invertible");
    double ia = matrix[4] / det, ib = -matrix[1] / det;
    double ic = -matrix[3] / det, id = matrix[0] / det;
    return from_matrix({ia, ib, -(ia * matrix[2] + ib * matrix[5]),
                        ic, id, -(ic * matrix[2] + id * matrix[5])});
}

AffineAug AffineAug::compose(const AffineAug& other) const {
    const auto& a = matrix;
    const auto& b = other.matrix;
    return from_matrix({a[0] * b[0] + a[1] * b[3], a[0] * b[1] + a[1] * b[4],
                        a[0] * b[2] + a[1] * b[5] + a[2],
                        a[3] * b[0] + a[4] * b[3], a[3] * b[1] + a[4] * b[4],
                        a[3] * b[2] + a[4] * b[5] + a[5]});
}

AffineAug AffineAug::in_stride_frame(double stride) const {
    if (stride <= 0.0) throw std::invalid_argument("in_stride_frame: stride must be > 0");
    // conjugate by the stride scaling: M' = S^-1 M S
    return from_matrix({matrix[0], matrix[1], matrix[2] / stride,
                        matrix[3], matrix[4], matrix[5] / stride});
}

AffineAug sample_weak(std::mt19937_64& rng, const AugRanges& ranges,
                      int image_h, int image_w) {
    std::uniform_real_distribution<double> rot(-ranges.weak_rotation_max,
                                               ranges.weak_rotation_max);
    std::uniform_real_distribution<double> sc(ranges.weak_scale_min, ranges.weak_scale_max);
    double r = rot(rng);
    double s = sc(rng);
    return AffineAug::make(r, s, 0.0, 0.0, (image_w - 1) / 2.0, (image_h - 1) / 2.0);
}

AffineAug sample_strong(std::mt19937_64& rng, const AugRanges& ranges,
                        int image_h, int image_w) {
    std::uniform_real_distribution<double> rot(-ranges.strong_rotation_max,
                                               ranges.strong_rotation_max);
    std::uniform_real_distribution<double> sc(ranges.strong_scale_min,
                                              ranges.strong_scale_max);
    std::uniform_real_distribution<double> tr(-ranges.strong_translate_frac,
                                              ranges.strong_translate_frac);
    double r = rot(rng);
    double s = sc(rng);
    double tx = tr(rng) * image_w;
    double ty = tr(rng) * image_h;
    return AffineAug::make(r, s, tx, ty, (image_w - 1) / 2.0, (image_h - 1) / 2.0);
}

namespace {

double bilinear(const Tensor& img, int n, int c, double y, double x) {
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    double fx = x - x0, fy = y - y0;
    double acc = 0.0;
    for (int dy = 0; dy <= 1; ++dy) {
        for (int dx = 0; dx <= 1; ++dx) {
            int yy = y0 + dy, xx = x0 + dx;
            if (yy < 0 || yy >= img.h() || xx < 0 || xx >= img.w()) continue;
            double wgt = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
            acc += wgt * img(n, c, yy, xx);
        }
    }
    return acc;
}

} // namespace

Tensor warp_image(const Tensor& image, const AffineAug& aug) {
    AffineAug inv = aug.inverse();
    Tensor out(image.n(), image.c(), image.h(), image.w());
    for (int n = 0; n < image.n(); ++n) {
        for (int y = 0; y < image.h(); ++y) {
            for (int x = 0; x < image.w(); ++x) {
                Point2 src = inv.apply({static_cast<double>(x), static_cast<double>(y)});
                for (int c = 0; c < image.c(); ++c)
                    out(n, c, y, x) = bilinear(image, n, c, src.y, src.x);
            }
        }
    }
    return out;
}

HeatmapStack warp_heatmaps(const HeatmapStack& stack, const AffineAug& rel) {
    AffineAug inv = rel.inverse();
    HeatmapStack out;
    out.sample_id = stack.sample_id;
    out.maps.reserve(stack.maps.size());
    for (const auto& map : stack.maps) {
        Heatmap warped(map.joint_id, map.height, map.width);
        Tensor tmp(1, 1, map.height, map.width);
        for (int y = 0; y < map.height; ++y)
            for (int x = 0; x < map.width; ++x)
                tmp(0, 0, y, x) = map.at(y, x);
        for (int y = 0; y < map.height; ++y) {
            for (int x = 0; x < map.width; ++x) {
                Point2 src = inv.apply({static_cast<double>(x), static_cast<double>(y)});
                warped.at(y, x) = bilinear(tmp, 0, 0, src.y, src.x);
            }
        }
        out.maps.push_back(std::move(warped));
    }
    return out;
}

KeypointSet warp_keypoints(const KeypointSet& kps, const AffineAug& aug,
                           int image_h, int image_w) {
    KeypointSet out = kps;
    for (int j = 0; j < kps.joint_count(); ++j) {
        Point2 p = aug.apply(kps.coords[j]);
        out.coords[j] = p;
        if (kps.labeled(j) &&
            (p.x < 0 || p.x > image_w - 1 || p.y < 0 || p.y > image_h - 1))
            out.visibility[j] = Visibility::NotLabeled; // left the frame, no supervision
    }
    return out;
}

} // namespace adaptmask
