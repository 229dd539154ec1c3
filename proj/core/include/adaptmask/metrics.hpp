#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adaptmask/heatmap.hpp"

namespace adaptmask {

struct Rect {
    Point2 upper_left;
    Point2 lower_right;
};

/// Per-joint normalization constants and object scale for OKS.
struct OksParams {
    std::vector<double> sigmas; // one per joint, all > 0
    double area = 0.0;          // object segment area, pixels^2 (S^2)
    // COCO practice counts all labeled joints; strict mode counts only
    // labeled-visible, reading the delta(v=1) literally.
    bool strict_visible_only = false;
};

/// The 17 standard COCO keypoint constants.
std::vector<double> coco_sigmas();
/// Uniform sigma vector for synthetic data.
std::vector<double> uniform_sigmas(int k, double value = 0.05);

/// Object keypoint similarity in [0,1]. Throws when no gt joint contributes.
double oks(const KeypointSet& pred, const KeypointSet& gt, const OksParams& params);

struct ApResult {
    double ap = 0.0;
    double ap50 = 0.0;
    double ap75 = 0.0;
    double ar = 0.0;
};

/// The ten COCO thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> oks_thresholds();

/// Greedy score-ordered matching, 101-point interpolated AP per
/// threshold; AP/AR are means over the thresholds.
/// instances: (score, oks) per matched prediction, one per gt.
ApResult average_precision(const std::vector<std::pair<double, double>>& instances,
                           const std::vector<double>& thresholds = oks_thresholds());

enum class ScaleSource { HeadDiameter, BboxDiagonal };

struct PckParams {
    double threshold = 0.5;
    ScaleSource scale_source = ScaleSource::BboxDiagonal;
    std::optional<Rect> head_rect; // shared head rect; per-instance meta overrides
};

struct PckInstanceMeta {
    std::optional<Rect> head_rect;
    std::optional<Rect> bbox;
};

struct PckResult {
    double head = 0.0, shoulder = 0.0, elbow = 0.0, wrist = 0.0;
    double hip = 0.0, knee = 0.0, ankle = 0.0;
    double total = 0.0;
};

/// Joint correct iff ||pred - gt|| / scale < threshold (strict).
/// Groups follow the MPII table columns; K decides the joint layout
/// (16 = MPII-style, 17 = COCO-style).
PckResult pck(const std::vector<KeypointSet>& preds,
              const std::vector<KeypointSet>& gts,
              const std::vector<PckInstanceMeta>& metas, const PckParams& params);

std::string metrics_to_json(const ApResult& ap, const PckResult& pck);

} // namespace adaptmask
