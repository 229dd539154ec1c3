#pragma once

#include <random>
#include <utility>
#include <vector>

#include "adaptmask/heatmap.hpp"
#include "adaptmask/tensor.hpp"

namespace adaptmask {

/// Knobs for difficulty-driven keypoint masking.
struct MaskPolicy {
    double gamma = 0.5;    // relative-response threshold separating simple/difficult joints
    int m = 8;             // parameter set: mask count allocated when every joint is simple
    int floor = 2;         // mask count pinned for extreme samples
    double tau_min = 0.3;  // minimum acceptable peak responsiveness
    int size_min_px = 8;   // square mask side, image pixels
    int size_max_px = 24;

    void validate() const;
};

/// Per-sample mask allocation plus the diagnostics that produced it.
struct MaskBudget {
    int count = 0;
    int n_simple = 0;
    std::vector<double> relative_response;
    bool extreme = false;
};

/// r_j = (max - resp_j) / (max - min); all zeros when the vector is flat.
std::vector<double> relative_response(const std::vector<double>& resp);

/// Difficulty classification and mask-count allocation from raw
/// per-joint responsiveness. count = round(n * m / K), half away
/// from zero, unless the sample is extreme (max < tau_min), in
/// which case count is pinned to policy.floor.
MaskBudget allocate_mask_count(const std::vector<double>& resp, const MaskPolicy& policy);

/// Fills budget.count squares of random side length, centered on
/// distinct randomly chosen visible joints, with the per-channel
/// image mean. Input image (1xCxHxW) is left untouched.
/// Returns the masked copy and the masked joint ids.
std::pair<Tensor, std::vector<int>> apply_keypoint_masks(const Tensor& image,
                                                         const KeypointSet& decoded,
                                                         const MaskBudget& budget,
                                                         const MaskPolicy& policy,
                                                         std::mt19937_64& rng);

} // namespace adaptmask
