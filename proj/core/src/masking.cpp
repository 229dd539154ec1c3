#include "adaptmask/masking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adaptmask {

void MaskPolicy::validate() const {
    if (gamma <= 0.0 || gamma >= 1.0)
        throw std::invalid_argument("MaskPolicy: gamma must be in (0,1)");
    if (m < 1) throw std::invalid_argument("MaskPolicy: m must be positive");
    if (floor < 0 || floor > m)
        throw std::invalid_argument("MaskPolicy: floor must be in [0, m]");
    if (tau_min <= 0.0 || tau_min >= 1.0)
        throw std::invalid_argument("MaskPolicy: tau_min must be in (0,1)");
    if (size_min_px < 1 || size_max_px < size_min_px)
        throw std::invalid_argument("MaskPolicy: bad size range");
}

std::vector<double> relative_response(const std::vector<double>& resp) {
    const int k = static_cast<int>(resp.size());
    if (k < 2) throw std::invalid_argument("relative_response: need K >= 2 joints");
    double hi = *std::max_element(resp.begin(), resp.end());
    double lo = *std::min_element(resp.begin(), resp.end());
    std::vector<double> r(k, 0.0);
    if (hi == lo) return r; // flat sample: every joint counts as simple
    for (int j = 0; j < k; ++j)
        r[j] = (hi - resp[j]) / (hi - lo);
    return r;
}

MaskBudget allocate_mask_count(const std::vector<double>& resp, const MaskPolicy& policy) {
    policy.validate();
    MaskBudget budget;
    budget.relative_response = relative_response(resp);
    const int k = static_cast<int>(resp.size());

    for (double r : budget.relative_response)
        if (r < policy.gamma) ++budget.n_simple;

    double hi = *std::max_element(resp.begin(), resp.end());
    if (hi < policy.tau_min) {
        budget.extreme = true;
        budget.count = policy.floor;
    } else {
        budget.count = static_cast<int>(
            std::llround(static_cast<double>(budget.n_simple) * policy.m / k));
    }
    return budget;
}

std::pair<Tensor, std::vector<int>> apply_keypoint_masks(const Tensor& image,
                                                         const KeypointSet& decoded,
                                                         const MaskBudget& budget,
                                                         const MaskPolicy& policy,
                                                         std::mt19937_64& rng) {
    Tensor out = image;
    std::vector<int> candidates;
    for (int j = 0; j < decoded.joint_count(); ++j)
        if (decoded.visible(j)) candidates.push_back(j);
    if (candidates.empty() || budget.count == 0)
        return {std::move(out), {}};

    int take = std::min<int>(budget.count, static_cast<int>(candidates.size()));
    // partial Fisher-Yates for a uniform draw without replacement
    for (int i = 0; i < take; ++i) {
        std::uniform_int_distribution<int> pick(i, static_cast<int>(candidates.size()) - 1);
        std::swap(candidates[i], candidates[pick(rng)]);
    }
    candidates.resize(take);

    std::vector<double> channel_mean(image.c(), 0.0);
    for (int c = 0; c < image.c(); ++c) {
        double sum = 0.0;
        for (int y = 0; y < image.h(); ++y)
            for (int x = 0; x < image.w(); ++x)
                sum += image(0, c, y, x);
        channel_mean[c] = sum / (image.h() * image.w());
    }

    std::uniform_int_distribution<int> side_dist(policy.size_min_px, policy.size_max_px);
    for (int j : candidates) {
        int side = side_dist(rng);
        int cx = static_cast<int>(std::lround(decoded.coords[j].x));
        int cy = static_cast<int>(std::lround(decoded.coords[j].y));
        int x0 = std::max(0, cx - side / 2);
        int y0 = std::max(0, cy - side / 2);
        int x1 = std::min(image.w(), x0 + side);
        int y1 = std::min(image.h(), y0 + side);
        for (int c = 0; c < image.c(); ++c)
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x)
                    out(0, c, y, x) = channel_mean[c];
    }
    return {std::move(out), std::move(candidates)};
}

} // namespace adaptmask
