#include "adaptmask/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace adaptmask {

std::vector<double> coco_sigmas() {
    return {0.026, 0.025, 0.025, 0.035, 0.035, 0.079, 0.079, 0.072, 0.072,
            0.062, 0.062, 0.107, 0.107, 0.087, 0.087, 0.089, 0.089};
}

std::vector<double> uniform_sigmas(int k, double value) {
    return std::vector<double>(k, value);
}

double oks(const KeypointSet& pred, const KeypointSet& gt, const OksParams& params) {
    if (params.area <= 0.0) throw std::invalid_argument("oks: area must be > 0");
    if (static_cast<int>(params.sigmas.size()) != gt.joint_count())
        throw std::invalid_argument("oks: sigma count mismatch");
    for (double s : params.sigmas)
        if (s <= 0.0) throw std::invalid_argument("oks: sigmas must be > 0");

    double sum = 0.0;
    int contributing = 0;
    for (int j = 0; j < gt.joint_count(); ++j) {
        bool counts = params.strict_visible_only ? gt.visible(j) : gt.labeled(j);
        if (!counts) continue;
        double dx = pred.coords[j].x - gt.coords[j].x;
        double dy = pred.coords[j].y - gt.coords[j].y;
        double d2 = dx * dx + dy * dy;
        sum += std::exp(-d2 / (2.0 * params.area * params.sigmas[j] * params.sigmas[j]));
        ++contributing;
    }
    if (contributing == 0)
        throw std::invalid_argument("oks: no gt joint contributes (zero visible joints)");
    return sum / contributing;
}

std::vector<double> oks_thresholds() {
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) t.push_back(0.50 + 0.05 * i);
    return t;
}

namespace {

/// 101-point interpolated AP at one OKS threshold.
double ap_at_threshold(const std::vector<std::pair<double, double>>& sorted,
                       double threshold) {
    size_t n = sorted.size();
    std::vector<double> precision(n), recall(n);
    int tp = 0;
    for (size_t i = 0; i < n; ++i) {
        if (sorted[i].second >= threshold) ++tp;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(tp) / static_cast<double>(n);
    }
    // precision envelope from the right
    for (size_t i = n - 1; i-- > 0;)
        precision[i] = std::max(precision[i], precision[i + 1]);
    double acc = 0.0;
    size_t pos = 0;
    for (int r = 0; r <= 100; ++r) {
        double target = r / 100.0;
        while (pos < n && recall[pos] < target) ++pos;
        if (pos < n) acc += precision[pos];
    }
    return acc / 101.0;
}

} // namespace

ApResult average_precision(const std::vector<std::pair<double, double>>& instances,
                           const std::vector<double>& thresholds) {
    if (instances.empty())
        throw std::invalid_argument("average_precision: empty instance list");
    auto sorted = instances;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    ApResult res;
    double ap_sum = 0.0, ar_sum = 0.0;
    for (double t : thresholds) {
        double ap_t = ap_at_threshold(sorted, t);
        int tp = 0;
        for (const auto& inst : sorted)
            if (inst.second >= t) ++tp;
        double recall_t = static_cast<double>(tp) / sorted.size();
        ap_sum += ap_t;
        ar_sum += recall_t;
        if (std::abs(t - 0.50) < 1e-9) res.ap50 = ap_t;
        if (std::abs(t - 0.75) < 1e-9) res.ap75 = ap_t;
    }
    res.ap = ap_sum / thresholds.size();
    res.ar = ar_sum / thresholds.size();
    return res;
}

namespace {

// group index per joint: 0 head, 1 shoulder, 2 elbow, 3 wrist,
// 4 hip, 5 knee, 6 ankle, -1 ungrouped (excluded from PCK totals)
std::vector<int> joint_groups(int k) {
    if (k == 16) {
        // MPII order: r-ankle, r-knee, r-hip, l-hip, l-knee, l-ankle,
        // pelvis, thorax, upper-neck, head-top, r-wrist, r-elbow,
        // r-shoulder, l-shoulder, l-elbow, l-wrist
        return {6, 5, 4, 4, 5, 6, -1, -1, 0, 0, 3, 2, 1, 1, 2, 3};
    }
    if (k == 17) {
        // COCO order: nose, eyes, ears, shoulders, elbows, wrists,
        // hips, knees, ankles
        return {0, 0, 0, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6};
    }
    throw std::invalid_argument("pck: unsupported joint count " + std::to_string(k));
}

double head_diameter(const Rect& r) {
    return std::hypot(r.lower_right.x - r.upper_left.x,
                      r.lower_right.y - r.upper_left.y);
}

} // namespace

PckResult pck(const std::vector<KeypointSet>& preds,
              const std::vector<KeypointSet>& gts,
              const std::vector<PckInstanceMeta>& metas, const PckParams& params) {
    if (params.threshold <= 0.0)
        throw std::invalid_argument("pck: threshold must be > 0");
    if (preds.size() != gts.size())
        throw std::invalid_argument("pck: pred/gt count mismatch");

    std::array<long, 7> correct{};
    std::array<long, 7> counted{};
    for (size_t i = 0; i < preds.size(); ++i) {
        const auto groups = joint_groups(gts[i].joint_count());
        double scale = 0.0;
        std::optional<Rect> head = params.head_rect;
        if (i < metas.size() && metas[i].head_rect) head = metas[i].head_rect;
        if (params.scale_source == ScaleSource::HeadDiameter) {
            if (!head)
                throw std::invalid_argument("pck: head-diameter scale requires head_rect");
            scale = head_diameter(*head);
        } else {
            if (i >= metas.size() || !metas[i].bbox)
                throw std::invalid_argument("pck: bbox-diagonal scale requires bbox");
            scale = head_diameter(*metas[i].bbox);
        }
        for (int j = 0; j < gts[i].joint_count(); ++j) {
            if (!gts[i].labeled(j) || groups[j] < 0) continue;
            double d = std::hypot(preds[i].coords[j].x - gts[i].coords[j].x,
                                  preds[i].coords[j].y - gts[i].coords[j].y);
            ++counted[groups[j]];
            if (d / scale < params.threshold) ++correct[groups[j]];
        }
    }

    auto rate = [&](int g) {
        return counted[g] ? static_cast<double>(correct[g]) / counted[g] : 0.0;
    };
    PckResult res;
    res.head = rate(0);
    res.shoulder = rate(1);
    res.elbow = rate(2);
    res.wrist = rate(3);
    res.hip = rate(4);
    res.knee = rate(5);
    res.ankle = rate(6);
    long total_correct = std::accumulate(correct.begin(), correct.end(), 0L);
    long total_counted = std::accumulate(counted.begin(), counted.end(), 0L);
    res.total = total_counted ? static_cast<double>(total_correct) / total_counted : 0.0;
    return res;
}

std::string metrics_to_json(const ApResult& ap, const PckResult& pck) {
    std::ostringstream os;
    os.precision(10);
    os << "{\"ap\":" << ap.ap << ",\"ap50\":" << ap.ap50 << ",\"ap75\":" << ap.ap75
       << ",\"ar\":" << ap.ar << ",\"pck\":{\"head\":" << pck.head
       << ",\"shoulder\":" << pck.shoulder << ",\"elbow\":" << pck.elbow
       << ",\"wrist\":" << pck.wrist << ",\"hip\":" << pck.hip
       << ",\"knee\":" << pck.knee << ",\"ankle\":" << pck.ankle
       << ",\"total\":" << pck.total << "}}";
    return os.str();
}

} // namespace adaptmask
