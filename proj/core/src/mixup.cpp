#include "adaptmask/mixup.hpp"

#include <algorithm>
#include <stdexcept>

namespace adaptmask {

Tensor mix_tensors(const Tensor& a, const Tensor& b, double alpha) {
    if (!a.same_shape(b))
        throw std::invalid_argument("mix_tensors: shape mismatch");
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument("mix_tensors: alpha must be in [0,1]");
    Tensor out(a.n(), a.c(), a.h(), a.w());
    for (size_t i = 0; i < a.size(); ++i)
        out.raw()[i] = alpha * a.raw()[i] + (1.0 - alpha) * b.raw()[i];
    return out;
}

Tensor forward_with_mixup(Model& model, const Tensor& batch, const MixupSpec& spec,
                          bool record) {
    MixHook hook = spec.hook();
    return model.forward(batch, &hook, record);
}

MixedLossResult mixed_consistency_loss(const Tensor& pred_mixed, const Tensor& pseudo_i,
                                       const Tensor& pseudo_j, double alpha) {
    if (!pred_mixed.same_shape(pseudo_i) || !pred_mixed.same_shape(pseudo_j))
        throw std::invalid_argument("mixed_consistency_loss: shape mismatch");
    MixedLossResult res;
    res.grad = Tensor(pred_mixed.n(), pred_mixed.c(), pred_mixed.h(), pred_mixed.w());
    double denom = static_cast<double>(pred_mixed.size());
    double sum_i = 0.0, sum_j = 0.0;
    for (size_t idx = 0; idx < pred_mixed.size(); ++idx) {
        double di = pred_mixed.raw()[idx] - pseudo_i.raw()[idx];
        double dj = pred_mixed.raw()[idx] - pseudo_j.raw()[idx];
        sum_i += di * di;
        sum_j += dj * dj;
        res.grad.raw()[idx] = 2.0 * (alpha * di + (1.0 - alpha) * dj) / denom;
    }
    res.value = (alpha * sum_i + (1.0 - alpha) * sum_j) / denom;
    return res;
}

double sample_beta(double a, std::mt19937_64& rng) {
    std::gamma_distribution<double> gamma(a, 1.0);
    double x = gamma(rng);
    double y = gamma(rng);
    if (x + y == 0.0) return 0.5;
    return x / (x + y);
}

std::vector<int> sample_partner_permutation(int n, std::mt19937_64& rng) {
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<int> pick(0, i);
        std::swap(perm[i], perm[pick(rng)]);
    }
    return perm;
}

int pick_mix_location(const MixupConfig& cfg, int num_stages, std::mt19937_64& rng) {
    if (cfg.location != "random")
        return parse_mix_location(cfg.location, num_stages);
    std::vector<int> pool = {0, parse_mix_location("stage-1", num_stages)};
    if (num_stages >= 3) pool.push_back(parse_mix_location("stage-3", num_stages));
    if (cfg.allow_late_stages) pool.push_back(num_stages + 1); // pre-head
    std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
    return pool[pick(rng)];
}

} // namespace adaptmask
