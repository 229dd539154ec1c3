#include "adaptmask/losses.hpp"

#include <stdexcept>

namespace adaptmask {

LossBundle compose_total_loss(double l_s, double l_u, double l_m,
                              double lambda_u, double lambda_m) {
    if (lambda_u < 0.0 || lambda_m < 0.0)
        throw std::invalid_argument("compose_total_loss: lambdas must be >= 0");
    LossBundle b;
    b.l_s = l_s;
    b.l_u = l_u;
    b.l_m = l_m;
    b.lambda_u = lambda_u;
    b.lambda_m = lambda_m;
    b.total = l_s + lambda_u * l_u + lambda_m * l_m;
    return b;
}

LossResult masked_mse_loss(const Tensor& pred, const Tensor& target,
                           const std::vector<std::vector<bool>>& joint_mask) {
    if (!pred.same_shape(target))
        throw std::invalid_argument("masked_mse_loss: shape mismatch");
    LossResult res;
    res.grad = Tensor(pred.n(), pred.c(), pred.h(), pred.w());

    auto active = [&](int n, int k) {
        return joint_mask.empty() || joint_mask[n][k];
    };
    size_t active_joints = 0;
    for (int n = 0; n < pred.n(); ++n)
        for (int k = 0; k < pred.c(); ++k)
            if (active(n, k)) ++active_joints;
    if (active_joints == 0) {
        res.warned = true;
        return res;
    }

    double denom = static_cast<double>(active_joints) * pred.h() * pred.w();
    double sum = 0.0;
    for (int n = 0; n < pred.n(); ++n) {
        for (int k = 0; k < pred.c(); ++k) {
            if (!active(n, k)) continue;
            for (int y = 0; y < pred.h(); ++y) {
                for (int x = 0; x < pred.w(); ++x) {
                    double d = pred(n, k, y, x) - target(n, k, y, x);
                    sum += d * d;
                    res.grad(n, k, y, x) = 2.0 * d / denom;
                }
            }
        }
    }
    res.value = sum / denom;
    return res;
}

} // namespace adaptmask
