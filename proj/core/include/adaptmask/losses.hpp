#pragma once

#include <vector>

#include "adaptmask/tensor.hpp"

namespace adaptmask {

/// Components and weights of the total training loss
/// total = l_s + lambda_u * l_u + lambda_m * l_m.
struct LossBundle {
    double l_s = 0.0;
    double l_u = 0.0;
    double l_m = 0.0;
    double lambda_u = 0.0;
    double lambda_m = 0.0;
    double total = 0.0;
};

LossBundle compose_total_loss(double l_s, double l_u, double l_m,
                              double lambda_u, double lambda_m);

struct LossResult {
    double value = 0.0;
    Tensor grad;         // dL/dpred, same shape as pred
    bool warned = false; // true when every joint was masked out
};

/// MSE over the cells of unmasked (sample, joint) pairs. joint_mask[n][k]
/// true means the joint participates. Empty mask = all participate.
LossResult masked_mse_loss(const Tensor& pred, const Tensor& target,
                           const std::vector<std::vector<bool>>& joint_mask);

inline LossResult supervised_loss(const Tensor& pred, const Tensor& target,
                                  const std::vector<std::vector<bool>>& joint_mask) {
    return masked_mse_loss(pred, target, joint_mask);
}

/// Same mechanics; pseudo targets are constants (no gradient flows to them).
inline LossResult consistency_loss(const Tensor& student_pred, const Tensor& pseudo,
                                   const std::vector<std::vector<bool>>& valid_mask) {
    return masked_mse_loss(student_pred, pseudo, valid_mask);
}

} // namespace adaptmask
