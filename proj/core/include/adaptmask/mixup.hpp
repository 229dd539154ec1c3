#pragma once

#include <random>
#include <vector>

#include "adaptmask/model.hpp"
#include "adaptmask/tensor.hpp"

namespace adaptmask {

/// One batch-level mixing decision: coefficient, partner permutation
/// and the network boundary where interpolation happens. The same
/// alpha weights both the sample mix and the mixed loss.
struct MixupSpec {
    double alpha = 1.0;
    std::vector<int> partner;
    int location = 0; // boundary id, see MixHook

    MixHook hook() const { return {location, alpha, partner}; }
};

struct MixupConfig {
    bool enabled = true;
    double beta_a = 0.75;
    std::string location = "stage-3"; // fixed boundary name or "random"
    bool allow_late_stages = false;   // adds pre-head to the random pool
    double lambda_m = 1.0;
};

/// Elementwise alpha * a + (1 - alpha) * b.
Tensor mix_tensors(const Tensor& a, const Tensor& b, double alpha);

/// Propagate to spec.location, interpolate activations with partner
/// rows, resume to the heatmap output. location == input reproduces
/// plain image mixup.
Tensor forward_with_mixup(Model& model, const Tensor& batch, const MixupSpec& spec,
                          bool record = false);

struct MixedLossResult {
    double value = 0.0;
    Tensor grad; // dL/dpred_mixed
};

/// alpha * MSE(pred, pseudo_i) + (1 - alpha) * MSE(pred, pseudo_j),
/// mean over batch, joints and cells.
MixedLossResult mixed_consistency_loss(const Tensor& pred_mixed, const Tensor& pseudo_i,
                                       const Tensor& pseudo_j, double alpha);

/// Draws alpha ~ Beta(a, a) via two gamma variates.
double sample_beta(double a, std::mt19937_64& rng);

/// Uniform shuffle of 0..n-1 (identity pairs allowed).
std::vector<int> sample_partner_permutation(int n, std::mt19937_64& rng);

/// Picks the boundary for this step per config ("random" draws from
/// {input, stage-1, stage-3}, plus pre-head when late stages are allowed).
int pick_mix_location(const MixupConfig& cfg, int num_stages, std::mt19937_64& rng);

} // namespace adaptmask
