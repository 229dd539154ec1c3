#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "adaptmask/affine.hpp"
#include "adaptmask/masking.hpp"
#include "adaptmask/mixup.hpp"
#include "adaptmask/model.hpp"

namespace adaptmask {

enum class Method { Supervised, PseudoPose, Single, Adaptive, AdaptiveMixup };

Method parse_method(const std::string& name);
std::string method_name(Method m);

/// Full experiment configuration. File format is flat `key = value`
/// with dotted sections and `#` comments.
struct TrainConfig {
    // data
    std::string data_dir;
    std::string coco_annotations;
    std::string coco_image_root;
    int labels = 50;
    int val_count = 40;
    uint64_t split_seed = 1;

    // model
    BackboneConfig backbone;
    double sigma = 2.0; // gaussian target width, heatmap pixels

    // schedule
    int epochs = 30;
    int batch_labeled = 8;
    int batch_unlabeled = 8;
    double lr_initial = 1e-3;
    std::vector<std::pair<int, double>> lr_drops = {{20, 1e-4}, {25, 1e-5}};
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int eval_every = 1;
    double clip_norm = 0.0; // global L2 gradient-norm clip, 0 disables
    int warmup_epochs = 2; // linear ramp of the unsupervised weights
    uint64_t seed = 0;
    Method method = Method::Adaptive;
    double lambda_u = 1.0;
    // regenerate clean gaussian pseudo-targets at the teacher's decoded
    // peaks instead of regressing to the raw (soft) teacher maps
    bool hard_pseudo = false;

    AugRanges aug;
    MaskPolicy mask;
    MixupConfig mixup;

    std::string protocol = "pck"; // oks | pck
    std::string out_dir = "runs/run";

    double lr_at_epoch(int epoch) const;
    void validate() const;

    static TrainConfig from_file(const std::string& path);
    static TrainConfig from_map(const std::map<std::string, std::string>& kv);
    /// Snapshot with every default documented inline.
    std::string to_text() const;
};

/// key = value lines, '#' comments, dotted keys.
std::map<std::string, std::string> parse_config_text(const std::string& text);

} // namespace adaptmask
