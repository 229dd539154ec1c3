#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "adaptmask/tensor.hpp"

namespace adaptmask {

/// Named, flat parameter storage. Values are authoritative in 32-bit
/// floats (the checkpoint precision); arithmetic happens in double.
class ParameterStore {
public:
    struct Entry {
        std::string name;
        std::vector<int> shape;
        size_t offset = 0;
        size_t count = 0;
    };

    size_t add(const std::string& name, const std::vector<int>& shape);
    size_t total() const { return values_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }

    float* values() { return values_.data(); }
    const float* values() const { return values_.data(); }
    double* grads() { return grads_.data(); }
    const double* grads() const { return grads_.data(); }

    void zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

    std::vector<float>& raw_values() { return values_; }
    const std::vector<float>& raw_values() const { return values_; }

private:
    std::vector<Entry> entries_;
    std::vector<float> values_;
    std::vector<double> grads_;
};

struct StageSpec {
    int channels = 8;
    bool downsample = true;
};

/// Tiny encoder-decoder heatmap backbone: 3x3 conv stages (stride 2
/// when downsampling), a nearest-upsample + conv head, and a final
/// 1x1 projection to one map per joint.
struct BackboneConfig {
    int in_channels = 3;
    int input_h = 64;
    int input_w = 64;
    std::vector<StageSpec> stages = {{8, true}, {16, true}, {16, true}};
    int head_deconvs = 2;
    int out_joints = 16;

    int heatmap_h() const;
    int heatmap_w() const;
    double stride() const { return static_cast<double>(input_h) / heatmap_h(); }
    void validate() const;
};

/// Where a mixup hook attaches. Boundary 0 is the raw input; boundary
/// k (1..N) is the output of stage k; boundary N+1 is pre-head.
struct MixHook {
    int boundary = 0;
    double alpha = 1.0;
    std::vector<int> partner; // permutation of batch indices
};

int parse_mix_location(const std::string& name, int num_stages);
std::string mix_location_name(int boundary, int num_stages);

class Layer;

class Model {
public:
    explicit Model(const BackboneConfig& config, std::mt19937_64& init_rng);
    ~Model();
    Model(Model&&) noexcept;
    Model& operator=(Model&&) noexcept;

    const BackboneConfig& config() const { return config_; }
    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }

    /// Forward pass. With record=true activations are kept for one
    /// subsequent backward() call. mix may be null.
    Tensor forward(const Tensor& input, const MixHook* mix = nullptr,
                   bool record = false);

    /// Accumulates parameter gradients from the last recorded forward.
    void backward(const Tensor& grad_output);

    void zero_grad() { params_.zero_grad(); }
    int num_boundaries() const;

private:
    BackboneConfig config_;
    ParameterStore params_;
    std::vector<std::unique_ptr<Layer>> layers_;
    // boundary id -> index of the first layer after that boundary
    std::vector<int> boundary_layer_;
    MixHook recorded_mix_;
    bool mix_active_ = false;
};

class Adam {
public:
    Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParameterStore& params, double lr);

    long steps() const { return t_; }
    std::vector<double>& first_moment() { return m_; }
    std::vector<double>& second_moment() { return v_; }
    void set_steps(long t) { t_ = t; }

private:
    double beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

inline constexpr const char* kCheckpointMagic = "ADAPTMASK-CKPT-1";

void save_checkpoint(const std::string& path, const Model& model, const Adam* opt,
                     int epoch, const std::string& rng_state);
/// Returns (epoch, rng_state). Parameter names/shapes must match the model.
std::pair<int, std::string> load_checkpoint(const std::string& path, Model& model,
                                            Adam* opt);

} // namespace adaptmask
