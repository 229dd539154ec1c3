#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "adaptmask/config.hpp"
#include "adaptmask/dataset.hpp"
#include "adaptmask/losses.hpp"
#include "adaptmask/masking.hpp"
#include "adaptmask/metrics.hpp"
#include "adaptmask/model.hpp"

namespace adaptmask {

/// Deterministic seed derivation (splitmix64 over the components), so
/// every branch and step draws from an isolated stream.
uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c = 0, uint64_t d = 0);

struct StepResult {
    LossBundle losses;
    std::vector<MaskBudget> budgets;        // one per unlabeled sample
    std::vector<std::string> unlabeled_ids; // aligned with budgets
    double mean_pseudo_responsiveness = 0.0;
};

struct EvalMetrics {
    ApResult ap;
    PckResult pck;
};

/// Thrown when a loss turns non-finite; fit() dumps state and rethrows.
struct TrainAbortError : std::runtime_error {
    TrainAbortError(const std::string& what, std::vector<std::string> ids)
        : std::runtime_error(what), batch_ids(std::move(ids)) {}
    std::vector<std::string> batch_ids;
};

/// metrics.csv rows as column-name -> cell maps (blank cells kept).
std::vector<std::map<std::string, std::string>> read_metrics_csv(const std::string& path);

/// Owns the model, the optimizer and the three data pools; runs the
/// shared-weight teacher-student loop.
class Trainer {
public:
    explicit Trainer(const TrainConfig& cfg);
    Trainer(const TrainConfig& cfg, std::vector<SampleRecord> labeled,
            std::vector<SampleRecord> unlabeled, std::vector<SampleRecord> val);

    /// One optimizer step: supervised branch, teacher forward, masked
    /// student branch, mixup student branch, per the configured method.
    StepResult train_step(int epoch, int step);

    /// Full schedule. Writes config.json, metrics.csv, diagnostics.jsonl
    /// and checkpoints under cfg.out_dir; returns that directory.
    std::string fit(bool resume = false);

    EvalMetrics evaluate_split(const std::vector<SampleRecord>& records);

    /// Teacher-side Algorithm-1 diagnostics without training.
    std::vector<MaskBudget> allocate_masks_for(const std::vector<SampleRecord>& records);

    Model& model() { return model_; }
    Adam& optimizer() { return opt_; }
    const TrainConfig& config() const { return cfg_; }
    int steps_per_epoch() const;
    const std::vector<SampleRecord>& labeled() const { return labeled_; }
    const std::vector<SampleRecord>& unlabeled() const { return unlabeled_; }
    const std::vector<SampleRecord>& validation() const { return val_; }

    void freeze_teacher();
    bool teacher_frozen() const { return frozen_params_.has_value(); }

    /// Mean clamped peak response of the teacher over a fixed,
    /// un-augmented subset of the unlabeled pool.
    double unlabeled_responsiveness(int limit = 100);

private:
    Tensor teacher_forward(const Tensor& batch);
    std::vector<size_t> epoch_order(uint64_t tag, int epoch, size_t pool) const;

    TrainConfig cfg_;
    std::vector<SampleRecord> labeled_, unlabeled_, val_;
    Model model_;
    Adam opt_;
    std::optional<std::vector<float>> frozen_params_;
    int start_epoch_ = 0; // set on resume
};

/// Loads a checkpoint-compatible model and evaluates a dataset directory.
EvalMetrics evaluate_checkpoint(const std::string& ckpt_path,
                                const std::string& data_dir,
                                const std::string& protocol, TrainConfig cfg);

/// Loss/AP line charts and a per-epoch mask-count histogram (SVG) from
/// one or more run directories.
std::vector<std::string> emit_plots(const std::vector<std::string>& run_dirs,
                                    const std::string& out_dir);

} // namespace adaptmask
