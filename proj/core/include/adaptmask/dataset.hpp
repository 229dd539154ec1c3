#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adaptmask/heatmap.hpp"
#include "adaptmask/metrics.hpp"
#include "adaptmask/tensor.hpp"

namespace adaptmask {

/// Fixed normalization constants so checkpoints stay portable
/// across splits: normalized = (v01 - 0.5) / 0.25.
inline constexpr double kNormMean = 0.5;
inline constexpr double kNormStd = 0.25;

struct SampleMeta {
    std::string source_id;
    std::optional<Rect> head_rect;
    std::optional<double> area;
};

struct SampleRecord {
    Tensor image; // 1 x C x H x W, normalized
    std::optional<KeypointSet> keypoints; // absent => unlabeled
    Rect bbox;    // crop box in original image coords
    SampleMeta meta;
};

/// Ground truth stripped from unlabeled records, handed only to
/// evaluation code (pseudo-label quality measurements).
struct SealedAnnotations {
    std::map<std::string, KeypointSet> by_id;
};

struct SplitSpec {
    int labeled_count = 0;
    uint64_t seed = 0;
    std::string source;
};

struct Split {
    std::vector<SampleRecord> labeled;
    std::vector<SampleRecord> unlabeled; // keypoints removed
    SealedAnnotations sealed;
};

/// COCO-style person-keypoint ingestion: one record per annotation,
/// crop expanded to the target aspect ratio and resized.
std::vector<SampleRecord> load_coco_keypoints(const std::string& annotation_file,
                                              const std::string& image_root,
                                              int input_h, int input_w);

/// Deterministic shuffle by seed; the first labeled_count annotated
/// records stay labeled, the rest are stripped and sealed.
Split make_split(const std::vector<SampleRecord>& records, const SplitSpec& spec);

struct SyntheticConfig {
    int count = 100;
    int image_size = 64;
    double occlusion_frac = 0.3; // fraction rendered low-contrast or occluded
    uint64_t seed = 0;
};

/// Random articulated 2D stick figures (16 MPII-style joints) over a
/// textured noise background, with exact joint ground truth.
std::vector<SampleRecord> generate_stick_figures(const SyntheticConfig& cfg);

inline constexpr const char* kSyntheticManifestVersion = "ADAPTMASK-SYNTH-1";

/// Persists records as manifest.json + PNG files; byte-stable per seed.
void save_synthetic_dataset(const std::vector<SampleRecord>& records,
                            const std::string& dir);
std::vector<SampleRecord> load_synthetic_dataset(const std::string& dir);

/// Crop-frame <-> original-frame coordinate mapping for a record.
Point2 crop_to_original(const SampleRecord& rec, const Point2& p, int input_h, int input_w);
Point2 original_to_crop(const SampleRecord& rec, const Point2& p, int input_h, int input_w);

} // namespace adaptmask
