#include "adaptmask/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace adaptmask {

namespace {

double normalize_px(double v01) { return (v01 - kNormMean) / kNormStd; }
double denormalize_px(double v) { return v * kNormStd + kNormMean; }

Tensor tensor_from_u8(const std::vector<uint8_t>& rgb, int h, int w) {
    Tensor t(1, 3, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                t(0, c, y, x) =
                    normalize_px(rgb[(static_cast<size_t>(y) * w + x) * 3 + c] / 255.0);
    return t;
}

std::vector<uint8_t> u8_from_tensor(const Tensor& t) {
    std::vector<uint8_t> rgb(static_cast<size_t>(t.h()) * t.w() * 3);
    for (int y = 0; y < t.h(); ++y)
        for (int x = 0; x < t.w(); ++x)
            for (int c = 0; c < 3; ++c) {
                double v = denormalize_px(t(0, c, y, x)) * 255.0;
                rgb[(static_cast<size_t>(y) * t.w() + x) * 3 + c] =
                    static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
    return rgb;
}

} // namespace

// ------------------------------------------------------------------ COCO

std::vector<SampleRecord> load_coco_keypoints(const std::string& annotation_file,
                                              const std::string& image_root,
                                              int input_h, int input_w) {
    std::ifstream is(annotation_file);
    if (!is) throw std::runtime_error("cannot open annotation file: " + annotation_file);
    json doc;
    try {
        is >> doc;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed annotation JSON " + annotation_file + ": " +
                                 e.what());
    }
    if (!doc.contains("images") || !doc.contains("annotations"))
        throw std::runtime_error("annotation file lacks images/annotations: " +
                                 annotation_file);

    std::map<int64_t, std::string> image_files;
    for (const auto& im : doc["images"])
        image_files[im["id"].get<int64_t>()] = im["file_name"].get<std::string>();

    std::map<int64_t, cv::Mat> image_cache;
    std::vector<SampleRecord> records;
    const double aspect = static_cast<double>(input_w) / input_h;

    for (const auto& ann : doc["annotations"]) {
        int64_t ann_id = ann.value("id", static_cast<int64_t>(records.size()));
        int64_t image_id = ann["image_id"].get<int64_t>();
        auto fit = image_files.find(image_id);
        if (fit == image_files.end())
            throw std::runtime_error("annotation " + std::to_string(ann_id) +
                                     " references unknown image " + std::to_string(image_id));

        const auto& kp_json = ann["keypoints"];
        if (kp_json.size() % 3 != 0 || kp_json.empty()) {
            std::cerr << "warning: skipping annotation " << ann_id
                      << " with malformed keypoints array\n";
            continue;
        }
        int k = static_cast<int>(kp_json.size()) / 3;

        auto cit = image_cache.find(image_id);
        if (cit == image_cache.end()) {
            fs::path p = fs::path(image_root) / fit->second;
            cv::Mat img = cv::imread(p.string(), cv::IMREAD_COLOR);
            if (img.empty())
                throw std::runtime_error("cannot read image for annotation " +
                                         std::to_string(ann_id) + ": " + p.string());
            cit = image_cache.emplace(image_id, std::move(img)).first;
        }
        const cv::Mat& img = cit->second;

        auto bb = ann["bbox"];
        double bx = bb[0].get<double>(), by = bb[1].get<double>();
        double bw = bb[2].get<double>(), bh = bb[3].get<double>();
        // expand to the target aspect ratio about the box center
        double cx = bx + bw / 2.0, cy = by + bh / 2.0;
        if (bw / bh < aspect) bw = bh * aspect;
        else bh = bw / aspect;
        double x0 = cx - bw / 2.0, y0 = cy - bh / 2.0;

        SampleRecord rec;
        rec.bbox = {{x0, y0}, {x0 + bw, y0 + bh}};
        rec.meta.source_id = "coco-" + std::to_string(ann_id);
        if (ann.contains("area")) rec.meta.area = ann["area"].get<double>();
        else rec.meta.area = bb[2].get<double>() * bb[3].get<double>();
        if (ann.contains("head_rect")) {
            const auto& hr = ann["head_rect"];
            rec.meta.head_rect = Rect{{hr[0].get<double>(), hr[1].get<double>()},
                                      {hr[2].get<double>(), hr[3].get<double>()}};
        }

        double sx = bw / input_w, sy = bh / input_h;
        std::vector<uint8_t> rgb(static_cast<size_t>(input_h) * input_w * 3, 0);
        for (int ty = 0; ty < input_h; ++ty) {
            for (int tx = 0; tx < input_w; ++tx) {
                double srcx = x0 + tx * sx;
                double srcy = y0 + ty * sy;
                int ix0 = static_cast<int>(std::floor(srcx));
                int iy0 = static_cast<int>(std::floor(srcy));
                double fx = srcx - ix0, fy = srcy - iy0;
                double acc[3] = {0, 0, 0};
                for (int dy = 0; dy <= 1; ++dy)
                    for (int dx = 0; dx <= 1; ++dx) {
                        int yy = iy0 + dy, xx = ix0 + dx;
                        if (yy < 0 || yy >= img.rows || xx < 0 || xx >= img.cols) continue;
                        double wgt = (dx ? fx : 1 - fx) * (dy ? fy : 1 - fy);
                        const auto& px = img.at<cv::Vec3b>(yy, xx);
                        acc[0] += wgt * px[2]; // BGR -> RGB
                        acc[1] += wgt * px[1];
                        acc[2] += wgt * px[0];
                    }
                for (int c = 0; c < 3; ++c)
                    rgb[(static_cast<size_t>(ty) * input_w + tx) * 3 + c] =
                        static_cast<uint8_t>(std::clamp(std::lround(acc[c]), 0L, 255L));
            }
        }
        rec.image = tensor_from_u8(rgb, input_h, input_w);

        KeypointSet kps(k);
        int labeled = 0;
        for (int j = 0; j < k; ++j) {
            double kx = kp_json[3 * j].get<double>();
            double ky = kp_json[3 * j + 1].get<double>();
            int v = kp_json[3 * j + 2].get<int>();
            kps.coords[j] = {(kx - x0) / sx, (ky - y0) / sy};
            kps.visibility[j] = v == 2   ? Visibility::LabeledVisible
                                : v == 1 ? Visibility::LabeledInvisible
                                         : Visibility::NotLabeled;
            if (v > 0) ++labeled;
        }
        if (labeled > 0) rec.keypoints = std::move(kps);
        records.push_back(std::move(rec));
    }
    return records;
}

Point2 crop_to_original(const SampleRecord& rec, const Point2& p, int input_h, int input_w) {
    double sx = (rec.bbox.lower_right.x - rec.bbox.upper_left.x) / input_w;
    double sy = (rec.bbox.lower_right.y - rec.bbox.upper_left.y) / input_h;
    return {rec.bbox.upper_left.x + p.x * sx, rec.bbox.upper_left.y + p.y * sy};
}

Point2 original_to_crop(const SampleRecord& rec, const Point2& p, int input_h, int input_w) {
    double sx = (rec.bbox.lower_right.x - rec.bbox.upper_left.x) / input_w;
    double sy = (rec.bbox.lower_right.y - rec.bbox.upper_left.y) / input_h;
    return {(p.x - rec.bbox.upper_left.x) / sx, (p.y - rec.bbox.upper_left.y) / sy};
}

// ----------------------------------------------------------------- split

Split make_split(const std::vector<SampleRecord>& records, const SplitSpec& spec) {
    if (spec.labeled_count > static_cast<int>(records.size()))
        throw std::runtime_error("make_split: labeled_count exceeds dataset size");
    std::vector<size_t> order(records.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(spec.seed);
    for (size_t i = order.size(); i > 1; --i) {
        std::uniform_int_distribution<size_t> pick(0, i - 1);
        std::swap(order[i - 1], order[pick(rng)]);
    }

    Split split;
    int taken = 0;
    for (size_t idx : order) {
        const SampleRecord& rec = records[idx];
        if (taken < spec.labeled_count && rec.keypoints) {
            split.labeled.push_back(rec);
            ++taken;
        } else {
            SampleRecord stripped = rec;
            if (stripped.keypoints) {
                split.sealed.by_id[stripped.meta.source_id] = *stripped.keypoints;
                stripped.keypoints.reset();
            }
            split.unlabeled.push_back(std::move(stripped));
        }
    }
    if (taken < spec.labeled_count)
        throw std::runtime_error("make_split: not enough annotated records for split");
    return split;
}

// ------------------------------------------------------------- synthetic

namespace {

struct Segment {
    Point2 a, b;
    double half_width;
};

double dist_to_segment(const Point2& p, const Segment& s) {
    double vx = s.b.x - s.a.x, vy = s.b.y - s.a.y;
    double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((p.x - s.a.x) * vx + (p.y - s.a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    double dx = p.x - (s.a.x + t * vx), dy = p.y - (s.a.y + t * vy);
    return std::hypot(dx, dy);
}

Point2 rotate(const Point2& v, double angle_rad) {
    double c = std::cos(angle_rad), s = std::sin(angle_rad);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

constexpr double kDeg = 3.14159265358979323846 / 180.0;

/// 16 MPII-order joints of one random pose, all inside [margin, S-margin].
std::vector<Point2> sample_pose(int size, std::mt19937_64& rng) {
    auto uni = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    const double s = size;
    for (int attempt = 0; attempt < 64; ++attempt) {
        std::vector<Point2> j(16);
        Point2 pelvis{s / 2 + uni(-0.08, 0.08) * s, s / 2 + uni(0.0, 0.12) * s};
        double torso = uni(0.2, 0.27) * s;
        double torso_ang = uni(-25, 25) * kDeg;
        Point2 up = rotate({0, -1}, torso_ang);
        Point2 perp = rotate(up, 90 * kDeg);
        j[6] = pelvis;
        j[7] = {pelvis.x + torso * up.x, pelvis.y + torso * up.y}; // thorax
        j[8] = {j[7].x + 0.2 * torso * up.x, j[7].y + 0.2 * torso * up.y};
        j[9] = {j[8].x + 0.4 * torso * up.x, j[8].y + 0.4 * torso * up.y};
        double hipw = 0.07 * s, shw = 0.1 * s;
        j[2] = {pelvis.x - hipw * perp.x, pelvis.y - hipw * perp.y};
        j[3] = {pelvis.x + hipw * perp.x, pelvis.y + hipw * perp.y};
        j[12] = {j[7].x - shw * perp.x, j[7].y - shw * perp.y};
        j[13] = {j[7].x + shw * perp.x, j[7].y + shw * perp.y};
        auto limb = [&](const Point2& from, double len, double base_ang, double spread) {
            double ang = base_ang + uni(-spread, spread) * kDeg;
            Point2 dir = rotate({0, 1}, ang); // hanging down at ang = 0
            return Point2{from.x + len * dir.x, from.y + len * dir.y};
        };
        double upper_leg = 0.17 * s, lower_leg = 0.15 * s;
        double upper_arm = 0.13 * s, lower_arm = 0.12 * s;
        j[1] = limb(j[2], upper_leg, 0.0, 35);
        j[0] = limb(j[1], lower_leg, 0.0, 40);
        j[4] = limb(j[3], upper_leg, 0.0, 35);
        j[5] = limb(j[4], lower_leg, 0.0, 40);
        j[11] = limb(j[12], upper_arm, 0.0, 80);
        j[10] = limb(j[11], lower_arm, 0.0, 85);
        j[14] = limb(j[13], upper_arm, 0.0, 80);
        j[15] = limb(j[14], lower_arm, 0.0, 85);

        bool inside = true;
        for (const auto& p : j)
            if (p.x < 2.0 || p.x > s - 3.0 || p.y < 2.0 || p.y > s - 3.0) inside = false;
        if (inside) return j;
    }
    // fall back to a clamped upright pose
    std::vector<Point2> j(16, Point2{s / 2, s / 2});
    return j;
}

} // namespace

std::vector<SampleRecord> generate_stick_figures(const SyntheticConfig& cfg) {
    if (cfg.count < 1) throw std::invalid_argument("generate_stick_figures: count >= 1");
    std::mt19937_64 rng(cfg.seed);
    auto uni = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    const int s = cfg.image_size;
    std::vector<SampleRecord> records;
    records.reserve(cfg.count);

    static const int bones[][2] = {{0, 1}, {1, 2}, {2, 6}, {6, 3}, {3, 4}, {4, 5},
                                   {6, 7}, {7, 8}, {8, 9}, {10, 11}, {11, 12},
                                   {12, 7}, {7, 13}, {13, 14}, {14, 15}};

    for (int i = 0; i < cfg.count; ++i) {
        auto joints = sample_pose(s, rng);
        bool hard = uni(0.0, 1.0) < cfg.occlusion_frac;
        bool low_contrast = hard && uni(0.0, 1.0) < 0.5;
        bool occluded = hard && !low_contrast;

        double base = uni(0.25, 0.5);
        double body = low_contrast ? base + uni(0.06, 0.12) : uni(0.78, 0.95);
        double tint[3] = {uni(-0.03, 0.03), uni(-0.03, 0.03), uni(-0.03, 0.03)};

        std::vector<Segment> segs;
        for (const auto& b : bones) {
            double hw = (b[0] == 6 || b[1] == 6 || b[0] == 7 || b[1] == 7) ? 1.4 : 1.0;
            segs.push_back({joints[b[0]], joints[b[1]], hw});
        }
        // head disk, approximated by a zero-length fat segment
        Point2 head_mid{(joints[8].x + joints[9].x) / 2, (joints[8].y + joints[9].y) / 2};
        double head_len = std::hypot(joints[9].x - joints[8].x, joints[9].y - joints[8].y);
        segs.push_back({head_mid, head_mid, std::max(1.5, head_len * 0.6)});

        std::vector<double> img(static_cast<size_t>(s) * s * 3);
        for (int y = 0; y < s; ++y) {
            for (int x = 0; x < s; ++x) {
                double noise = uni(-0.08, 0.08);
                double d = 1e9;
                for (const auto& seg : segs)
                    d = std::min(d, dist_to_segment({(double)x, (double)y}, seg) -
                                        seg.half_width);
                double cover = std::clamp(0.5 - d, 0.0, 1.0);
                for (int c = 0; c < 3; ++c) {
                    double bg = base + noise + tint[c];
                    double v = bg + cover * (body - bg);
                    img[(static_cast<size_t>(y) * s + x) * 3 + c] = v;
                }
            }
        }

        KeypointSet kps(16);
        for (int j = 0; j < 16; ++j) {
            kps.coords[j] = joints[j];
            kps.visibility[j] = Visibility::LabeledVisible;
        }

        if (occluded) {
            int nrect = 1 + (uni(0.0, 1.0) < 0.4 ? 1 : 0);
            for (int r = 0; r < nrect; ++r) {
                int side = static_cast<int>(uni(0.14, 0.3) * s);
                int rx = static_cast<int>(uni(0, s - side));
                int ry = static_cast<int>(uni(0, s - side));
                double col = uni(0.2, 0.7);
                for (int y = ry; y < ry + side; ++y)
                    for (int x = rx; x < rx + side; ++x)
                        for (int c = 0; c < 3; ++c)
                            img[(static_cast<size_t>(y) * s + x) * 3 + c] =
                                col + uni(-0.05, 0.05);
                for (int j = 0; j < 16; ++j)
                    if (kps.coords[j].x >= rx && kps.coords[j].x < rx + side &&
                        kps.coords[j].y >= ry && kps.coords[j].y < ry + side)
                        kps.visibility[j] = Visibility::LabeledInvisible;
            }
        }

        std::vector<uint8_t> rgb(img.size());
        for (size_t p = 0; p < img.size(); ++p)
            rgb[p] = static_cast<uint8_t>(
                std::clamp(std::lround(img[p] * 255.0), 0L, 255L));

        SampleRecord rec;
        rec.image = tensor_from_u8(rgb, s, s);
        rec.keypoints = std::move(kps);

        double minx = 1e9, miny = 1e9, maxx = -1e9, maxy = -1e9;
        for (const auto& p : joints) {
            minx = std::min(minx, p.x);
            maxx = std::max(maxx, p.x);
            miny = std::min(miny, p.y);
            maxy = std::max(maxy, p.y);
        }
        rec.bbox = {{0, 0}, {(double)s, (double)s}};
        rec.meta.area = std::max(1.0, (maxx - minx) * (maxy - miny));
        double half = std::max(2.0, head_len * 0.9);
        rec.meta.head_rect = Rect{{head_mid.x - half, head_mid.y - half},
                                  {head_mid.x + half, head_mid.y + half}};
        char buf[32];
        std::snprintf(buf, sizeof(buf), "synth-%06d", i);
        rec.meta.source_id = buf;
        records.push_back(std::move(rec));
    }
    return records;
}

// ------------------------------------------------------------ manifest IO

void save_synthetic_dataset(const std::vector<SampleRecord>& records,
                            const std::string& dir) {
    fs::create_directories(dir);
    json manifest;
    manifest["version"] = kSyntheticManifestVersion;
    manifest["records"] = json::array();
    for (const auto& rec : records) {
        std::string file = rec.meta.source_id + ".png";
        auto rgb = u8_from_tensor(rec.image);
        cv::Mat mat(rec.image.h(), rec.image.w(), CV_8UC3);
        for (int y = 0; y < rec.image.h(); ++y)
            for (int x = 0; x < rec.image.w(); ++x) {
                auto& px = mat.at<cv::Vec3b>(y, x);
                size_t o = (static_cast<size_t>(y) * rec.image.w() + x) * 3;
                px[0] = rgb[o + 2]; // RGB -> BGR
                px[1] = rgb[o + 1];
                px[2] = rgb[o];
            }
        if (!cv::imwrite((fs::path(dir) / file).string(), mat))
            throw std::runtime_error("cannot write " + file);

        json r;
        r["id"] = rec.meta.source_id;
        r["file"] = file;
        r["bbox"] = {rec.bbox.upper_left.x, rec.bbox.upper_left.y,
                     rec.bbox.lower_right.x, rec.bbox.lower_right.y};
        if (rec.meta.area) r["area"] = *rec.meta.area;
        if (rec.meta.head_rect)
            r["head_rect"] = {rec.meta.head_rect->upper_left.x,
                              rec.meta.head_rect->upper_left.y,
                              rec.meta.head_rect->lower_right.x,
                              rec.meta.head_rect->lower_right.y};
        if (rec.keypoints) {
            json joints = json::array();
            for (int j = 0; j < rec.keypoints->joint_count(); ++j)
                joints.push_back({rec.keypoints->coords[j].x, rec.keypoints->coords[j].y,
                                  static_cast<int>(rec.keypoints->visibility[j])});
            r["joints"] = joints;
        }
        manifest["records"].push_back(std::move(r));
    }
    std::ofstream os(fs::path(dir) / "manifest.json");
    os << manifest.dump(1) << "\n";
}

std::vector<SampleRecord> load_synthetic_dataset(const std::string& dir) {
    std::ifstream is(fs::path(dir) / "manifest.json");
    if (!is) throw std::runtime_error("cannot open manifest in " + dir);
    json manifest;
    is >> manifest;
    if (manifest.value("version", "") != kSyntheticManifestVersion)
        throw std::runtime_error("unsupported manifest version in " + dir);

    std::vector<SampleRecord> records;
    for (const auto& r : manifest["records"]) {
        SampleRecord rec;
        rec.meta.source_id = r["id"].get<std::string>();
        cv::Mat mat = cv::imread((fs::path(dir) / r["file"].get<std::string>()).string(),
                                 cv::IMREAD_COLOR);
        if (mat.empty())
            throw std::runtime_error("cannot read image for record " + rec.meta.source_id);
        std::vector<uint8_t> rgb(static_cast<size_t>(mat.rows) * mat.cols * 3);
        for (int y = 0; y < mat.rows; ++y)
            for (int x = 0; x < mat.cols; ++x) {
                const auto& px = mat.at<cv::Vec3b>(y, x);
                size_t o = (static_cast<size_t>(y) * mat.cols + x) * 3;
                rgb[o] = px[2];
                rgb[o + 1] = px[1];
                rgb[o + 2] = px[0];
            }
        rec.image = tensor_from_u8(rgb, mat.rows, mat.cols);
        const auto& bb = r["bbox"];
        rec.bbox = {{bb[0].get<double>(), bb[1].get<double>()},
                    {bb[2].get<double>(), bb[3].get<double>()}};
        if (r.contains("area")) rec.meta.area = r["area"].get<double>();
        if (r.contains("head_rect")) {
            const auto& hr = r["head_rect"];
            rec.meta.head_rect = Rect{{hr[0].get<double>(), hr[1].get<double>()},
                                      {hr[2].get<double>(), hr[3].get<double>()}};
        }
        if (r.contains("joints")) {
            const auto& joints = r["joints"];
            KeypointSet kps(static_cast<int>(joints.size()));
            for (size_t j = 0; j < joints.size(); ++j) {
                kps.coords[j] = {joints[j][0].get<double>(), joints[j][1].get<double>()};
                kps.visibility[j] = static_cast<Visibility>(joints[j][2].get<int>());
            }
            rec.keypoints = std::move(kps);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace adaptmask
