#include "adaptmask/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "adaptmask/affine.hpp"
#include "adaptmask/heatmap.hpp"
#include "adaptmask/mixup.hpp"
#include "adaptmask/plots.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace adaptmask {

uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
    // splitmix64 applied to every component before chaining, so that
    // e.g. (1,2) and (2,1) land in different streams
    uint64_t z = 0x9e3779b97f4a7c15ULL;
    for (uint64_t w : {a, b, c, d}) {
        w += 0x9e3779b97f4a7c15ULL;
        w = (w ^ (w >> 30)) * 0xbf58476d1ce4e5b9ULL;
        w = (w ^ (w >> 27)) * 0x94d049bb133111ebULL;
        w = w ^ (w >> 31);
        z ^= w + 0x9e3779b97f4a7c15ULL + (z << 6) + (z >> 2);
    }
    return z;
}

namespace {

// stream tags for per-step rng derivation
enum : uint64_t {
    kTagInit = 1,
    kTagLabeledOrder,
    kTagUnlabeledOrder,
    kTagLabeledAug,
    kTagTeacherAug,
    kTagStudentAug,
    kTagMaskRng,
    kTagSingleCount,
    kTagMixRng,
};

BackboneConfig resolve_backbone(const TrainConfig& cfg,
                                const std::vector<SampleRecord>& labeled) {
    BackboneConfig bc = cfg.backbone;
    if (!labeled.empty()) {
        bc.input_h = labeled.front().image.h();
        bc.input_w = labeled.front().image.w();
        bc.in_channels = labeled.front().image.c();
        if (labeled.front().keypoints)
            bc.out_joints = labeled.front().keypoints->joint_count();
    }
    bc.validate();
    return bc;
}

Model build_model(const BackboneConfig& bc, uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, kTagInit));
    return Model(bc, rng);
}

void set_stack_row(Tensor& dst, int row, const HeatmapStack& stack) {
    for (int j = 0; j < stack.joint_count(); ++j)
        for (int y = 0; y < dst.h(); ++y)
            for (int x = 0; x < dst.w(); ++x)
                dst(row, j, y, x) = stack.maps[j].at(y, x);
}

std::vector<SampleRecord> load_records(const TrainConfig& cfg) {
    if (!cfg.data_dir.empty()) return load_synthetic_dataset(cfg.data_dir);
    if (!cfg.coco_annotations.empty())
        return load_coco_keypoints(cfg.coco_annotations, cfg.coco_image_root,
                                   cfg.backbone.input_h, cfg.backbone.input_w);
    throw std::runtime_error("config names neither data.dir nor data.coco_annotations");
}

struct Pools {
    std::vector<SampleRecord> labeled, unlabeled, val;
};

Pools split_pools(std::vector<SampleRecord> records, const TrainConfig& cfg) {
    SplitSpec spec;
    spec.labeled_count = cfg.labels + cfg.val_count;
    spec.seed = cfg.split_seed;
    Split split = make_split(records, spec);
    Pools p;
    p.labeled.assign(split.labeled.begin(), split.labeled.begin() + cfg.labels);
    p.val.assign(split.labeled.begin() + cfg.labels, split.labeled.end());
    p.unlabeled = std::move(split.unlabeled);
    return p;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace

Trainer::Trainer(const TrainConfig& cfg) : Trainer(cfg, {}, {}, {}) {
    auto pools = split_pools(load_records(cfg), cfg);
    labeled_ = std::move(pools.labeled);
    unlabeled_ = std::move(pools.unlabeled);
    val_ = std::move(pools.val);
    cfg_.backbone = resolve_backbone(cfg_, labeled_);
    model_ = build_model(cfg_.backbone, cfg_.seed);
}

Trainer::Trainer(const TrainConfig& cfg, std::vector<SampleRecord> labeled,
                 std::vector<SampleRecord> unlabeled, std::vector<SampleRecord> val)
    : cfg_(cfg), labeled_(std::move(labeled)), unlabeled_(std::move(unlabeled)),
      val_(std::move(val)),
      model_(build_model(resolve_backbone(cfg, labeled_), cfg.seed)),
      opt_(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps) {
    cfg_.backbone = model_.config();
}

int Trainer::steps_per_epoch() const {
    if (labeled_.empty()) return 0;
    return static_cast<int>((labeled_.size() + cfg_.batch_labeled - 1) /
                            cfg_.batch_labeled);
}

std::vector<size_t> Trainer::epoch_order(uint64_t tag, int epoch, size_t pool) const {
    std::vector<size_t> order(pool);
    for (size_t i = 0; i < pool; ++i) order[i] = i;
    std::mt19937_64 rng(mix_seed(cfg_.seed, tag, static_cast<uint64_t>(epoch)));
    for (size_t i = pool; i > 1; --i) {
        std::uniform_int_distribution<size_t> pick(0, i - 1);
        std::swap(order[i - 1], order[pick(rng)]);
    }
    return order;
}

void Trainer::freeze_teacher() {
    frozen_params_ = model_.params().raw_values();
}

Tensor Trainer::teacher_forward(const Tensor& batch) {
    if (frozen_params_) {
        std::swap(model_.params().raw_values(), *frozen_params_);
        Tensor out = model_.forward(batch);
        std::swap(model_.params().raw_values(), *frozen_params_);
        return out;
    }
    return model_.forward(batch);
}

StepResult Trainer::train_step(int epoch, int step) {
    StepResult res;
    const int H = cfg_.backbone.input_h, W = cfg_.backbone.input_w;
    const int K = cfg_.backbone.out_joints;
    const int hmH = cfg_.backbone.heatmap_h(), hmW = cfg_.backbone.heatmap_w();
    const double stride = cfg_.backbone.stride();
    const int spe = std::max(1, steps_per_epoch());

    double ramp;
    if (cfg_.method == Method::Supervised) {
        ramp = 0.0;
    } else if (cfg_.method == Method::PseudoPose) {
        ramp = epoch >= cfg_.epochs / 2 ? 1.0 : 0.0;
    } else if (cfg_.warmup_epochs > 0) {
        ramp = std::min(1.0, (epoch * spe + step) /
                                 static_cast<double>(cfg_.warmup_epochs * spe));
    } else {
        ramp = 1.0;
    }
    double lambda_u_eff = cfg_.method == Method::Supervised ? 0.0 : cfg_.lambda_u * ramp;
    double lambda_m_eff = (cfg_.method == Method::AdaptiveMixup && cfg_.mixup.enabled)
                              ? cfg_.mixup.lambda_m * ramp
                              : 0.0;

    model_.zero_grad();

    // -------- supervised branch
    auto lorder = epoch_order(kTagLabeledOrder, epoch, labeled_.size());
    int bl = std::min<int>(cfg_.batch_labeled, static_cast<int>(labeled_.size()));
    Tensor xl(bl, cfg_.backbone.in_channels, H, W);
    Tensor tl(bl, K, hmH, hmW);
    std::vector<std::vector<bool>> jmask(bl, std::vector<bool>(K, false));
    std::vector<std::string> batch_ids;
    std::mt19937_64 lrng(mix_seed(cfg_.seed, kTagLabeledAug, epoch, step));
    for (int b = 0; b < bl; ++b) {
        const SampleRecord& rec =
            labeled_[lorder[(static_cast<size_t>(step) * bl + b) % labeled_.size()]];
        batch_ids.push_back(rec.meta.source_id);
        AffineAug aug = sample_weak(lrng, cfg_.aug, H, W);
        xl.set_slice(b, warp_image(rec.image, aug));
        KeypointSet kps = warp_keypoints(*rec.keypoints, aug, H, W);
        set_stack_row(tl, b, synthesize_targets(kps, cfg_.sigma, hmH, hmW, stride));
        for (int k = 0; k < K; ++k) jmask[b][k] = kps.labeled(k);
    }
    Tensor pred_l = model_.forward(xl, nullptr, true);
    LossResult ls = supervised_loss(pred_l, tl, jmask);
    model_.backward(ls.grad);

    double lu = 0.0, lm = 0.0;
    if (cfg_.method != Method::Supervised && !unlabeled_.empty()) {
        if (cfg_.method == Method::PseudoPose && epoch >= cfg_.epochs / 2 &&
            !frozen_params_)
            freeze_teacher();

        auto uorder = epoch_order(kTagUnlabeledOrder, epoch, unlabeled_.size());
        int bu = std::min<int>(cfg_.batch_unlabeled, static_cast<int>(unlabeled_.size()));

        // teacher: weak view
        std::mt19937_64 trng(mix_seed(cfg_.seed, kTagTeacherAug, epoch, step));
        std::vector<AffineAug> teacher_aug(bu);
        std::vector<const SampleRecord*> urecs(bu);
        Tensor xw(bu, cfg_.backbone.in_channels, H, W);
        for (int b = 0; b < bu; ++b) {
            const SampleRecord& rec =
                unlabeled_[uorder[(static_cast<size_t>(step) * bu + b) % unlabeled_.size()]];
            urecs[b] = &rec;
            res.unlabeled_ids.push_back(rec.meta.source_id);
            batch_ids.push_back(rec.meta.source_id);
            teacher_aug[b] = sample_weak(trng, cfg_.aug, H, W);
            xw.set_slice(b, warp_image(rec.image, teacher_aug[b]));
        }
        Tensor pseudo = teacher_forward(xw); // constants: no tape, no gradient

        std::vector<HeatmapStack> pstacks(bu);
        std::vector<std::vector<double>> resps(bu);
        std::vector<KeypointSet> decoded(bu);
        double resp_acc = 0.0;
        for (int b = 0; b < bu; ++b) {
            pstacks[b] = stack_from_tensor(pseudo, b, urecs[b]->meta.source_id);
            resps[b] = responsiveness(pstacks[b]);
            decoded[b] = decode_peaks(pstacks[b], stride);
            double m = 0.0;
            for (double v : resps[b]) m += std::clamp(v, 0.0, 1.0);
            resp_acc += m / resps[b].size();
        }
        res.mean_pseudo_responsiveness = resp_acc / bu;

        // -------- student branch 1: strong affine + keypoint masking
        std::mt19937_64 srng(mix_seed(cfg_.seed, kTagStudentAug, epoch, step));
        std::mt19937_64 crng(mix_seed(cfg_.seed, kTagSingleCount, epoch, step));
        Tensor xs(bu, cfg_.backbone.in_channels, H, W);
        Tensor pw(bu, K, hmH, hmW);
        std::vector<std::vector<bool>> vmask(bu, std::vector<bool>(K, false));
        for (int b = 0; b < bu; ++b) {
            AffineAug strong = sample_strong(srng, cfg_.aug, H, W);
            AffineAug rel = strong.compose(teacher_aug[b].inverse());

            MaskBudget budget;
            if (cfg_.method == Method::Adaptive || cfg_.method == Method::AdaptiveMixup) {
                budget = allocate_mask_count(resps[b], cfg_.mask);
            } else {
                budget.relative_response = relative_response(resps[b]);
                if (cfg_.method == Method::Single) {
                    std::uniform_int_distribution<int> cnt(0, cfg_.mask.m);
                    budget.count = cnt(crng);
                }
            }
            res.budgets.push_back(budget);

            Tensor student_img = warp_image(urecs[b]->image, strong);
            KeypointSet joints_student = warp_keypoints(decoded[b], rel, H, W);
            std::mt19937_64 mrng(mix_seed(cfg_.seed, kTagMaskRng,
                                          static_cast<uint64_t>(epoch) * 100003 + step, b));
            auto [masked, ids] = apply_keypoint_masks(student_img, joints_student,
                                                      budget, cfg_.mask, mrng);
            xs.set_slice(b, masked);
            if (cfg_.hard_pseudo)
                set_stack_row(pw, b, synthesize_targets(joints_student, cfg_.sigma,
                                                        hmH, hmW, stride));
            else
                set_stack_row(pw, b,
                              warp_heatmaps(pstacks[b], rel.in_stride_frame(stride)));
            for (int k = 0; k < K; ++k) vmask[b][k] = joints_student.labeled(k);
        }
        Tensor pred_s = model_.forward(xs, nullptr, true);
        LossResult lur = consistency_loss(pred_s, pw, vmask);
        lu = lur.value;
        if (lambda_u_eff > 0.0) {
            for (double& g : lur.grad.raw()) g *= lambda_u_eff;
            model_.backward(lur.grad);
        }

        // -------- student branch 2: image/feature mixup on the weak view
        if (cfg_.method == Method::AdaptiveMixup && cfg_.mixup.enabled) {
            std::mt19937_64 xrng(mix_seed(cfg_.seed, kTagMixRng, epoch, step));
            MixupSpec spec;
            spec.alpha = sample_beta(cfg_.mixup.beta_a, xrng);
            spec.partner = sample_partner_permutation(bu, xrng);
            spec.location = pick_mix_location(
                cfg_.mixup, static_cast<int>(cfg_.backbone.stages.size()), xrng);
            Tensor pred_m = forward_with_mixup(model_, xw, spec, true);
            Tensor pseudo_i(bu, K, hmH, hmW);
            Tensor pseudo_j(bu, K, hmH, hmW);
            for (int b = 0; b < bu; ++b) {
                if (cfg_.hard_pseudo) {
                    set_stack_row(pseudo_i, b, synthesize_targets(decoded[b], cfg_.sigma,
                                                                  hmH, hmW, stride));
                    set_stack_row(pseudo_j, b,
                                  synthesize_targets(decoded[spec.partner[b]], cfg_.sigma,
                                                     hmH, hmW, stride));
                } else {
                    set_stack_row(pseudo_i, b, pstacks[b]);
                    set_stack_row(pseudo_j, b, pstacks[spec.partner[b]]);
                }
            }
            MixedLossResult lmr =
                mixed_consistency_loss(pred_m, pseudo_i, pseudo_j, spec.alpha);
            lm = lmr.value;
            if (lambda_m_eff > 0.0) {
                for (double& g : lmr.grad.raw()) g *= lambda_m_eff;
                model_.backward(lmr.grad);
            }
        }
    }

    res.losses = compose_total_loss(ls.value, lu, lm, lambda_u_eff, lambda_m_eff);
    if (!std::isfinite(res.losses.total))
        throw TrainAbortError("non-finite loss at epoch " + std::to_string(epoch) +
                                  " step " + std::to_string(step),
                              batch_ids);

    if (cfg_.clip_norm > 0.0) {
        double* grads = model_.params().grads();
        const size_t n = model_.params().total();
        double sq = 0.0;
        for (size_t i = 0; i < n; ++i) sq += grads[i] * grads[i];
        if (double norm = std::sqrt(sq); norm > cfg_.clip_norm) {
            double scale = cfg_.clip_norm / norm;
            for (size_t i = 0; i < n; ++i) grads[i] *= scale;
        }
    }
    opt_.step(model_.params(), cfg_.lr_at_epoch(epoch));
    return res;
}

double Trainer::unlabeled_responsiveness(int limit) {
    if (unlabeled_.empty()) return 0.0;
    const int n = std::min<int>(limit, static_cast<int>(unlabeled_.size()));
    const int bs = std::max(1, cfg_.batch_unlabeled);
    double acc = 0.0;
    for (int at = 0; at < n; at += bs) {
        int b = std::min(bs, n - at);
        Tensor x(b, cfg_.backbone.in_channels, cfg_.backbone.input_h,
                 cfg_.backbone.input_w);
        for (int i = 0; i < b; ++i) x.set_slice(i, unlabeled_[at + i].image);
        Tensor pred = teacher_forward(x);
        for (int i = 0; i < b; ++i) {
            auto stack = stack_from_tensor(pred, i, unlabeled_[at + i].meta.source_id);
            double m = 0.0;
            for (double v : responsiveness(stack)) m += std::clamp(v, 0.0, 1.0);
            acc += m / stack.joint_count();
        }
    }
    return acc / n;
}

EvalMetrics Trainer::evaluate_split(const std::vector<SampleRecord>& records) {
    const int K = cfg_.backbone.out_joints;
    const double stride = cfg_.backbone.stride();

    std::vector<std::pair<double, double>> instances;
    std::vector<KeypointSet> preds, gts;
    std::vector<PckInstanceMeta> metas;
    bool all_heads = true;

    const int chunk = 16;
    for (size_t base = 0; base < records.size(); base += chunk) {
        int n = static_cast<int>(std::min<size_t>(chunk, records.size() - base));
        Tensor batch(n, cfg_.backbone.in_channels, cfg_.backbone.input_h,
                     cfg_.backbone.input_w);
        for (int b = 0; b < n; ++b) batch.set_slice(b, records[base + b].image);
        Tensor out = model_.forward(batch);
        for (int b = 0; b < n; ++b) {
            const SampleRecord& rec = records[base + b];
            if (!rec.keypoints) continue;
            HeatmapStack stack = stack_from_tensor(out, b, rec.meta.source_id);
            KeypointSet pred = decode_peaks(stack, stride);
            double score = 0.0;
            for (double v : responsiveness(stack)) score += std::clamp(v, 0.0, 1.0);
            score /= K;

            OksParams op;
            op.sigmas = K == 17 ? coco_sigmas() : uniform_sigmas(K);
            op.area = rec.meta.area.value_or(
                static_cast<double>(cfg_.backbone.input_h) * cfg_.backbone.input_w);
            bool any = false;
            for (int j = 0; j < K; ++j)
                if (rec.keypoints->labeled(j)) any = true;
            if (any) instances.emplace_back(score, oks(pred, *rec.keypoints, op));

            preds.push_back(pred);
            gts.push_back(*rec.keypoints);
            PckInstanceMeta meta;
            if (rec.meta.head_rect) {
                Rect hr = *rec.meta.head_rect;
                Point2 ul = original_to_crop(rec, hr.upper_left, cfg_.backbone.input_h,
                                             cfg_.backbone.input_w);
                Point2 lr = original_to_crop(rec, hr.lower_right, cfg_.backbone.input_h,
                                             cfg_.backbone.input_w);
                meta.head_rect = Rect{ul, lr};
            } else {
                all_heads = false;
            }
            meta.bbox = Rect{{0, 0},
                             {static_cast<double>(cfg_.backbone.input_w),
                              static_cast<double>(cfg_.backbone.input_h)}};
            metas.push_back(meta);
        }
    }

    EvalMetrics em;
    if (!instances.empty()) em.ap = average_precision(instances);
    PckParams pp;
    pp.threshold = 0.5;
    pp.scale_source = all_heads ? ScaleSource::HeadDiameter : ScaleSource::BboxDiagonal;
    if (!preds.empty()) em.pck = pck(preds, gts, metas, pp);
    return em;
}

std::vector<MaskBudget> Trainer::allocate_masks_for(
    const std::vector<SampleRecord>& records) {
    std::vector<MaskBudget> out;
    const double stride = cfg_.backbone.stride();
    const int chunk = 16;
    for (size_t base = 0; base < records.size(); base += chunk) {
        int n = static_cast<int>(std::min<size_t>(chunk, records.size() - base));
        Tensor batch(n, cfg_.backbone.in_channels, cfg_.backbone.input_h,
                     cfg_.backbone.input_w);
        for (int b = 0; b < n; ++b) batch.set_slice(b, records[base + b].image);
        Tensor pred = teacher_forward(batch);
        for (int b = 0; b < n; ++b) {
            HeatmapStack stack = stack_from_tensor(pred, b);
            (void)stride;
            out.push_back(allocate_mask_count(responsiveness(stack), cfg_.mask));
        }
    }
    return out;
}

namespace {

const char* kCsvHeader =
    "epoch,l_s,l_u,l_m,l_total,lr,ap,ap50,ap75,ar,pck_total,"
    "mean_responsiveness,mean_mask_count\n";

json config_as_json(const TrainConfig& cfg) {
    json j;
    for (const auto& [k, v] : parse_config_text(cfg.to_text())) j[k] = v;
    return j;
}

} // namespace

std::string Trainer::fit(bool resume) {
    cfg_.validate();
    fs::path out(cfg_.out_dir);
    fs::create_directories(out / "plots");
    fs::path ckpt_last = out / "ckpt-last.bin";
    fs::path ckpt_best = out / "ckpt-best.bin";
    fs::path ckpt_teacher = out / "ckpt-teacher.bin";

    int first_epoch = 0;
    if (resume && fs::exists(ckpt_last)) {
        auto [epoch_done, rng_state] = load_checkpoint(ckpt_last.string(), model_, &opt_);
        (void)rng_state;
        first_epoch = epoch_done + 1;
        if (cfg_.method == Method::PseudoPose && fs::exists(ckpt_teacher)) {
            std::mt19937_64 tmp_rng(0);
            Model teacher(cfg_.backbone, tmp_rng);
            load_checkpoint(ckpt_teacher.string(), teacher, nullptr);
            frozen_params_ = teacher.params().raw_values();
        }
    } else {
        std::ofstream cfg_file(out / "config.json");
        cfg_file << config_as_json(cfg_).dump(1) << "\n";
        std::ofstream cfg_text(out / "config.txt");
        cfg_text << cfg_.to_text();
        std::ofstream csv(out / "metrics.csv");
        csv << kCsvHeader;
        std::ofstream diag(out / "diagnostics.jsonl");
    }

    // responsiveness column is smoothed across epochs; a resumed run
    // carries the smoothed value forward from the last written row
    double resp_ema = -1.0;
    if (first_epoch > 0) {
        auto rows = read_metrics_csv((out / "metrics.csv").string());
        if (!rows.empty() && !rows.back().at("mean_responsiveness").empty())
            resp_ema = std::stod(rows.back().at("mean_responsiveness"));
    }

    std::ofstream csv(out / "metrics.csv", std::ios::app);
    std::ofstream diag(out / "diagnostics.jsonl", std::ios::app);
    double best_metric = -1.0;

    auto write_row = [&](int epoch_1based, double ls, double lu, double lm, double lt,
                         double lr, const std::optional<EvalMetrics>& em, double mresp,
                         double mmask) {
        csv << epoch_1based << "," << fmt(ls) << "," << fmt(lu) << "," << fmt(lm) << ","
            << fmt(lt) << "," << fmt(lr) << ",";
        if (em)
            csv << fmt(em->ap.ap) << "," << fmt(em->ap.ap50) << "," << fmt(em->ap.ap75)
                << "," << fmt(em->ap.ar) << "," << fmt(em->pck.total) << ",";
        else
            csv << ",,,,,";
        csv << fmt(mresp) << "," << fmt(mmask) << "\n";
        csv.flush();
    };

    if (cfg_.epochs == 0 && first_epoch == 0) {
        EvalMetrics em = evaluate_split(val_);
        write_row(0, 0, 0, 0, 0, cfg_.lr_initial, em, 0, 0);
        save_checkpoint(ckpt_last.string(), model_, &opt_, -1,
                        std::to_string(cfg_.seed));
        return out.string();
    }

    const int spe = steps_per_epoch();
    for (int epoch = first_epoch; epoch < cfg_.epochs; ++epoch) {
        double sum_ls = 0, sum_lu = 0, sum_lm = 0, sum_lt = 0, sum_resp = 0,
               sum_mask = 0;
        long mask_n = 0;
        try {
            for (int step = 0; step < spe; ++step) {
                StepResult sr = train_step(epoch, step);
                sum_ls += sr.losses.l_s;
                sum_lu += sr.losses.l_u;
                sum_lm += sr.losses.l_m;
                sum_lt += sr.losses.total;
                sum_resp += sr.mean_pseudo_responsiveness;
                for (size_t i = 0; i < sr.budgets.size(); ++i) {
                    const auto& bud = sr.budgets[i];
                    sum_mask += bud.count;
                    ++mask_n;
                    json line;
                    line["epoch"] = epoch + 1;
                    line["sample_id"] = sr.unlabeled_ids[i];
                    line["n_simple"] = bud.n_simple;
                    line["count"] = bud.count;
                    line["extreme"] = bud.extreme;
                    line["relative_response"] = bud.relative_response;
                    diag << line.dump() << "\n";
                }
            }
        } catch (const TrainAbortError& e) {
            save_checkpoint((out / "ckpt-abort.bin").string(), model_, &opt_, epoch,
                            std::to_string(cfg_.seed));
            json dump;
            dump["error"] = e.what();
            dump["batch_ids"] = e.batch_ids;
            std::ofstream ab(out / "abort.json");
            ab << dump.dump(1) << "\n";
            throw;
        }
        diag.flush();

        std::optional<EvalMetrics> em;
        if (cfg_.eval_every > 0 &&
            ((epoch + 1) % cfg_.eval_every == 0 || epoch + 1 == cfg_.epochs))
            em = evaluate_split(val_);

        // fixed-subset probe: per-step means are too noisy (batch and
        // augmentation sampling) to reflect the teacher's actual trend;
        // smooth across epochs to damp optimizer oscillation as well
        double epoch_resp = cfg_.method == Method::Supervised || unlabeled_.empty()
                                ? sum_resp / spe
                                : unlabeled_responsiveness();
        resp_ema = resp_ema < 0.0 ? epoch_resp : 0.93 * resp_ema + 0.07 * epoch_resp;
        // quantize to the csv representation so a resumed run carries
        // exactly the same smoothing state
        resp_ema = std::stod(fmt(resp_ema));
        epoch_resp = resp_ema;

        write_row(epoch + 1, sum_ls / spe, sum_lu / spe, sum_lm / spe, sum_lt / spe,
                  cfg_.lr_at_epoch(epoch), em, epoch_resp,
                  mask_n ? sum_mask / mask_n : 0.0);

        save_checkpoint(ckpt_last.string(), model_, &opt_, epoch,
                        std::to_string(cfg_.seed));
        if (frozen_params_ && !fs::exists(ckpt_teacher)) {
            // persist the frozen teacher so a resumed run reuses it
            std::vector<float> current = model_.params().raw_values();
            model_.params().raw_values() = *frozen_params_;
            save_checkpoint(ckpt_teacher.string(), model_, nullptr, epoch,
                            std::to_string(cfg_.seed));
            model_.params().raw_values() = current;
        }
        if (em) {
            double metric = cfg_.protocol == "pck" ? em->pck.total : em->ap.ap;
            if (metric > best_metric) {
                best_metric = metric;
                save_checkpoint(ckpt_best.string(), model_, &opt_, epoch,
                                std::to_string(cfg_.seed));
            }
        }
    }
    return out.string();
}

EvalMetrics evaluate_checkpoint(const std::string& ckpt_path, const std::string& data_dir,
                                const std::string& protocol, TrainConfig cfg) {
    cfg.data_dir = data_dir;
    cfg.protocol = protocol;
    auto records = load_synthetic_dataset(data_dir);
    Trainer trainer(cfg, records, {}, records);
    load_checkpoint(ckpt_path, trainer.model(), nullptr);
    int data_k = 0;
    for (const auto& r : records)
        if (r.keypoints) { data_k = r.keypoints->joint_count(); break; }
    if (data_k != trainer.model().config().out_joints)
        throw std::runtime_error("joint-count mismatch between checkpoint head and dataset");
    return trainer.evaluate_split(records);
}

std::vector<std::map<std::string, std::string>> read_metrics_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::vector<std::string> cols;
    std::vector<std::map<std::string, std::string>> rows;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        // a trailing empty cell is dropped by getline; pad
        while (cells.size() < cols.size()) cells.emplace_back();
        if (header) {
            cols = cells;
            header = false;
            continue;
        }
        std::map<std::string, std::string> row;
        for (size_t i = 0; i < cols.size() && i < cells.size(); ++i)
            row[cols[i]] = cells[i];
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::string> emit_plots(const std::vector<std::string>& run_dirs,
                                    const std::string& out_dir) {
    std::vector<PlotSeries> loss_series, ap_series;
    std::vector<std::string> produced;
    fs::create_directories(out_dir);

    for (const auto& dir : run_dirs) {
        std::string label = fs::path(dir).filename().string();
        auto rows = read_metrics_csv((fs::path(dir) / "metrics.csv").string());
        if (rows.empty()) {
            std::cerr << "warning: " << dir << " has an empty metrics.csv, skipping\n";
            continue;
        }
        PlotSeries loss{label, {}}, ap{label, {}};
        for (const auto& row : rows) {
            double epoch = std::stod(row.at("epoch"));
            if (!row.at("l_total").empty())
                loss.points.emplace_back(epoch, std::stod(row.at("l_total")));
            const std::string& metric =
                !row.at("pck_total").empty() ? row.at("pck_total") : row.at("ap");
            if (!metric.empty()) ap.points.emplace_back(epoch, std::stod(metric));
        }
        loss_series.push_back(std::move(loss));
        ap_series.push_back(std::move(ap));

        // mask-count histogram per epoch from diagnostics
        fs::path diag = fs::path(dir) / "diagnostics.jsonl";
        if (fs::exists(diag)) {
            std::ifstream is(diag);
            std::map<int, std::map<int, long>> hist; // epoch -> count -> freq
            std::string line;
            while (std::getline(is, line)) {
                if (line.empty()) continue;
                json j = json::parse(line);
                hist[j["epoch"].get<int>()][j["count"].get<int>()]++;
            }
            if (!hist.empty()) {
                std::vector<int> epochs;
                for (const auto& [e, _] : hist) epochs.push_back(e);
                std::vector<int> chosen = {epochs.front(), epochs[epochs.size() / 2],
                                           epochs.back()};
                std::sort(chosen.begin(), chosen.end());
                chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
                std::vector<PlotSeries> hist_series;
                for (int e : chosen) {
                    PlotSeries s{"epoch " + std::to_string(e), {}};
                    long total = 0;
                    for (const auto& [c, f] : hist[e]) total += f;
                    int max_count = hist[e].rbegin()->first;
                    for (int c = 0; c <= max_count; ++c) {
                        auto it = hist[e].find(c);
                        double f = it == hist[e].end() ? 0.0 : it->second;
                        s.points.emplace_back(c, f / total);
                    }
                    hist_series.push_back(std::move(s));
                }
                std::string file =
                    (fs::path(out_dir) / ("mask_hist-" + label + ".svg")).string();
                write_line_chart(file, "Mask count distribution (" + label + ")",
                                 "masks per sample", "fraction of samples", hist_series);
                produced.push_back(file);
            }
        }
    }

    if (!loss_series.empty()) {
        std::string loss_file = (fs::path(out_dir) / "loss.svg").string();
        write_line_chart(loss_file, "Training loss", "epoch", "total loss", loss_series);
        produced.push_back(loss_file);
        std::string ap_file = (fs::path(out_dir) / "ap.svg").string();
        write_line_chart(ap_file, "Validation accuracy", "epoch", "PCK@0.5 / AP",
                         ap_series);
        produced.push_back(ap_file);
    }
    return produced;
}

} // namespace adaptmask
