#include "adaptmask/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace adaptmask {

Method parse_method(const std::string& name) {
    if (name == "supervised") return Method::Supervised;
    if (name == "pseudo-pose") return Method::PseudoPose;
    if (name == "single") return Method::Single;
    if (name == "adaptive") return Method::Adaptive;
    if (name == "adaptive+mixup") return Method::AdaptiveMixup;
    throw std::invalid_argument("unknown method: " + name);
}

std::string method_name(Method m) {
    switch (m) {
        case Method::Supervised: return "supervised";
        case Method::PseudoPose: return "pseudo-pose";
        case Method::Single: return "single";
        case Method::Adaptive: return "adaptive";
        case Method::AdaptiveMixup: return "adaptive+mixup";
    }
    return "?";
}

double TrainConfig::lr_at_epoch(int epoch) const {
    double lr = lr_initial;
    for (const auto& [e, v] : lr_drops)
        if (epoch >= e) lr = v;
    return lr;
}

void TrainConfig::validate() const {
    if (labels < 1) throw std::invalid_argument("config: labels must be >= 1");
    if (epochs < 0) throw std::invalid_argument("config: epochs must be >= 0");
    if (batch_labeled < 1 || batch_unlabeled < 1)
        throw std::invalid_argument("config: batch sizes must be >= 1");
    for (size_t i = 1; i < lr_drops.size(); ++i)
        if (lr_drops[i].first <= lr_drops[i - 1].first)
            throw std::invalid_argument("config: lr_drops must be strictly increasing");
    if (lambda_u < 0 || mixup.lambda_m < 0)
        throw std::invalid_argument("config: loss weights must be >= 0");
    if (clip_norm < 0)
        throw std::invalid_argument("config: train.clip_norm must be >= 0");
    if (protocol != "oks" && protocol != "pck")
        throw std::invalid_argument("config: protocol must be oks or pck");
    mask.validate();
    backbone.validate();
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto strip = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            size_t b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        std::string stripped = strip(line);
        if (stripped.empty()) continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        kv[strip(stripped.substr(0, eq))] = strip(stripped.substr(eq + 1));
    }
    return kv;
}

namespace {

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ','))
        if (!tok.empty()) out.push_back(std::stoi(tok));
    return out;
}

std::vector<std::pair<int, double>> parse_lr_drops(const std::string& s) {
    // "20:1e-4,25:1e-5"
    std::vector<std::pair<int, double>> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        if (tok.empty()) continue;
        auto colon = tok.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("bad lr drop entry: " + tok);
        out.emplace_back(std::stoi(tok.substr(0, colon)),
                         std::stod(tok.substr(colon + 1)));
    }
    return out;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw std::invalid_argument("bad boolean: " + s);
}

} // namespace

TrainConfig TrainConfig::from_map(const std::map<std::string, std::string>& kv) {
    TrainConfig c;
    for (const auto& [key, val] : kv) {
        if (key == "data.dir") c.data_dir = val;
        else if (key == "data.coco_annotations") c.coco_annotations = val;
        else if (key == "data.coco_image_root") c.coco_image_root = val;
        else if (key == "data.labels") c.labels = std::stoi(val);
        else if (key == "data.val_count") c.val_count = std::stoi(val);
        else if (key == "data.split_seed") c.split_seed = std::stoull(val);
        else if (key == "model.input_size") {
            c.backbone.input_h = c.backbone.input_w = std::stoi(val);
        } else if (key == "model.channels") {
            auto chans = parse_int_list(val);
            c.backbone.stages.clear();
            for (int ch : chans) c.backbone.stages.push_back({ch, true});
        } else if (key == "model.downsample") {
            auto flags = parse_int_list(val);
            if (flags.size() != c.backbone.stages.size())
                throw std::invalid_argument(
                    "model.downsample length must match model.channels");
            for (size_t i = 0; i < flags.size(); ++i)
                c.backbone.stages[i].downsample = flags[i] != 0;
        } else if (key == "model.head_deconvs") c.backbone.head_deconvs = std::stoi(val);
        else if (key == "model.joints") c.backbone.out_joints = std::stoi(val);
        else if (key == "model.sigma") c.sigma = std::stod(val);
        else if (key == "train.epochs") c.epochs = std::stoi(val);
        else if (key == "train.batch_labeled") c.batch_labeled = std::stoi(val);
        else if (key == "train.batch_unlabeled") c.batch_unlabeled = std::stoi(val);
        else if (key == "train.lr_initial") c.lr_initial = std::stod(val);
        else if (key == "train.lr_drops") c.lr_drops = parse_lr_drops(val);
        else if (key == "train.adam_beta1") c.adam_beta1 = std::stod(val);
        else if (key == "train.adam_beta2") c.adam_beta2 = std::stod(val);
        else if (key == "train.adam_eps") c.adam_eps = std::stod(val);
        else if (key == "train.eval_every") c.eval_every = std::stoi(val);
        else if (key == "train.clip_norm") c.clip_norm = std::stod(val);
        else if (key == "train.warmup_epochs") c.warmup_epochs = std::stoi(val);
        else if (key == "train.seed") c.seed = std::stoull(val);
        else if (key == "method") c.method = parse_method(val);
        else if (key == "loss.lambda_u") c.lambda_u = std::stod(val);
        else if (key == "loss.hard_pseudo") c.hard_pseudo = parse_bool(val);
        else if (key == "aug.weak.rotation_max") c.aug.weak_rotation_max = std::stod(val);
        else if (key == "aug.weak.scale_min") c.aug.weak_scale_min = std::stod(val);
        else if (key == "aug.weak.scale_max") c.aug.weak_scale_max = std::stod(val);
        else if (key == "aug.strong.rotation_max") c.aug.strong_rotation_max = std::stod(val);
        else if (key == "aug.strong.scale_min") c.aug.strong_scale_min = std::stod(val);
        else if (key == "aug.strong.scale_max") c.aug.strong_scale_max = std::stod(val);
        else if (key == "aug.strong.translate_frac")
            c.aug.strong_translate_frac = std::stod(val);
        else if (key == "mask.gamma") c.mask.gamma = std::stod(val);
        else if (key == "mask.m") c.mask.m = std::stoi(val);
        else if (key == "mask.floor") c.mask.floor = std::stoi(val);
        else if (key == "mask.tau_min") c.mask.tau_min = std::stod(val);
        else if (key == "mask.size_min") c.mask.size_min_px = std::stoi(val);
        else if (key == "mask.size_max") c.mask.size_max_px = std::stoi(val);
        else if (key == "mixup.enabled") c.mixup.enabled = parse_bool(val);
        else if (key == "mixup.beta_a") c.mixup.beta_a = std::stod(val);
        else if (key == "mixup.location") c.mixup.location = val;
        else if (key == "mixup.allow_late_stages") c.mixup.allow_late_stages = parse_bool(val);
        else if (key == "mixup.lambda_m") c.mixup.lambda_m = std::stod(val);
        else if (key == "eval.protocol") c.protocol = val;
        else if (key == "out.dir") c.out_dir = val;
        else throw std::invalid_argument("unknown config key: " + key);
    }
    c.validate();
    return c;
}

TrainConfig TrainConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    return from_map(parse_config_text(buf.str()));
}

std::string TrainConfig::to_text() const {
    std::ostringstream os;
    os.precision(12);
    os << "# experiment configuration snapshot\n";
    os << "data.dir = " << data_dir << "\n";
    if (!coco_annotations.empty()) {
        os << "data.coco_annotations = " << coco_annotations << "\n";
        os << "data.coco_image_root = " << coco_image_root << "\n";
    }
    os << "data.labels = " << labels << "\n";
    os << "data.val_count = " << val_count << "\n";
    os << "data.split_seed = " << split_seed << "\n";
    os << "model.input_size = " << backbone.input_h << "\n";
    os << "model.channels = ";
    for (size_t i = 0; i < backbone.stages.size(); ++i)
        os << (i ? "," : "") << backbone.stages[i].channels;
    os << "\nmodel.downsample = ";
    for (size_t i = 0; i < backbone.stages.size(); ++i)
        os << (i ? "," : "") << (backbone.stages[i].downsample ? 1 : 0);
    os << "\nmodel.head_deconvs = " << backbone.head_deconvs << "\n";
    os << "model.joints = " << backbone.out_joints << "\n";
    os << "model.sigma = " << sigma << "  # target gaussian width, heatmap px (unstated upstream)\n";
    os << "train.epochs = " << epochs << "\n";
    os << "train.batch_labeled = " << batch_labeled << "\n";
    os << "train.batch_unlabeled = " << batch_unlabeled
       << "  # labeled:unlabeled ratio is a free choice\n";
    os << "train.lr_initial = " << lr_initial << "\n";
    os << "train.lr_drops = ";
    for (size_t i = 0; i < lr_drops.size(); ++i)
        os << (i ? "," : "") << lr_drops[i].first << ":" << lr_drops[i].second;
    os << "\ntrain.adam_beta1 = " << adam_beta1 << "  # standard Adam defaults\n";
    os << "train.adam_beta2 = " << adam_beta2 << "\n";
    os << "train.adam_eps = " << adam_eps << "\n";
    os << "train.eval_every = " << eval_every << "\n";
    os << "train.clip_norm = " << clip_norm
       << "  # global L2 gradient-norm clip, 0 disables\n";
    os << "train.warmup_epochs = " << warmup_epochs
       << "  # linear ramp of unsupervised weights\n";
    os << "train.seed = " << seed << "\n";
    os << "method = " << method_name(method) << "\n";
    os << "loss.lambda_u = " << lambda_u << "  # unsupervised weight (unstated upstream)\n";
    os << "loss.hard_pseudo = " << (hard_pseudo ? "true" : "false")
       << "  # clean gaussians at decoded teacher peaks vs raw teacher maps\n";
    os << "aug.weak.rotation_max = " << aug.weak_rotation_max << "\n";
    os << "aug.weak.scale_min = " << aug.weak_scale_min << "\n";
    os << "aug.weak.scale_max = " << aug.weak_scale_max << "\n";
    os << "aug.strong.rotation_max = " << aug.strong_rotation_max << "\n";
    os << "aug.strong.scale_min = " << aug.strong_scale_min << "\n";
    os << "aug.strong.scale_max = " << aug.strong_scale_max << "\n";
    os << "aug.strong.translate_frac = " << aug.strong_translate_frac << "\n";
    os << "mask.gamma = " << mask.gamma << "  # confidence threshold (unstated upstream)\n";
    os << "mask.m = " << mask.m << "\n";
    os << "mask.floor = " << mask.floor << "\n";
    os << "mask.tau_min = " << mask.tau_min
       << "  # extreme-sample threshold (unstated upstream)\n";
    os << "mask.size_min = " << mask.size_min_px << "\n";
    os << "mask.size_max = " << mask.size_max_px << "\n";
    os << "mixup.enabled = " << (mixup.enabled ? "true" : "false") << "\n";
    os << "mixup.beta_a = " << mixup.beta_a << "  # beta parameter (unstated upstream)\n";
    os << "mixup.location = " << mixup.location << "\n";
    os << "mixup.allow_late_stages = " << (mixup.allow_late_stages ? "true" : "false")
       << "\n";
    os << "mixup.lambda_m = " << mixup.lambda_m << "\n";
    os << "eval.protocol = " << protocol << "\n";
    os << "out.dir = " << out_dir << "\n";
    return os.str();
}

} // namespace adaptmask
