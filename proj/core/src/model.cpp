#include "adaptmask/model.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace adaptmask {

size_t ParameterStore::add(const std::string& name, const std::vector<int>& shape) {
    Entry e;
    e.name = name;
    e.shape = shape;
    e.offset = values_.size();
    e.count = 1;
    for (int d : shape) e.count *= static_cast<size_t>(d);
    entries_.push_back(e);
    values_.resize(e.offset + e.count, 0.0f);
    grads_.resize(values_.size(), 0.0);
    return e.offset;
}

int BackboneConfig::heatmap_h() const {
    int h = input_h;
    for (const auto& s : stages)
        if (s.downsample) h /= 2;
    for (int i = 0; i < head_deconvs; ++i) h *= 2;
    return h;
}

int BackboneConfig::heatmap_w() const {
    int w = input_w;
    for (const auto& s : stages)
        if (s.downsample) w /= 2;
    for (int i = 0; i < head_deconvs; ++i) w *= 2;
    return w;
}

void BackboneConfig::validate() const {
    if (stages.empty()) throw std::invalid_argument("BackboneConfig: no stages");
    if (out_joints < 1) throw std::invalid_argument("BackboneConfig: out_joints < 1");
    int down = 0;
    for (const auto& s : stages) {
        if (s.channels < 1) throw std::invalid_argument("BackboneConfig: bad channel count");
        if (s.downsample) ++down;
    }
    if (head_deconvs < 0 || head_deconvs > down)
        throw std::invalid_argument("BackboneConfig: head_deconvs must be in [0, #downsamples]");
    if (input_h % (1 << down) != 0 || input_w % (1 << down) != 0)
        throw std::invalid_argument("BackboneConfig: input size not divisible by total stride");
}

int parse_mix_location(const std::string& name, int num_stages) {
    if (name == "input") return 0;
    if (name == "pre-head") return num_stages + 1;
    if (name.rfind("stage-", 0) == 0) {
        int k = std::stoi(name.substr(6));
        if (k >= 1 && k <= num_stages) return k;
    }
    throw std::invalid_argument("unknown mixup location: " + name);
}

std::string mix_location_name(int boundary, int num_stages) {
    if (boundary == 0) return "input";
    if (boundary == num_stages + 1) return "pre-head";
    return "stage-" + std::to_string(boundary);
}

// ---------------------------------------------------------------- layers

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& in, ParameterStore& ps, bool record) = 0;
    virtual Tensor backward(const Tensor& grad_out, ParameterStore& ps) = 0;
};

namespace {

class Conv2d : public Layer {
public:
    Conv2d(ParameterStore& ps, const std::string& name, int in_ch, int out_ch,
           int kernel, int stride, int pad, std::mt19937_64& rng)
        : in_ch_(in_ch), out_ch_(out_ch), k_(kernel), stride_(stride), pad_(pad) {
        w_off_ = ps.add(name + ".weight", {out_ch, in_ch, kernel, kernel});
        b_off_ = ps.add(name + ".bias", {out_ch});
        double std_dev = std::sqrt(2.0 / (in_ch * kernel * kernel));
        std::normal_distribution<double> dist(0.0, std_dev);
        for (size_t i = 0; i < static_cast<size_t>(out_ch) * in_ch * kernel * kernel; ++i)
            ps.values()[w_off_ + i] = static_cast<float>(dist(rng));
        // small nonzero biases keep relu pre-activations off the exact
        // kink in zero-padded regions
        std::uniform_real_distribution<double> bias(0.01, 0.05);
        for (int i = 0; i < out_ch; ++i)
            ps.values()[b_off_ + i] = static_cast<float>(bias(rng));
    }

    Tensor forward(const Tensor& in, ParameterStore& ps, bool record) override {
        const float* w = ps.values() + w_off_;
        const float* b = ps.values() + b_off_;
        int oh = (in.h() + 2 * pad_ - k_) / stride_ + 1;
        int ow = (in.w() + 2 * pad_ - k_) / stride_ + 1;
        Tensor out(in.n(), out_ch_, oh, ow);
        for (int n = 0; n < in.n(); ++n) {
            for (int oc = 0; oc < out_ch_; ++oc) {
                for (int oy = 0; oy < oh; ++oy) {
                    for (int ox = 0; ox < ow; ++ox) {
                        double acc = b[oc];
                        for (int ic = 0; ic < in_ch_; ++ic) {
                            for (int ky = 0; ky < k_; ++ky) {
                                int iy = oy * stride_ - pad_ + ky;
                                if (iy < 0 || iy >= in.h()) continue;
                                for (int kx = 0; kx < k_; ++kx) {
                                    int ix = ox * stride_ - pad_ + kx;
                                    if (ix < 0 || ix >= in.w()) continue;
                                    acc += static_cast<double>(
                                               w[((static_cast<size_t>(oc) * in_ch_ + ic) * k_ + ky) * k_ + kx]) *
                                           in(n, ic, iy, ix);
                                }
                            }
                        }
                        out(n, oc, oy, ox) = acc;
                    }
                }
            }
        }
        if (record) cached_in_ = in;
        return out;
    }

    Tensor backward(const Tensor& g, ParameterStore& ps) override {
        const Tensor& in = cached_in_;
        const float* w = ps.values() + w_off_;
        double* gw = ps.grads() + w_off_;
        double* gb = ps.grads() + b_off_;
        Tensor gin(in.n(), in.c(), in.h(), in.w());
        for (int n = 0; n < in.n(); ++n) {
            for (int oc = 0; oc < out_ch_; ++oc) {
                for (int oy = 0; oy < g.h(); ++oy) {
                    for (int ox = 0; ox < g.w(); ++ox) {
                        double gv = g(n, oc, oy, ox);
                        if (gv == 0.0) continue;
                        gb[oc] += gv;
                        for (int ic = 0; ic < in_ch_; ++ic) {
                            for (int ky = 0; ky < k_; ++ky) {
                                int iy = oy * stride_ - pad_ + ky;
                                if (iy < 0 || iy >= in.h()) continue;
                                for (int kx = 0; kx < k_; ++kx) {
                                    int ix = ox * stride_ - pad_ + kx;
                                    if (ix < 0 || ix >= in.w()) continue;
                                    size_t wi = ((static_cast<size_t>(oc) * in_ch_ + ic) * k_ + ky) * k_ + kx;
                                    gw[wi] += gv * in(n, ic, iy, ix);
                                    gin(n, ic, iy, ix) += gv * static_cast<double>(w[wi]);
                                }
                            }
                        }
                    }
                }
            }
        }
        return gin;
    }

private:
    int in_ch_, out_ch_, k_, stride_, pad_;
    size_t w_off_ = 0, b_off_ = 0;
    Tensor cached_in_;
};

class Relu : public Layer {
public:
    Tensor forward(const Tensor& in, ParameterStore&, bool record) override {
        Tensor out = in;
        for (double& v : out.raw())
            if (v < 0.0) v = 0.0;
        if (record) cached_in_ = in;
        return out;
    }
    Tensor backward(const Tensor& g, ParameterStore&) override {
        Tensor gin = g;
        const auto& in = cached_in_.raw();
        for (size_t i = 0; i < gin.raw().size(); ++i)
            if (in[i] <= 0.0) gin.raw()[i] = 0.0;
        return gin;
    }

private:
    Tensor cached_in_;
};

class Upsample2x : public Layer {
public:
    Tensor forward(const Tensor& in, ParameterStore&, bool) override {
        Tensor out(in.n(), in.c(), in.h() * 2, in.w() * 2);
        for (int n = 0; n < in.n(); ++n)
            for (int c = 0; c < in.c(); ++c)
                for (int y = 0; y < out.h(); ++y)
                    for (int x = 0; x < out.w(); ++x)
                        out(n, c, y, x) = in(n, c, y / 2, x / 2);
        return out;
    }
    Tensor backward(const Tensor& g, ParameterStore&) override {
        Tensor gin(g.n(), g.c(), g.h() / 2, g.w() / 2);
        for (int n = 0; n < g.n(); ++n)
            for (int c = 0; c < g.c(); ++c)
                for (int y = 0; y < g.h(); ++y)
                    for (int x = 0; x < g.w(); ++x)
                        gin(n, c, y / 2, x / 2) += g(n, c, y, x);
        return gin;
    }
};

Tensor mix_rows(const Tensor& x, double alpha, const std::vector<int>& partner) {
    Tensor out(x.n(), x.c(), x.h(), x.w());
    size_t stride = static_cast<size_t>(x.c()) * x.h() * x.w();
    for (int n = 0; n < x.n(); ++n) {
        const double* a = x.data() + n * stride;
        const double* b = x.data() + partner[n] * stride;
        double* o = out.data() + n * stride;
        for (size_t i = 0; i < stride; ++i)
            o[i] = alpha * a[i] + (1.0 - alpha) * b[i];
    }
    return out;
}

Tensor mix_rows_backward(const Tensor& g, double alpha, const std::vector<int>& partner) {
    std::vector<int> inv(partner.size());
    for (size_t i = 0; i < partner.size(); ++i) inv[partner[i]] = static_cast<int>(i);
    Tensor out(g.n(), g.c(), g.h(), g.w());
    size_t stride = static_cast<size_t>(g.c()) * g.h() * g.w();
    for (int n = 0; n < g.n(); ++n) {
        const double* gd = g.data() + n * stride;
        const double* gp = g.data() + inv[n] * stride;
        double* o = out.data() + n * stride;
        for (size_t i = 0; i < stride; ++i)
            o[i] = alpha * gd[i] + (1.0 - alpha) * gp[i];
    }
    return out;
}

} // namespace

// ----------------------------------------------------------------- model

Model::Model(const BackboneConfig& config, std::mt19937_64& init_rng)
    : config_(config) {
    config_.validate();
    int ch = config_.in_channels;
    boundary_layer_.assign(static_cast<size_t>(config_.stages.size()) + 2, 0);
    boundary_layer_[0] = 0;
    for (size_t k = 0; k < config_.stages.size(); ++k) {
        const auto& st = config_.stages[k];
        layers_.push_back(std::make_unique<Conv2d>(params_,
            "stage" + std::to_string(k + 1) + ".conv", ch, st.channels, 3,
            st.downsample ? 2 : 1, 1, init_rng));
        layers_.push_back(std::make_unique<Relu>());
        ch = st.channels;
        boundary_layer_[k + 1] = static_cast<int>(layers_.size());
    }
    for (int d = 0; d < config_.head_deconvs; ++d) {
        layers_.push_back(std::make_unique<Upsample2x>());
        layers_.push_back(std::make_unique<Conv2d>(params_,
            "head" + std::to_string(d + 1) + ".conv", ch, ch, 3, 1, 1, init_rng));
        layers_.push_back(std::make_unique<Relu>());
    }
    boundary_layer_[config_.stages.size() + 1] = static_cast<int>(layers_.size());
    layers_.push_back(std::make_unique<Conv2d>(params_, "final.conv", ch,
                                               config_.out_joints, 1, 1, 0, init_rng));
}

Model::~Model() = default;
Model::Model(Model&&) noexcept = default;
Model& Model::operator=(Model&&) noexcept = default;

int Model::num_boundaries() const {
    return static_cast<int>(config_.stages.size()) + 2;
}

Tensor Model::forward(const Tensor& input, const MixHook* mix, bool record) {
    if (mix) {
        if (mix->boundary < 0 || mix->boundary >= num_boundaries())
            throw std::invalid_argument("Model::forward: mix boundary out of range");
        if (static_cast<int>(mix->partner.size()) != input.n())
            throw std::invalid_argument("Model::forward: partner permutation size mismatch");
    }
    mix_active_ = false;
    Tensor x = input;
    int mix_layer = mix ? boundary_layer_[mix->boundary] : -1;
    for (size_t li = 0; li < layers_.size(); ++li) {
        if (mix && static_cast<int>(li) == mix_layer) {
            x = mix_rows(x, mix->alpha, mix->partner);
            if (record) {
                recorded_mix_ = *mix;
                mix_active_ = true;
            }
        }
        x = layers_[li]->forward(x, params_, record);
    }
    return x;
}

void Model::backward(const Tensor& grad_output) {
    Tensor g = grad_output;
    int mix_layer = mix_active_ ? boundary_layer_[recorded_mix_.boundary] : -1;
    for (int li = static_cast<int>(layers_.size()) - 1; li >= 0; --li) {
        g = layers_[li]->backward(g, params_);
        if (mix_active_ && li == mix_layer)
            g = mix_rows_backward(g, recorded_mix_.alpha, recorded_mix_.partner);
    }
}

void Adam::step(ParameterStore& params, double lr) {
    if (m_.size() != params.total()) {
        m_.assign(params.total(), 0.0);
        v_.assign(params.total(), 0.0);
    }
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params.total(); ++i) {
        double g = params.grads()[i];
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
        double update = lr * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
        params.values()[i] = static_cast<float>(params.values()[i] - update);
    }
}

// ------------------------------------------------------------ checkpoint

namespace {

template <typename T>
void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

void write_string(std::ostream& os, const std::string& s) {
    write_pod<uint32_t>(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
    uint32_t len = read_pod<uint32_t>(is);
    std::string s(len, '\0');
    is.read(s.data(), len);
    return s;
}

} // namespace

void save_checkpoint(const std::string& path, const Model& model, const Adam* opt,
                     int epoch, const std::string& rng_state) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
    write_string(os, kCheckpointMagic);
    const auto& ps = model.params();
    write_pod<uint32_t>(os, static_cast<uint32_t>(ps.entries().size()));
    for (const auto& e : ps.entries()) {
        write_string(os, e.name);
        write_pod<uint32_t>(os, static_cast<uint32_t>(e.shape.size()));
        for (int d : e.shape) write_pod<int32_t>(os, d);
        os.write(reinterpret_cast<const char*>(ps.values() + e.offset),
                 static_cast<std::streamsize>(e.count * sizeof(float)));
    }
    write_pod<uint8_t>(os, opt ? 1 : 0);
    if (opt) {
        Adam& o = *const_cast<Adam*>(opt);
        write_pod<int64_t>(os, o.steps());
        uint64_t n = o.first_moment().size();
        write_pod<uint64_t>(os, n);
        os.write(reinterpret_cast<const char*>(o.first_moment().data()),
                 static_cast<std::streamsize>(n * sizeof(double)));
        os.write(reinterpret_cast<const char*>(o.second_moment().data()),
                 static_cast<std::streamsize>(n * sizeof(double)));
    }
    write_pod<int32_t>(os, epoch);
    write_string(os, rng_state);
}

std::pair<int, std::string> load_checkpoint(const std::string& path, Model& model,
                                            Adam* opt) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read checkpoint: " + path);
    if (read_string(is) != kCheckpointMagic)
        throw std::runtime_error("incompatible checkpoint header in " + path);
    auto& ps = model.params();
    uint32_t count = read_pod<uint32_t>(is);
    if (count != ps.entries().size())
        throw std::runtime_error("checkpoint parameter count mismatch");
    for (const auto& e : ps.entries()) {
        std::string name = read_string(is);
        if (name != e.name)
            throw std::runtime_error("checkpoint parameter name mismatch: " + name);
        uint32_t ndim = read_pod<uint32_t>(is);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = read_pod<int32_t>(is);
        if (shape != e.shape)
            throw std::runtime_error("checkpoint shape mismatch for " + name);
        is.read(reinterpret_cast<char*>(ps.values() + e.offset),
                static_cast<std::streamsize>(e.count * sizeof(float)));
    }
    uint8_t has_opt = read_pod<uint8_t>(is);
    if (has_opt) {
        int64_t t = read_pod<int64_t>(is);
        uint64_t n = read_pod<uint64_t>(is);
        std::vector<double> m(n), v(n);
        is.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        is.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (opt) {
            opt->set_steps(t);
            opt->first_moment() = std::move(m);
            opt->second_moment() = std::move(v);
        }
    }
    int epoch = read_pod<int32_t>(is);
    std::string rng_state = read_string(is);
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
    return {epoch, rng_state};
}

} // namespace adaptmask
