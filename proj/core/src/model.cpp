#include "inpaint/model.hpp"

#include "inpaint/fft.hpp"
#include "inpaint/rng.hpp"

#include <cmath>

namespace inpaint {

void FfcConfig::validate() const {
    if (base_width < 1) throw std::invalid_argument("FfcConfig: base_width must be >= 1");
    if (global_ratio < 0.0 || global_ratio >= 1.0)
        throw std::invalid_argument("FfcConfig: global_ratio must be in [0,1)");
    if (n_down != n_up) throw std::invalid_argument("FfcConfig: n_down must equal n_up");
    if (n_down < 1 || n_residual < 0) throw std::invalid_argument("FfcConfig: bad block counts");
    if (in_channels < 2 || out_channels < 1) throw std::invalid_argument("FfcConfig: bad channel counts");
    if (norm != "instance" && norm != "none") throw std::invalid_argument("FfcConfig: unknown norm tag");
    if (activation != "relu") throw std::invalid_argument("FfcConfig: unknown activation tag");
    for (int s = 0; s <= n_down; ++s) {
        const double g = width_at(s) * global_ratio;
        if (std::abs(g - std::round(g)) > 1e-9)
            throw std::invalid_argument("FfcConfig: global_ratio does not give integer channels at stage " +
                                        std::to_string(s));
    }
}

int FfcConfig::global_channels() const {
    return static_cast<int>(std::llround(bottleneck_width() * global_ratio));
}

void DiscConfig::validate() const {
    if (base_width < 1) throw std::invalid_argument("DiscConfig: base_width must be >= 1");
    if (depth != 4) throw std::invalid_argument("DiscConfig: depth must be 4");
    if (leaky_slope <= 0.0 || leaky_slope >= 1.0)
        throw std::invalid_argument("DiscConfig: leaky_slope must be in (0,1)");
}

void ParamSet::add(const std::string& name, Tensor t) {
    if (index_.count(name)) throw std::invalid_argument("ParamSet: duplicate name " + name);
    index_[name] = entries_.size();
    entries_.push_back({name, std::move(t)});
}

Tensor& ParamSet::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamSet: no tensor named " + name);
    return entries_[it->second].tensor;
}

const Tensor& ParamSet::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamSet: no tensor named " + name);
    return entries_[it->second].tensor;
}

std::size_t ParamSet::total_parameters() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.tensor.size();
    return n;
}

const ad::Var& VarMap::at(const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end()) throw std::out_of_range("VarMap: no tensor named " + name);
    return it->second;
}

VarMap lift_params(const ParamSet& params, bool requires_grad) {
    VarMap vm;
    for (const auto& e : params.entries()) vm.vars.emplace(e.name, ad::leaf(e.tensor, requires_grad));
    return vm;
}

namespace {

// fan-in scaled normal init for one tensor, keyed by the parameter name so
// the stream does not depend on insertion order
void he_init(ParamSet& ps, const std::string& name, std::vector<int> shape, int fan_in) {
    Rng r = Rng(ps.seed()).fork(fnv1a(name));
    Tensor t(shape);
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.normal(0.0, std_dev);
    ps.add(name, std::move(t));
}

void add_conv(ParamSet& ps, const std::string& prefix, int cin, int cout, int k) {
    he_init(ps, prefix + ".w", {cout, cin, k, k}, cin * k * k);
    ps.add(prefix + ".b", Tensor::zeros({cout}));
}

// transposed conv kernels are stored (in, out, k, k) to match the
// conv2d_bwd_input signature
void add_deconv(ParamSet& ps, const std::string& prefix, int cin, int cout, int k) {
    he_init(ps, prefix + ".w", {cin, cout, k, k}, cin * k * k);
    ps.add(prefix + ".b", Tensor::zeros({cout}));
}

void add_norm(ParamSet& ps, const std::string& prefix, int c) {
    ps.add(prefix + ".gamma", Tensor::full({c}, 1.0));
    ps.add(prefix + ".beta", Tensor::zeros({c}));
}

ad::Var conv_bias(const ad::Var& x, const VarMap& p, const std::string& prefix, const ConvGeom& geom) {
    ad::Var y = ad::conv2d(x, p.at(prefix + ".w"), geom);
    ad::Var b = ad::expand_hw(p.at(prefix + ".b"), y.val().dim(1), y.val().dim(2));
    return ad::add(y, b);
}

ad::Var deconv_bias(const ad::Var& x, const VarMap& p, const std::string& prefix, int out_h, int out_w) {
    const ConvGeom geom{2, 1, 1};
    ad::Var y = ad::conv2d_bwd_input(x, p.at(prefix + ".w"), geom, out_h, out_w);
    ad::Var b = ad::expand_hw(p.at(prefix + ".b"), out_h, out_w);
    return ad::add(y, b);
}

constexpr double kNormEps = 1e-5;

ad::Var instance_norm(const ad::Var& x, const ad::Var& gamma, const ad::Var& beta) {
    const int h = x.val().dim(1), w = x.val().dim(2);
    const double inv_hw = 1.0 / (static_cast<double>(h) * w);
    ad::Var mu = ad::scale(ad::sum_hw(x), inv_hw);
    ad::Var xc = ad::sub(x, ad::expand_hw(mu, h, w));
    ad::Var var = ad::scale(ad::sum_hw(ad::mul(xc, xc)), inv_hw);
    ad::Var inv = ad::rsqrt_eps(var, kNormEps);
    ad::Var y = ad::mul(xc, ad::expand_hw(ad::mul(inv, gamma), h, w));
    return ad::add(y, ad::expand_hw(beta, h, w));
}

ad::Var norm_maybe(const ad::Var& x, const VarMap& p, const std::string& prefix, const FfcConfig& cfg) {
    if (cfg.norm == "none") return x;
    return instance_norm(x, p.at(prefix + ".gamma"), p.at(prefix + ".beta"));
}

}  // namespace

ad::Var spectral_transform(const ad::Var& x_global, const VarMap& params, const std::string& prefix,
                           const SpectralOptions& opts) {
    const int h = x_global.val().dim(1), w = x_global.val().dim(2);
    if (!is_power_of_two(h) || !is_power_of_two(w))
        throw dim_error("spectral_transform: spatial dims must be powers of two, got " +
                        std::to_string(h) + "x" + std::to_string(w));
    ad::Var spec = ad::fft2_stack(x_global);
    ad::Var mixed = conv_bias(spec, params, prefix, ConvGeom{1, 1, 0});
    if (opts.with_norm)
        mixed = instance_norm(mixed, params.at(prefix + ".norm.gamma"), params.at(prefix + ".norm.beta"));
    if (opts.with_activation) mixed = ad::relu(mixed);
    return ad::ifft2_unstack(mixed);
}

std::pair<ad::Var, ad::Var> ffc_block(const ad::Var& x_local, const ad::Var& x_global,
                                      const VarMap& params, const std::string& prefix,
                                      const FfcConfig& cfg) {
    const ConvGeom k3{1, 1, 1};
    const bool has_global = x_global.defined();

    ad::Var to_local = conv_bias(x_local, params, prefix + ".ll", k3);
    if (has_global) to_local = ad::add(to_local, conv_bias(x_global, params, prefix + ".gl", k3));
    ad::Var y_local = ad::relu(norm_maybe(to_local, params, prefix + ".norm_l", cfg));

    ad::Var y_global;
    if (has_global) {
        SpectralOptions sopts;
        sopts.with_norm = cfg.norm != "none";
        ad::Var to_global = conv_bias(x_local, params, prefix + ".lg", k3);
        to_global = ad::add(to_global, spectral_transform(x_global, params, prefix + ".spec", sopts));
        y_global = ad::relu(norm_maybe(to_global, params, prefix + ".norm_g", cfg));
    }
    return {y_local, y_global};
}

ParamSet init_generator_params(const FfcConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ParamSet ps(seed);
    add_conv(ps, "g.stem", cfg.in_channels, cfg.base_width, 3);
    add_norm(ps, "g.stem.norm", cfg.base_width);
    for (int i = 0; i < cfg.n_down; ++i) {
        add_conv(ps, "g.down" + std::to_string(i), cfg.width_at(i), cfg.width_at(i + 1), 3);
        add_norm(ps, "g.down" + std::to_string(i) + ".norm", cfg.width_at(i + 1));
    }
    const int c = cfg.bottleneck_width();
    const int cg = cfg.global_channels();
    const int cl = c - cg;
    for (int r = 0; r < cfg.n_residual; ++r) {
        const std::string prefix = "g.res" + std::to_string(r);
        add_conv(ps, prefix + ".ll", cl, cl, 3);
        add_norm(ps, prefix + ".norm_l", cl);
        if (cg > 0) {
            add_conv(ps, prefix + ".gl", cg, cl, 3);
            add_conv(ps, prefix + ".lg", cl, cg, 3);
            add_conv(ps, prefix + ".spec", 2 * cg, 2 * cg, 1);
            add_norm(ps, prefix + ".spec.norm", 2 * cg);
            add_norm(ps, prefix + ".norm_g", cg);
        }
    }
    for (int i = 0; i < cfg.n_up; ++i) {
        const int cin = cfg.width_at(cfg.n_down - i);
        const int cout = cfg.width_at(cfg.n_down - i - 1);
        add_deconv(ps, "g.up" + std::to_string(i), cin, cout, 3);
        add_norm(ps, "g.up" + std::to_string(i) + ".norm", cout);
    }
    add_conv(ps, "g.head", cfg.base_width, cfg.out_channels, 3);
    return ps;
}

ParamSet init_discriminator_params(const DiscConfig& cfg, std::uint64_t seed, int in_channels) {
    cfg.validate();
    ParamSet ps(seed);
    const int b = cfg.base_width;
    add_conv(ps, "d.s0", in_channels, b, 4);
    add_conv(ps, "d.s1", b, 2 * b, 4);
    add_norm(ps, "d.s1.norm", 2 * b);
    add_conv(ps, "d.s2", 2 * b, 4 * b, 4);
    add_norm(ps, "d.s2.norm", 4 * b);
    add_conv(ps, "d.s3", 4 * b, 4 * b, 3);
    add_norm(ps, "d.s3.norm", 4 * b);
    add_conv(ps, "d.head", 4 * b, 1, 3);
    return ps;
}

std::size_t generator_parameter_count(const FfcConfig& cfg) {
    cfg.validate();
    auto conv_n = [](int cin, int cout, int k) {
        return static_cast<std::size_t>(cout) * cin * k * k + cout;
    };
    auto norm_n = [](int ch) { return static_cast<std::size_t>(2) * ch; };
    std::size_t n = conv_n(cfg.in_channels, cfg.base_width, 3) + norm_n(cfg.base_width);
    for (int i = 0; i < cfg.n_down; ++i)
        n += conv_n(cfg.width_at(i), cfg.width_at(i + 1), 3) + norm_n(cfg.width_at(i + 1));
    const int c = cfg.bottleneck_width();
    const int cg = cfg.global_channels();
    const int cl = c - cg;
    for (int r = 0; r < cfg.n_residual; ++r) {
        n += conv_n(cl, cl, 3) + norm_n(cl);
        if (cg > 0) {
            n += conv_n(cg, cl, 3) + conv_n(cl, cg, 3);
            n += conv_n(2 * cg, 2 * cg, 1) + norm_n(2 * cg);
            n += norm_n(cg);
        }
    }
    for (int i = 0; i < cfg.n_up; ++i) {
        const int cin = cfg.width_at(cfg.n_down - i);
        const int cout = cfg.width_at(cfg.n_down - i - 1);
        n += static_cast<std::size_t>(cin) * cout * 9 + cout + norm_n(cout);
    }
    n += conv_n(cfg.base_width, cfg.out_channels, 3);
    return n;
}

std::size_t discriminator_parameter_count(const DiscConfig& cfg, int in_channels) {
    cfg.validate();
    auto conv_n = [](int cin, int cout, int k) {
        return static_cast<std::size_t>(cout) * cin * k * k + cout;
    };
    const int b = cfg.base_width;
    return conv_n(in_channels, b, 4) + conv_n(b, 2 * b, 4) + 4 * b + conv_n(2 * b, 4 * b, 4) + 8 * b +
           conv_n(4 * b, 4 * b, 3) + 8 * b + conv_n(4 * b, 1, 3);
}

ad::Var generator_forward(const ad::Var& image, const Mask& m, const VarMap& params,
                          const FfcConfig& cfg) {
    cfg.validate();
    const int ch = image.val().dim(0), h = image.val().dim(1), w = image.val().dim(2);
    if (ch + 1 != cfg.in_channels)
        throw dim_error("generator: image channels + mask plane != configured input channels");
    if (m.height != h || m.width != w) throw dim_error("generator: mask dims do not match image");
    const int down_factor = 1 << cfg.n_down;
    if (h % down_factor != 0 || w % down_factor != 0)
        throw dim_error("generator: spatial dims must be divisible by " + std::to_string(down_factor));
    if (!is_power_of_two(h / down_factor) || !is_power_of_two(w / down_factor))
        throw dim_error("generator: bottleneck dims must be powers of two");

    // input conditioning: zero the holes, append the mask plane
    Tensor keep({ch, h, w});
    Tensor hole_plane({1, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double hole = m.at(y, x);
            hole_plane.at3(0, y, x) = hole;
            for (int c = 0; c < ch; ++c) keep.at3(c, y, x) = 1.0 - hole;
        }
    ad::Var stack = ad::concat_channels(ad::mul_const(image, keep), ad::constant(hole_plane));

    const ConvGeom k3{1, 1, 1};
    const ConvGeom k3s2{2, 1, 1};
    ad::Var x = ad::relu(norm_maybe(conv_bias(stack, params, "g.stem", k3), params, "g.stem.norm", cfg));
    for (int i = 0; i < cfg.n_down; ++i) {
        const std::string prefix = "g.down" + std::to_string(i);
        x = ad::relu(norm_maybe(conv_bias(x, params, prefix, k3s2), params, prefix + ".norm", cfg));
    }

    const int c = cfg.bottleneck_width();
    const int cg = cfg.global_channels();
    const int cl = c - cg;
    ad::Var x_local = cg > 0 ? ad::slice_channels(x, 0, cl) : x;
    ad::Var x_global = cg > 0 ? ad::slice_channels(x, cl, c) : ad::Var();
    for (int r = 0; r < cfg.n_residual; ++r) {
        auto [f_local, f_global] = ffc_block(x_local, x_global, params, "g.res" + std::to_string(r), cfg);
        x_local = ad::add(x_local, f_local);
        if (cg > 0) x_global = ad::add(x_global, f_global);
    }
    x = cg > 0 ? ad::concat_channels(x_local, x_global) : x_local;

    for (int i = 0; i < cfg.n_up; ++i) {
        const std::string prefix = "g.up" + std::to_string(i);
        const int out_h = x.val().dim(1) * 2, out_w = x.val().dim(2) * 2;
        x = ad::relu(norm_maybe(deconv_bias(x, params, prefix, out_h, out_w), params, prefix + ".norm", cfg));
    }
    return ad::sigmoid(conv_bias(x, params, "g.head", k3));
}

DiscOutput discriminator_forward(const ad::Var& x, const VarMap& params, const DiscConfig& cfg) {
    cfg.validate();
    if (x.val().rank() != 3) throw dim_error("discriminator: input must be (C,H,W)");
    if (x.val().dim(1) < 32 || x.val().dim(2) < 32)
        throw dim_error("discriminator: input must be at least 32x32");
    const ConvGeom k4s2{2, 1, 1};
    const ConvGeom k3{1, 1, 1};

    DiscOutput out;
    ad::Var h = ad::leaky_relu(conv_bias(x, params, "d.s0", k4s2), cfg.leaky_slope);
    out.features.push_back(h);
    h = conv_bias(h, params, "d.s1", k4s2);
    h = ad::leaky_relu(instance_norm(h, params.at("d.s1.norm.gamma"), params.at("d.s1.norm.beta")),
                       cfg.leaky_slope);
    out.features.push_back(h);
    h = conv_bias(h, params, "d.s2", k4s2);
    h = ad::leaky_relu(instance_norm(h, params.at("d.s2.norm.gamma"), params.at("d.s2.norm.beta")),
                       cfg.leaky_slope);
    out.features.push_back(h);
    h = conv_bias(h, params, "d.s3", k3);
    h = ad::leaky_relu(instance_norm(h, params.at("d.s3.norm.gamma"), params.at("d.s3.norm.beta")),
                       cfg.leaky_slope);
    out.features.push_back(h);
    out.logits = conv_bias(h, params, "d.head", k3);
    return out;
}

Tensor generator_forward(const Tensor& image, const Mask& m, const ParamSet& params,
                         const FfcConfig& cfg) {
    VarMap vm = lift_params(params, /*requires_grad=*/false);
    return generator_forward(ad::constant(image), m, vm, cfg).val();
}

std::pair<Tensor, std::vector<Tensor>> discriminator_forward(const Tensor& x, const ParamSet& params,
                                                             const DiscConfig& cfg) {
    VarMap vm = lift_params(params, /*requires_grad=*/false);
    DiscOutput out = discriminator_forward(ad::constant(x), vm, cfg);
    std::vector<Tensor> feats;
    for (const ad::Var& f : out.features) feats.push_back(f.val());
    return {out.logits.val(), std::move(feats)};
}

}  // namespace inpaint
