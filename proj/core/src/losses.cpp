#include "inpaint/losses.hpp"

#include <cmath>

namespace inpaint {

void LossWeights::validate() const {
    const double all[] = {lambda_l1, lambda_adv, lambda_pl,  lambda_fm,   lambda_gp,
                          alpha_tv,  alpha_ffl,  alpha_lama, alpha_focal, beta_tv};
    for (double v : all)
        if (!(v >= 0.0)) throw std::invalid_argument("loss weights must be >= 0");
}

FeatureExtractor::FeatureExtractor(std::uint64_t seed, int in_channels) : seed_(seed) {
    const int widths[kStages] = {16, 32, 64, 64};
    geoms_ = {{2, 1, 1}, {2, 1, 1}, {1, 2, 2}, {1, 4, 4}};
    int cin = in_channels;
    Rng base(seed);
    for (int s = 0; s < kStages; ++s) {
        const int cout = widths[s];
        Tensor w({cout, cin, 3, 3});
        Rng r = base.fork(fnv1a("extractor.stage" + std::to_string(s)));
        const double std_dev = std::sqrt(2.0 / (static_cast<double>(cin) * 9.0));
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = r.normal(0.0, std_dev);
        weights_.push_back(std::move(w));
        biases_.push_back(Tensor::zeros({cout}));
        cin = cout;
    }
}

std::vector<ad::Var> FeatureExtractor::stages(const ad::Var& x) const {
    std::vector<ad::Var> outs;
    ad::Var h = x;
    for (int s = 0; s < kStages; ++s) {
        ad::Var w = ad::constant(weights_[s]);
        ad::Var conv = ad::conv2d(h, w, geoms_[s]);
        ad::Var b = ad::expand_hw(ad::constant(biases_[s]), conv.val().dim(1), conv.val().dim(2));
        h = ad::relu(ad::add(conv, b));
        outs.push_back(h);
    }
    return outs;
}

std::vector<double> FeatureExtractor::pooled_features(const Tensor& image) const {
    ad::Var x = ad::constant(image);
    std::vector<ad::Var> outs = stages(x);
    const Tensor& last = outs.back().val();
    const int c = last.dim(0), h = last.dim(1), w = last.dim(2);
    std::vector<double> pooled(c, 0.0);
    for (int ci = 0; ci < c; ++ci) {
        double acc = 0.0;
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) acc += last.at3(ci, y, xx);
        pooled[ci] = acc / (static_cast<double>(h) * w);
    }
    return pooled;
}

Mask downsample_mask_max(const Mask& m, int factor) {
    if (factor < 1) throw dim_error("downsample_mask_max: factor must be >= 1");
    const int oh = (m.height + factor - 1) / factor;
    const int ow = (m.width + factor - 1) / factor;
    Mask out(oh, ow);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(y, x)) out.at(y / factor, x / factor) = 1;
    return out;
}

namespace {

// (1-M) / M replicated across `channels` planes
Tensor mask_planes(const Mask& m, int channels, bool invert) {
    Tensor t({channels, m.height, m.width});
    for (int c = 0; c < channels; ++c)
        for (int y = 0; y < m.height; ++y)
            for (int x = 0; x < m.width; ++x)
                t.at3(c, y, x) = invert ? 1.0 - m.at(y, x) : static_cast<double>(m.at(y, x));
    return t;
}

void check_image_pair(const ad::Var& x, const ad::Var& xhat) {
    if (!x.val().same_shape(xhat.val()))
        throw dim_error("loss: image shapes differ: " + shape_str(x.val().shape()) + " vs " +
                        shape_str(xhat.val().shape()));
    if (x.val().rank() != 3) throw dim_error("loss: images must be (C,H,W)");
}

}  // namespace

namespace loss_expr {

ad::Var l1_masked(const ad::Var& x, const ad::Var& xhat, const Mask& m) {
    check_image_pair(x, xhat);
    const int c = x.val().dim(0);
    if (x.val().dim(1) != m.height || x.val().dim(2) != m.width)
        throw dim_error("l1_masked: mask dims do not match image");
    const Tensor keep = mask_planes(m, c, /*invert=*/true);
    const std::size_t unmasked = m.bits.size() - m.count_masked();
    if (unmasked == 0) throw mask_invariant_error("l1_masked: mask has no unmasked pixels");
    const double denom = static_cast<double>(unmasked) * c;
    ad::Var diff = ad::abs_val(ad::sub(x, xhat));
    return ad::scale(ad::sum(ad::mul_const(diff, keep)), 1.0 / denom);
}

ad::Var perceptual(const ad::Var& x, const ad::Var& xhat, const FeatureExtractor& extractor) {
    check_image_pair(x, xhat);
    std::vector<ad::Var> fx = extractor.stages(x);
    std::vector<ad::Var> fxh = extractor.stages(xhat);
    ad::Var total;
    for (std::size_t s = 0; s < fx.size(); ++s) {
        ad::Var d = ad::sub(fx[s], fxh[s]);
        ad::Var stage = ad::mean(ad::mul(d, d));
        total = total.defined() ? ad::add(total, stage) : stage;
    }
    return ad::scale(total, 1.0 / static_cast<double>(fx.size()));
}

ad::Var adversarial_d(const ad::Var& d_real, const ad::Var& d_fake, const Mask& m_logit) {
    if (!d_real.val().same_shape(d_fake.val()))
        throw dim_error("adversarial_d: logit map shapes differ");
    if (d_real.val().rank() != 3) throw dim_error("adversarial_d: logits must be (1,h,w)");
    if (d_real.val().dim(1) != m_logit.height || d_real.val().dim(2) != m_logit.width)
        throw dim_error("adversarial_d: mask resolution " + std::to_string(m_logit.height) + "x" +
                        std::to_string(m_logit.width) + " does not match logits");
    const int c = d_real.val().dim(0);
    const Tensor hole = mask_planes(m_logit, c, /*invert=*/false);
    const Tensor keep = mask_planes(m_logit, c, /*invert=*/true);
    // -log sigmoid(z) = softplus(-z), -log(1 - sigmoid(z)) = softplus(z)
    ad::Var real_term = ad::mean(ad::softplus(ad::neg(d_real)));
    ad::Var fake_keep = ad::mean(ad::mul_const(ad::softplus(ad::neg(d_fake)), keep));
    ad::Var fake_hole = ad::mean(ad::mul_const(ad::softplus(d_fake), hole));
    return ad::add(real_term, ad::add(fake_keep, fake_hole));
}

ad::Var adversarial_g(const ad::Var& d_fake) {
    return ad::mean(ad::softplus(ad::neg(d_fake)));
}

ad::Var feature_match(const std::vector<ad::Var>& feats_real, const std::vector<ad::Var>& feats_fake) {
    if (feats_real.size() != feats_fake.size() || feats_real.empty())
        throw dim_error("feature_match: feature list mismatch");
    ad::Var total;
    for (std::size_t i = 0; i < feats_real.size(); ++i) {
        if (!feats_real[i].val().same_shape(feats_fake[i].val()))
            throw dim_error("feature_match: layer " + std::to_string(i) + " shape mismatch");
        // the real branch is treated as a constant
        ad::Var real_const = ad::constant(feats_real[i].val());
        ad::Var layer = ad::mean(ad::abs_val(ad::sub(feats_fake[i], real_const)));
        total = total.defined() ? ad::add(total, layer) : layer;
    }
    return ad::scale(total, 1.0 / static_cast<double>(feats_real.size()));
}

ad::Var tv(const ad::Var& xhat, double beta) {
    if (xhat.val().rank() != 3) throw dim_error("tv: input must be (C,H,W)");
    if (xhat.val().dim(1) < 2 || xhat.val().dim(2) < 2)
        throw dim_error("tv: spatial dims must be >= 2");
    ad::Var dh = ad::diff_h(xhat);
    ad::Var dv = ad::diff_v(xhat);
    ad::Var kernel = ad::add(ad::mul(dh, dh), ad::mul(dv, dv));
    return ad::sum(ad::pow_elem(kernel, beta / 2.0));
}

ad::Var gradient_penalty(const std::function<ad::Var(const ad::Var&)>& disc, const ad::Var& x) {
    ad::Var out = disc(x);
    ad::Var total = ad::sum(out);
    ad::GradMap gm = ad::backward(total);
    ad::Var g = gm.var(x);
    if (!g.defined()) throw finite_error("gradient_penalty: discriminator does not depend on its input");
    return ad::sum(ad::mul(g, g));
}

}  // namespace loss_expr

namespace {

LossValue finish(const ad::Var& value, const std::vector<std::pair<std::string, ad::Var>>& inputs) {
    value.val().ensure_finite("loss value");
    LossValue lv;
    lv.value = value.val()[0];
    ad::GradMap gm = ad::backward(value);
    for (const auto& [name, var] : inputs) {
        Tensor g = gm.tensor(var);
        g.ensure_finite("loss gradient for " + name);
        lv.grads[name] = std::move(g);
    }
    return lv;
}

}  // namespace

LossValue l1_masked(const Tensor& x, const Tensor& xhat, const Mask& m) {
    ad::Var xv = ad::constant(x);
    ad::Var xh = ad::leaf(xhat);
    return finish(loss_expr::l1_masked(xv, xh, m), {{"xhat", xh}});
}

LossValue perceptual(const Tensor& x, const Tensor& xhat, const FeatureExtractor& extractor,
                     bool grad_wrt_x) {
    ad::Var xv = ad::leaf(x, grad_wrt_x);
    ad::Var xh = ad::leaf(xhat);
    ad::Var v = loss_expr::perceptual(xv, xh, extractor);
    std::vector<std::pair<std::string, ad::Var>> inputs = {{"xhat", xh}};
    if (grad_wrt_x) inputs.emplace_back("x", xv);
    return finish(v, inputs);
}

LossValue adversarial_d(const Tensor& d_real, const Tensor& d_fake, const Mask& m_logit) {
    ad::Var dr = ad::leaf(d_real);
    ad::Var df = ad::leaf(d_fake);
    return finish(loss_expr::adversarial_d(dr, df, m_logit), {{"d_real", dr}, {"d_fake", df}});
}

LossValue adversarial_g(const Tensor& d_fake) {
    ad::Var df = ad::leaf(d_fake);
    return finish(loss_expr::adversarial_g(df), {{"d_fake", df}});
}

LossValue gradient_penalty(const std::function<ad::Var(const ad::Var&)>& disc, const Tensor& x) {
    ad::Var xv = ad::leaf(x);
    return finish(loss_expr::gradient_penalty(disc, xv), {{"x", xv}});
}

LossValue feature_match(const std::vector<Tensor>& feats_real, const std::vector<Tensor>& feats_fake) {
    if (feats_real.size() != feats_fake.size() || feats_real.empty())
        throw dim_error("feature_match: feature list mismatch");
    std::vector<ad::Var> fr, ff;
    std::vector<std::pair<std::string, ad::Var>> inputs;
    for (std::size_t i = 0; i < feats_real.size(); ++i) {
        fr.push_back(ad::constant(feats_real[i]));
        ff.push_back(ad::leaf(feats_fake[i]));
        inputs.emplace_back("fake_" + std::to_string(i), ff.back());
    }
    return finish(loss_expr::feature_match(fr, ff), inputs);
}

LossValue tv(const Tensor& xhat, double beta) {
    ad::Var xh = ad::leaf(xhat);
    return finish(loss_expr::tv(xh, beta), {{"xhat", xh}});
}

namespace {

void axpy_grads(std::map<std::string, Tensor>& acc, const LossValue& term, double weight) {
    for (const auto& [name, g] : term.grads) {
        auto it = acc.find(name);
        if (it == acc.end()) {
            Tensor scaled(g.shape());
            for (std::size_t i = 0; i < g.size(); ++i) scaled[i] = weight * g[i];
            acc.emplace(name, std::move(scaled));
        } else {
            if (!it->second.same_shape(g)) throw dim_error("loss combination: gradient shape clash for " + name);
            for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += weight * g[i];
        }
    }
}

}  // namespace

LossValue lama_total(const LossValue& l1, const LossValue& adv, const LossValue& pl,
                     const LossValue& fm, const LossWeights& w) {
    LossValue out;
    out.value = w.lambda_l1 * l1.value + w.lambda_adv * adv.value + w.lambda_pl * pl.value +
                w.lambda_fm * fm.value;
    axpy_grads(out.grads, l1, w.lambda_l1);
    axpy_grads(out.grads, adv, w.lambda_adv);
    axpy_grads(out.grads, pl, w.lambda_pl);
    axpy_grads(out.grads, fm, w.lambda_fm);
    return out;
}

LossValue joint_total(const LossValue& lama, const LossValue& tv_term, const LossValue& ffl_term,
                      const LossWeights& w) {
    LossValue out;
    out.value = w.alpha_tv * tv_term.value + w.alpha_ffl * ffl_term.value + w.alpha_lama * lama.value;
    axpy_grads(out.grads, tv_term, w.alpha_tv);
    axpy_grads(out.grads, ffl_term, w.alpha_ffl);
    axpy_grads(out.grads, lama, w.alpha_lama);
    return out;
}

}  // namespace inpaint
