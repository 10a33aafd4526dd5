#pragma once

#include "inpaint/autodiff.hpp"
#include "inpaint/masks.hpp"
#include "inpaint/tensor.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace inpaint {

/// Loss-term weights. Defaults carry the published values: lambda_l1 = 10,
/// lambda_adv = 10, lambda_pl = 100, lambda_fm = 30, unit alphas for the
/// joint objective, focal exponent 1 and TV exponent 2. The gradient-penalty
/// weight is not published; 0.001 follows the public LaMa configuration.
struct LossWeights {
    double lambda_l1 = 10.0;
    double lambda_adv = 10.0;
    double lambda_pl = 100.0;
    double lambda_fm = 30.0;
    double lambda_gp = 0.001;
    double alpha_tv = 1.0;    // weight of the TV term in the joint loss
    double alpha_ffl = 1.0;   // weight of the FFL term in the joint loss
    double alpha_lama = 1.0;  // weight of the composite spatial loss
    double alpha_focal = 1.0; // exponent of the focal weight
    double beta_tv = 2.0;     // exponent of the TV kernel

    void validate() const;
};

/// Scalar loss plus gradients keyed by input-tensor name.
struct LossValue {
    double value = 0.0;
    std::map<std::string, Tensor> grads;
};

/// Fixed-seed stand-in for a pretrained perceptual network: four conv
/// stages (stride 2, stride 2, dilation 2, dilation 4) of widths
/// 16/32/64/64 with ReLUs, weights frozen at construction. The default
/// seed 2718281828 is part of the artifact definition.
class FeatureExtractor {
  public:
    static constexpr std::uint64_t kDefaultSeed = 2718281828ull;
    static constexpr int kStages = 4;
    static constexpr int kFeatureDim = 64;  // stage-4 width, pooled for proxy features

    explicit FeatureExtractor(std::uint64_t seed = kDefaultSeed, int in_channels = 3);

    std::uint64_t seed() const { return seed_; }

    /// Post-activation outputs of the four stages; weights enter the tape
    /// as constants so no gradient flows into the extractor.
    std::vector<ad::Var> stages(const ad::Var& x) const;

    /// Spatially pooled stage-4 features (dimension kFeatureDim).
    std::vector<double> pooled_features(const Tensor& image) const;

  private:
    std::uint64_t seed_;
    std::vector<Tensor> weights_;
    std::vector<Tensor> biases_;
    std::vector<ConvGeom> geoms_;
};

/// Max-pool a hole mask down to discriminator-logit resolution: a logit
/// cell counts as masked if it overlaps any hole pixel.
Mask downsample_mask_max(const Mask& m, int factor);

// tape-level loss expressions (shared by the standalone ops and the trainer)
namespace loss_expr {

ad::Var l1_masked(const ad::Var& x, const ad::Var& xhat, const Mask& m);
ad::Var perceptual(const ad::Var& x, const ad::Var& xhat, const FeatureExtractor& extractor);
ad::Var adversarial_d(const ad::Var& d_real, const ad::Var& d_fake, const Mask& m_logit);
ad::Var adversarial_g(const ad::Var& d_fake);
ad::Var feature_match(const std::vector<ad::Var>& feats_real, const std::vector<ad::Var>& feats_fake);
ad::Var tv(const ad::Var& xhat, double beta);
/// R1 penalty: squared L2 norm of the input gradient of the summed
/// discriminator output, built by differentiating through the tape (the
/// result is differentiable w.r.t. discriminator parameters).
ad::Var gradient_penalty(const std::function<ad::Var(const ad::Var&)>& disc, const ad::Var& x);

}  // namespace loss_expr

// standalone operations: value + gradients w.r.t. the differentiable inputs

LossValue l1_masked(const Tensor& x, const Tensor& xhat, const Mask& m);
LossValue perceptual(const Tensor& x, const Tensor& xhat, const FeatureExtractor& extractor,
                     bool grad_wrt_x = false);
LossValue adversarial_d(const Tensor& d_real, const Tensor& d_fake, const Mask& m_logit);
LossValue adversarial_g(const Tensor& d_fake);
LossValue gradient_penalty(const std::function<ad::Var(const ad::Var&)>& disc, const Tensor& x);
LossValue feature_match(const std::vector<Tensor>& feats_real, const std::vector<Tensor>& feats_fake);
LossValue tv(const Tensor& xhat, double beta);

/// 10*L1 + 10*L_adv + 100*L_PL + 30*L_fm with gradients combined linearly.
/// Component gradient maps must address the same tensors by the same names.
LossValue lama_total(const LossValue& l1, const LossValue& adv, const LossValue& pl,
                     const LossValue& fm, const LossWeights& w);

/// alpha1*TV + alpha2*FFL + alpha3*LaMa.
LossValue joint_total(const LossValue& lama, const LossValue& tv_term, const LossValue& ffl_term,
                      const LossWeights& w);

}  // namespace inpaint
