#pragma once

#include "inpaint/masks.hpp"
#include "inpaint/model.hpp"
#include "inpaint/losses.hpp"
#include "inpaint/tensor.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace inpaint {

struct eval_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Paste the prediction into the hole, keep known pixels: x*(1-M) + xhat*M.
Tensor composite(const Tensor& x, const Tensor& xhat, const Mask& m);

/// 10*log10(1/MSE) in dB, capped at 99 (the cap stands in for infinity on
/// identical inputs). Inputs are expected in [0,1].
double psnr(const Tensor& a, const Tensor& b);

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01,
/// K2=0.03, dynamic range 1, channels averaged. Spatial dims must be >= 11.
double ssim(const Tensor& a, const Tensor& b);

/// Frechet distance between Gaussian fits of two feature clouds:
/// |mu_r-mu_f|^2 + Tr(S_r + S_f - 2 (S_r S_f)^{1/2}). The matrix square
/// root goes through symmetric eigendecompositions with eigenvalue clamping.
/// Requires at least dim+1 samples per set.
double proxy_fid(const std::vector<std::vector<double>>& feats_real,
                 const std::vector<std::vector<double>>& feats_fake);

// Symmetric eigendecomposition (cyclic Jacobi); exposed for the closed-form
// FID oracle tests. a is n*n row-major and symmetric.
void jacobi_eigen(std::vector<double> a, int n, std::vector<double>& eigenvalues,
                  std::vector<double>& eigenvectors);

struct EvalCell {
    double mean = 0.0;
    int count = 0;
    int failures = 0;
};

struct EvalOptions {
    std::uint64_t seed = 1;
    std::vector<std::string> metrics = {"l1", "psnr", "ssim"};
    bool artifact_scores = false;  // checkerboard/ripple on the raw prediction
};

struct EvalReport {
    std::string header;  // labels proxy metrics to prevent misreading
    std::uint64_t seed = 0;
    int sample_count = 0;
    std::vector<std::string> metric_names;
    // mask type name -> metric name -> cell
    std::map<std::string, std::map<std::string, EvalCell>> rows;

    nlohmann::json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);
    /// Aligned table; when a baseline is given, each metric column carries a
    /// delta column against it.
    std::string render_table(const EvalReport* baseline = nullptr) const;
};

/// Per-mask-type evaluation harness: for every validation image and every
/// suite type, draws a seed-determined mask, runs the generator, composites
/// and scores. Metric failures mark the item failed and the run continues.
EvalReport evaluate(const ParamSet& gen_params, const FfcConfig& gen_cfg,
                    const std::vector<Tensor>& images, const std::vector<MaskType>& suite,
                    const FeatureExtractor& extractor, const EvalOptions& opts);

}  // namespace inpaint
