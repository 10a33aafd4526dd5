#pragma once

#include "inpaint/autodiff.hpp"
#include "inpaint/fft.hpp"
#include "inpaint/losses.hpp"
#include "inpaint/tensor.hpp"

namespace inpaint {

/// Per-bin focal weight |F_r - F_f|^alpha. Treated as a constant during
/// differentiation of the frequency loss.
struct FocalWeightGrid {
    int m = 0;
    int n = 0;
    Tensor w;  // (m, n), nonnegative
};

FocalWeightGrid focal_weight(const ComplexGrid& fr, const ComplexGrid& ff, double alpha);

/// Log-magnitude spectrum visualization: per-channel log(1+|F|), channels
/// averaged, DC shifted to the center, rescaled to [0,1].
struct SpectrumImage {
    Tensor grid;  // (H, W)
};

SpectrumImage spectrum_image(const Tensor& image);

namespace loss_expr {

/// Focal frequency loss: per channel (1/MN) * sum_uv w(u,v) |F_r - F_f|^2
/// with w = |F_r - F_f|^alpha frozen at the evaluation point, averaged over
/// channels. Uses the library's unnormalized-forward DFT convention.
ad::Var ffl(const ad::Var& x, const ad::Var& xhat, double alpha);

}  // namespace loss_expr

LossValue ffl(const Tensor& x, const Tensor& xhat, double alpha);

/// Fraction of non-DC spectral energy in the Nyquist bands (u = M/2 or
/// v = N/2), pooled over channels. Even spatial dims required.
double checkerboard_score(const Tensor& image);

/// Fraction of non-DC spectral energy carried by bins whose magnitude
/// exceeds 8x the median non-DC magnitude (pooled over channels); 0 when
/// there is no non-DC energy.
double ripple_score(const Tensor& image);

}  // namespace inpaint
