#pragma once

#include "inpaint/tensor.hpp"

namespace inpaint {

struct ConvGeom {
    int stride = 1;
    int dilation = 1;
    int pad = 0;
};

/// Output length along one spatial axis; throws dim_error if the (dilated)
/// kernel does not fit in the padded input.
int conv_out_dim(int in, int k, const ConvGeom& g);

/// Cross-correlation with zero padding.
/// x: C x H x W, w: O x C x Kh x Kw  ->  O x H' x W'
Tensor conv2d(const Tensor& x, const Tensor& w, const ConvGeom& g);

/// Adjoint of conv2d in its input slot (transposed convolution).
/// gout: O x H' x W'  ->  C x in_h x in_w
Tensor conv2d_bwd_input(const Tensor& gout, const Tensor& w, const ConvGeom& g, int in_h, int in_w);

/// Adjoint of conv2d in its weight slot.
/// x: C x H x W, gout: O x H' x W'  ->  O x C x Kh x Kw
Tensor conv2d_bwd_weight(const Tensor& x, const Tensor& gout, const ConvGeom& g, int kh, int kw);

}  // namespace inpaint
