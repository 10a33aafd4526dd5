#include "inpaint/conv.hpp"

#include <cstring>
#include <string>
#include <vector>

namespace inpaint {

namespace {

// C[M x N] = A[M x K] * B[K x N]. Each output row is produced by exactly one
// thread with a fixed accumulation order, so results do not depend on the
// thread count.
void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n) {
    std::memset(c, 0, sizeof(double) * static_cast<std::size_t>(m) * n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[M x N] = A[M x K] * B[N x K]^T
void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* brow = b + static_cast<std::size_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] = acc;
        }
    }
}

// C[K x N] = A[M x K]^T * B[M x N]
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n) {
    std::memset(c, 0, sizeof(double) * static_cast<std::size_t>(k) * n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < k; ++i) {
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < m; ++p) {
            const double av = a[static_cast<std::size_t>(p) * k + i];
            if (av == 0.0) continue;
            const double* brow = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

struct ConvDims {
    int c, h, w, o, kh, kw, oh, ow;
};

ConvDims check_dims(const std::vector<int>& xs, const std::vector<int>& ws, const ConvGeom& g) {
    if (xs.size() != 3) throw dim_error("conv2d input must be C x H x W, got " + shape_str(xs));
    if (ws.size() != 4) throw dim_error("conv2d kernel must be O x C x Kh x Kw, got " + shape_str(ws));
    if (ws[1] != xs[0])
        throw dim_error("conv2d channel mismatch: input C=" + std::to_string(xs[0]) +
                        " kernel C=" + std::to_string(ws[1]));
    ConvDims d;
    d.c = xs[0];
    d.h = xs[1];
    d.w = xs[2];
    d.o = ws[0];
    d.kh = ws[2];
    d.kw = ws[3];
    d.oh = conv_out_dim(d.h, d.kh, g);
    d.ow = conv_out_dim(d.w, d.kw, g);
    return d;
}

// col[(c*Kh+kh)*Kw+kw][oy*OW+ox] = x(c, oy*s + kh*dil - pad, ox*s + kw*dil - pad)
void im2col(const Tensor& x, const ConvDims& d, const ConvGeom& g, std::vector<double>& col) {
    const int patch = d.c * d.kh * d.kw;
    const int cols = d.oh * d.ow;
    col.assign(static_cast<std::size_t>(patch) * cols, 0.0);
    for (int c = 0; c < d.c; ++c) {
        for (int ky = 0; ky < d.kh; ++ky) {
            for (int kx = 0; kx < d.kw; ++kx) {
                double* row = col.data() + (static_cast<std::size_t>(c) * d.kh * d.kw + static_cast<std::size_t>(ky) * d.kw + kx) * cols;
                for (int oy = 0; oy < d.oh; ++oy) {
                    const int iy = oy * g.stride + ky * g.dilation - g.pad;
                    if (iy < 0 || iy >= d.h) continue;
                    for (int ox = 0; ox < d.ow; ++ox) {
                        const int ix = ox * g.stride + kx * g.dilation - g.pad;
                        if (ix < 0 || ix >= d.w) continue;
                        row[oy * d.ow + ox] = x.at3(c, iy, ix);
                    }
                }
            }
        }
    }
}

void col2im(const std::vector<double>& col, const ConvDims& d, const ConvGeom& g, Tensor& x) {
    const int cols = d.oh * d.ow;
#pragma omp parallel for schedule(static)
    for (int c = 0; c < d.c; ++c) {
        for (int ky = 0; ky < d.kh; ++ky) {
            for (int kx = 0; kx < d.kw; ++kx) {
                const double* row = col.data() + (static_cast<std::size_t>(c) * d.kh * d.kw + static_cast<std::size_t>(ky) * d.kw + kx) * cols;
                for (int oy = 0; oy < d.oh; ++oy) {
                    const int iy = oy * g.stride + ky * g.dilation - g.pad;
                    if (iy < 0 || iy >= d.h) continue;
                    for (int ox = 0; ox < d.ow; ++ox) {
                        const int ix = ox * g.stride + kx * g.dilation - g.pad;
                        if (ix < 0 || ix >= d.w) continue;
                        x.at3(c, iy, ix) += row[oy * d.ow + ox];
                    }
                }
            }
        }
    }
}

}  // namespace

int conv_out_dim(int in, int k, const ConvGeom& g) {
    if (g.stride < 1 || g.dilation < 1 || g.pad < 0) throw dim_error("conv2d: invalid geometry");
    const int eff = (k - 1) * g.dilation + 1;
    const int padded = in + 2 * g.pad;
    if (eff > padded)
        throw dim_error("conv2d: dilated kernel " + std::to_string(eff) + " larger than padded input " +
                        std::to_string(padded));
    return (padded - eff) / g.stride + 1;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const ConvGeom& g) {
    const ConvDims d = check_dims(x.shape(), w.shape(), g);
    std::vector<double> col;
    im2col(x, d, g, col);
    Tensor out({d.o, d.oh, d.ow});
    gemm_nn(w.data(), col.data(), out.data(), d.o, d.c * d.kh * d.kw, d.oh * d.ow);
    return out;
}

Tensor conv2d_bwd_input(const Tensor& gout, const Tensor& w, const ConvGeom& g, int in_h, int in_w) {
    if (gout.rank() != 3) throw dim_error("conv2d_bwd_input: gout must be rank 3");
    if (w.rank() != 4) throw dim_error("conv2d_bwd_input: kernel must be rank 4");
    const ConvDims d = check_dims({w.dim(1), in_h, in_w}, w.shape(), g);
    if (gout.dim(0) != d.o || gout.dim(1) != d.oh || gout.dim(2) != d.ow)
        throw dim_error("conv2d_bwd_input: gout shape " + shape_str(gout.shape()) + " does not match expected [" +
                        std::to_string(d.o) + "," + std::to_string(d.oh) + "," + std::to_string(d.ow) + "]");
    std::vector<double> colg(static_cast<std::size_t>(d.c) * d.kh * d.kw * d.oh * d.ow);
    gemm_tn(w.data(), gout.data(), colg.data(), d.o, d.c * d.kh * d.kw, d.oh * d.ow);
    Tensor gx({d.c, in_h, in_w});
    col2im(colg, d, g, gx);
    return gx;
}

Tensor conv2d_bwd_weight(const Tensor& x, const Tensor& gout, const ConvGeom& g, int kh, int kw) {
    if (gout.rank() != 3) throw dim_error("conv2d_bwd_weight: gout must be rank 3");
    const ConvDims d = check_dims(x.shape(), {gout.dim(0), x.dim(0), kh, kw}, g);
    if (gout.dim(1) != d.oh || gout.dim(2) != d.ow)
        throw dim_error("conv2d_bwd_weight: gout spatial dims do not match conv output");
    std::vector<double> col;
    im2col(x, d, g, col);
    Tensor gw({d.o, d.c, kh, kw});
    gemm_nt(gout.data(), col.data(), gw.data(), d.o, d.oh * d.ow, d.c * d.kh * d.kw);
    return gw;
}

}  // namespace inpaint
