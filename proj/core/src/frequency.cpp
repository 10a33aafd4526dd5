#include "inpaint/frequency.hpp"

#include <algorithm>
#include <cmath>

namespace inpaint {

FocalWeightGrid focal_weight(const ComplexGrid& fr, const ComplexGrid& ff, double alpha) {
    if (fr.m != ff.m || fr.n != ff.n) throw dim_error("focal_weight: grid dims differ");
    FocalWeightGrid out;
    out.m = fr.m;
    out.n = fr.n;
    out.w = Tensor({fr.m, fr.n});
    for (std::size_t i = 0; i < fr.size(); ++i) {
        const double dr = fr.re[i] - ff.re[i];
        const double di = fr.im[i] - ff.im[i];
        const double mag2 = dr * dr + di * di;
        out.w[i] = alpha == 2.0 ? mag2 : std::pow(mag2, alpha * 0.5);
    }
    return out;
}

namespace loss_expr {

ad::Var ffl(const ad::Var& x, const ad::Var& xhat, double alpha) {
    if (!x.val().same_shape(xhat.val()))
        throw dim_error("ffl: shapes differ: " + shape_str(x.val().shape()) + " vs " +
                        shape_str(xhat.val().shape()));
    if (x.val().rank() != 3) throw dim_error("ffl: images must be (C,H,W)");
    const int c = x.val().dim(0), h = x.val().dim(1), w = x.val().dim(2);

    ad::Var diff = ad::sub(x, xhat);
    ad::Var spec = ad::fft2_stack(diff);  // (2C,H,W): re planes then im planes

    // focal weights from the current residual, stop-gradient by construction
    const Tensor& sv = spec.val();
    Tensor wgrid({2 * c, h, w});
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int ci = 0; ci < c; ++ci) {
        for (std::size_t i = 0; i < plane; ++i) {
            const double re = sv[ci * plane + i];
            const double im = sv[(static_cast<std::size_t>(c) + ci) * plane + i];
            const double mag2 = re * re + im * im;
            const double wv = alpha == 2.0 ? mag2 : std::pow(mag2, alpha * 0.5);
            wgrid[ci * plane + i] = wv;
            wgrid[(static_cast<std::size_t>(c) + ci) * plane + i] = wv;
        }
    }

    ad::Var weighted = ad::mul_const(ad::mul(spec, spec), wgrid);
    const double norm = 1.0 / (static_cast<double>(h) * w * c);
    return ad::scale(ad::sum(weighted), norm);
}

}  // namespace loss_expr

LossValue ffl(const Tensor& x, const Tensor& xhat, double alpha) {
    ad::Var xv = ad::constant(x);
    ad::Var xh = ad::leaf(xhat);
    ad::Var v = loss_expr::ffl(xv, xh, alpha);
    v.val().ensure_finite("ffl");
    LossValue lv;
    lv.value = v.val()[0];
    ad::GradMap gm = ad::backward(v);
    lv.grads["xhat"] = gm.tensor(xh);
    return lv;
}

namespace {

// per-channel |F|^2 grids of a (C,H,W) image
std::vector<ComplexGrid> channel_spectra(const Tensor& image) {
    if (image.rank() != 3) throw dim_error("spectrum: image must be (C,H,W)");
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::vector<ComplexGrid> out;
    for (int ci = 0; ci < c; ++ci) {
        Tensor chan({h, w});
        std::copy(image.data() + ci * plane, image.data() + (ci + 1) * plane, chan.data());
        out.push_back(fft2(chan));
    }
    return out;
}

}  // namespace

SpectrumImage spectrum_image(const Tensor& image) {
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    std::vector<ComplexGrid> spectra = channel_spectra(image);
    Tensor acc({h, w});
    for (const ComplexGrid& g : spectra)
        for (int u = 0; u < h; ++u)
            for (int v = 0; v < w; ++v)
                acc[static_cast<std::size_t>(u) * w + v] += std::log1p(std::sqrt(g.abs2(u, v)));
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] /= c;

    // shift DC to the center
    Tensor shifted({h, w});
    const int cy = h / 2, cx = w / 2;
    for (int u = 0; u < h; ++u)
        for (int v = 0; v < w; ++v)
            shifted[static_cast<std::size_t>((u + cy) % h) * w + (v + cx) % w] =
                acc[static_cast<std::size_t>(u) * w + v];

    double peak = 0.0;
    for (std::size_t i = 0; i < shifted.size(); ++i) peak = std::max(peak, shifted[i]);
    if (peak > 0.0)
        for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] /= peak;
    return SpectrumImage{std::move(shifted)};
}

double checkerboard_score(const Tensor& image) {
    const int h = image.dim(1), w = image.dim(2);
    if (h % 2 != 0 || w % 2 != 0) throw dim_error("checkerboard_score: spatial dims must be even");
    std::vector<ComplexGrid> spectra = channel_spectra(image);
    double nyquist = 0.0, total = 0.0;
    for (const ComplexGrid& g : spectra) {
        for (int u = 0; u < h; ++u)
            for (int v = 0; v < w; ++v) {
                if (u == 0 && v == 0) continue;
                const double e = g.abs2(u, v);
                total += e;
                if (u == h / 2 || v == w / 2) nyquist += e;
            }
    }
    return total > 0.0 ? nyquist / total : 0.0;
}

double ripple_score(const Tensor& image) {
    const int h = image.dim(1), w = image.dim(2);
    std::vector<ComplexGrid> spectra = channel_spectra(image);
    std::vector<double> mags;
    mags.reserve(spectra.size() * (static_cast<std::size_t>(h) * w - 1));
    double total = 0.0;
    for (const ComplexGrid& g : spectra)
        for (int u = 0; u < h; ++u)
            for (int v = 0; v < w; ++v) {
                if (u == 0 && v == 0) continue;
                const double e = g.abs2(u, v);
                mags.push_back(std::sqrt(e));
                total += e;
            }
    if (total <= 0.0 || mags.empty()) return 0.0;

    std::vector<double> sorted = mags;
    const std::size_t mid = sorted.size() / 2;
    std::nth_element(sorted.begin(), sorted.begin() + mid, sorted.end());
    double median = sorted[mid];
    if (sorted.size() % 2 == 0) {
        const double lower = *std::max_element(sorted.begin(), sorted.begin() + mid);
        median = 0.5 * (median + lower);
    }

    const double threshold = 8.0 * median;
    double peak_energy = 0.0;
    for (double m : mags)
        if (m > threshold) peak_energy += m * m;
    return peak_energy / total;
}

}  // namespace inpaint
