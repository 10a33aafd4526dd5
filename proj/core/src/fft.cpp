#include "inpaint/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace inpaint {

namespace {

// In-place iterative radix-2 Cooley-Tukey over interleaved re/im arrays.
// sign = -1 forward, +1 inverse (no normalization applied here).
void fft1d_radix2(double* re, double* im, int n, int stride, int sign) {
    // bit reversal permutation
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i * stride], re[j * stride]);
            std::swap(im[i * stride], im[j * stride]);
        }
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * std::numbers::pi / len;
        const double wr = std::cos(ang), wi = std::sin(ang);
        for (int i = 0; i < n; i += len) {
            double cr = 1.0, ci = 0.0;
            for (int k = 0; k < len / 2; ++k) {
                const int a = (i + k) * stride;
                const int b = (i + k + len / 2) * stride;
                const double tr = re[b] * cr - im[b] * ci;
                const double ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                const double ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
        }
    }
}

// Direct O(n^2) DFT for non-power-of-two lengths.
void dft1d_direct(const double* in_re, const double* in_im, double* out_re, double* out_im, int n,
                  int stride, int sign) {
    for (int u = 0; u < n; ++u) {
        double sr = 0.0, si = 0.0;
        for (int a = 0; a < n; ++a) {
            const double ang = sign * 2.0 * std::numbers::pi * u * a / n;
            const double cr = std::cos(ang), ci = std::sin(ang);
            const double xr = in_re[a * stride], xi = in_im[a * stride];
            sr += xr * cr - xi * ci;
            si += xr * ci + xi * cr;
        }
        out_re[u * stride] = sr;
        out_im[u * stride] = si;
    }
}

void fft1d(double* re, double* im, int n, int stride, int sign) {
    if (is_power_of_two(n)) {
        fft1d_radix2(re, im, n, stride, sign);
        return;
    }
    std::vector<double> tr(n), ti(n), sr(n), si(n);
    for (int a = 0; a < n; ++a) {
        sr[a] = re[a * stride];
        si[a] = im[a * stride];
    }
    dft1d_direct(sr.data(), si.data(), tr.data(), ti.data(), n, 1, sign);
    for (int a = 0; a < n; ++a) {
        re[a * stride] = tr[a];
        im[a * stride] = ti[a];
    }
}

// Row-column 2D transform over separate re/im planes, in place.
void fft2d(std::vector<double>& re, std::vector<double>& im, int m, int n, int sign) {
    for (int r = 0; r < m; ++r) fft1d(re.data() + static_cast<std::size_t>(r) * n, im.data() + static_cast<std::size_t>(r) * n, n, 1, sign);
    for (int c = 0; c < n; ++c) fft1d(re.data() + c, im.data() + c, m, n, sign);
}

}  // namespace

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

ComplexGrid::ComplexGrid(int m_, int n_)
    : m(m_), n(n_), re(static_cast<std::size_t>(m_) * n_, 0.0), im(static_cast<std::size_t>(m_) * n_, 0.0) {
    if (m_ < 1 || n_ < 1) throw dim_error("ComplexGrid dimensions must be >= 1");
}

double ComplexGrid::conjugate_symmetry_residue() const {
    double worst = 0.0;
    for (int u = 0; u < m; ++u) {
        for (int v = 0; v < n; ++v) {
            const std::size_t a = idx(u, v);
            const std::size_t b = idx((m - u) % m, (n - v) % n);
            worst = std::max(worst, std::abs(re[a] - re[b]));
            worst = std::max(worst, std::abs(im[a] + im[b]));
        }
    }
    return worst;
}

ComplexGrid fft2(const Tensor& grid) {
    if (grid.rank() != 2) throw dim_error("fft2 expects a rank-2 grid, got " + shape_str(grid.shape()));
    const int m = grid.dim(0), n = grid.dim(1);
    ComplexGrid g(m, n);
    g.re = grid.vec();
    fft2d(g.re, g.im, m, n, -1);
    return g;
}

ComplexGrid fft2_complex(const std::vector<double>& re, const std::vector<double>& im, int m, int n) {
    if (re.size() != static_cast<std::size_t>(m) * n || im.size() != re.size())
        throw dim_error("fft2_complex: plane size mismatch");
    ComplexGrid g(m, n);
    g.re = re;
    g.im = im;
    fft2d(g.re, g.im, m, n, -1);
    return g;
}

void ifft2_complex(const ComplexGrid& g, std::vector<double>& out_re, std::vector<double>& out_im) {
    out_re = g.re;
    out_im = g.im;
    fft2d(out_re, out_im, g.m, g.n, +1);
    const double scale = 1.0 / (static_cast<double>(g.m) * g.n);
    for (double& v : out_re) v *= scale;
    for (double& v : out_im) v *= scale;
}

Tensor ifft2(const ComplexGrid& g, double imag_tol) {
    std::vector<double> re, im;
    ifft2_complex(g, re, im);
    double max_im = 0.0, max_re = 0.0;
    for (double v : im) max_im = std::max(max_im, std::abs(v));
    for (double v : re) max_re = std::max(max_re, std::abs(v));
    if (max_im > imag_tol * std::max(1.0, max_re)) {
        throw symmetry_error("ifft2: input not conjugate-symmetric (imaginary residue " +
                             std::to_string(max_im) + " exceeds tolerance)");
    }
    return Tensor({g.m, g.n}, std::move(re));
}

}  // namespace inpaint
