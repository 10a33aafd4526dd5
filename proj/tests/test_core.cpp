#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "inpaint/conv.hpp"
#include "inpaint/fft.hpp"
#include "inpaint/gradcheck.hpp"
#include "inpaint/rng.hpp"
#include "inpaint/tensor.hpp"

#include <cmath>
#include <numbers>

using namespace inpaint;

namespace {

// O(M^2 N^2) reference DFT, independent of the fft path under test
ComplexGrid brute_force_dft(const Tensor& grid) {
    const int m = grid.dim(0), n = grid.dim(1);
    ComplexGrid out(m, n);
    for (int u = 0; u < m; ++u)
        for (int v = 0; v < n; ++v) {
            double re = 0.0, im = 0.0;
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < n; ++b) {
                    const double ang = -2.0 * std::numbers::pi *
                                       (static_cast<double>(u) * a / m + static_cast<double>(v) * b / n);
                    const double x = grid[static_cast<std::size_t>(a) * n + b];
                    re += x * std::cos(ang);
                    im += x * std::sin(ang);
                }
            out.re[out.idx(u, v)] = re;
            out.im[out.idx(u, v)] = im;
        }
    return out;
}

Tensor random_grid(int m, int n, Rng& rng) {
    Tensor t({m, n});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
    return t;
}

// naive six-nested-loop convolution oracle
Tensor naive_conv(const Tensor& x, const Tensor& w, const ConvGeom& g) {
    const int c = x.dim(0), h = x.dim(1), ww = x.dim(2);
    const int o = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int oh = (h + 2 * g.pad - ((kh - 1) * g.dilation + 1)) / g.stride + 1;
    const int ow = (ww + 2 * g.pad - ((kw - 1) * g.dilation + 1)) / g.stride + 1;
    Tensor out({o, oh, ow});
    for (int oc = 0; oc < o; ++oc)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (int ic = 0; ic < c; ++ic)
                    for (int ky = 0; ky < kh; ++ky)
                        for (int kx = 0; kx < kw; ++kx) {
                            const int iy = oy * g.stride + ky * g.dilation - g.pad;
                            const int ix = ox * g.stride + kx * g.dilation - g.pad;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= ww) continue;
                            acc += x.at3(ic, iy, ix) * w.at4(oc, ic, ky, kx);
                        }
                out.at3(oc, oy, ox) = acc;
            }
    return out;
}

}  // namespace

TEST_CASE("tensor shape and data invariants") {
    Tensor t({2, 3, 4});
    CHECK(t.size() == 24);
    CHECK_THROWS_AS(Tensor({2, 0, 4}), dim_error);
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), dim_error);
    Tensor f32 = Tensor({2}, {0.1, 0.2}, Dtype::f32);
    CHECK(f32[0] == doctest::Approx(0.1f).epsilon(1e-9));
    Tensor bad({2}, {1.0, std::nan("")});
    CHECK_FALSE(bad.all_finite());
    CHECK_THROWS_AS(bad.ensure_finite("test"), finite_error);
}

TEST_CASE("fft2 of a constant grid is DC-only") {
    for (const auto [m, n] : {std::pair{4, 4}, std::pair{8, 16}, std::pair{6, 10}}) {
        const double c = 0.37;
        ComplexGrid g = fft2(Tensor::full({m, n}, c));
        CHECK(g.re[0] == doctest::Approx(c * m * n).epsilon(1e-12));
        CHECK(std::abs(g.im[0]) < 1e-10);
        for (int u = 0; u < m; ++u)
            for (int v = 0; v < n; ++v) {
                if (u == 0 && v == 0) continue;
                CHECK(std::abs(g.re[g.idx(u, v)]) < 1e-10);
                CHECK(std::abs(g.im[g.idx(u, v)]) < 1e-10);
            }
    }
}

TEST_CASE("fft2 of a 1x1 grid is the identity") {
    ComplexGrid g = fft2(Tensor({1, 1}, {0.625}));
    CHECK(g.re[0] == doctest::Approx(0.625));
    CHECK(g.im[0] == doctest::Approx(0.0));
}

TEST_CASE("fft2 matches the brute-force DFT") {
    Rng rng(11);
    for (const auto [m, n] : {std::pair{4, 4}, std::pair{8, 8}, std::pair{6, 12}, std::pair{5, 7}}) {
        const Tensor x = random_grid(m, n, rng);
        const ComplexGrid fast = fft2(x);
        const ComplexGrid slow = brute_force_dft(x);
        for (std::size_t i = 0; i < fast.size(); ++i) {
            CHECK(fast.re[i] == doctest::Approx(slow.re[i]).epsilon(0).scale(1).epsilon(1e-10));
            CHECK(std::abs(fast.re[i] - slow.re[i]) < 1e-10);
            CHECK(std::abs(fast.im[i] - slow.im[i]) < 1e-10);
        }
    }
}

TEST_CASE("fft2 rejects empty grids") {
    CHECK_THROWS_AS(fft2(Tensor({2, 3, 4})), dim_error);  // wrong rank
    CHECK_THROWS_AS(ComplexGrid(0, 4), dim_error);
}

TEST_CASE("conjugate symmetry holds for real input") {
    Rng rng(12);
    const Tensor x = random_grid(8, 8, rng);
    CHECK(fft2(x).conjugate_symmetry_residue() < 1e-10);
}

TEST_CASE("ifft2 round trip") {
    Rng rng(13);
    const Tensor x = random_grid(8, 8, rng);
    const Tensor back = ifft2(fft2(x));
    CHECK(max_abs_diff(x, back) < 1e-10);
}

TEST_CASE("ifft2 of all-zero grid is zero") {
    const Tensor out = ifft2(ComplexGrid(4, 6));
    CHECK(out.abs_max() == 0.0);
}

TEST_CASE("ifft2 inverts a pure DC bin to a constant grid") {
    ComplexGrid g(4, 4);
    g.re[0] = 16.0;  // M*N
    const Tensor out = ifft2(g);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ifft2 rejects non-symmetric input") {
    ComplexGrid g(4, 4);
    g.im[g.idx(1, 1)] = 1.0;  // breaks conjugate symmetry
    CHECK_THROWS_AS(ifft2(g), symmetry_error);
}

TEST_CASE("Parseval identity up to 32x32") {
    Rng rng(14);
    for (const auto [m, n] : {std::pair{4, 4}, std::pair{16, 8}, std::pair{32, 32}, std::pair{12, 20}}) {
        const Tensor x = random_grid(m, n, rng);
        const ComplexGrid g = fft2(x);
        double spectral = 0.0, spatial = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) spectral += g.re[i] * g.re[i] + g.im[i] * g.im[i];
        for (std::size_t i = 0; i < x.size(); ++i) spatial += x[i] * x[i];
        CHECK(spectral == doctest::Approx(m * n * spatial).epsilon(1e-9));
    }
}

TEST_CASE("fft2 linearity") {
    Rng rng(15);
    const Tensor x = random_grid(8, 8, rng);
    const Tensor y = random_grid(8, 8, rng);
    const double a = 1.7, b = -0.4;
    Tensor mix({8, 8});
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + b * y[i];
    const ComplexGrid gm = fft2(mix);
    const ComplexGrid gx = fft2(x);
    const ComplexGrid gy = fft2(y);
    for (std::size_t i = 0; i < gm.size(); ++i) {
        CHECK(std::abs(gm.re[i] - (a * gx.re[i] + b * gy.re[i])) < 1e-10);
        CHECK(std::abs(gm.im[i] - (a * gx.im[i] + b * gy.im[i])) < 1e-10);
    }
}

TEST_CASE("conv2d identity kernel") {
    Rng rng(16);
    Tensor x({1, 4, 4});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform();
    const Tensor w({1, 1, 1, 1}, {1.0});
    const Tensor out = conv2d(x, w, ConvGeom{1, 1, 0});
    CHECK(max_abs_diff(out, x) == 0.0);
}

TEST_CASE("conv2d box kernel sums the 3x3 neighborhood") {
    const Tensor x = Tensor::full({1, 5, 5}, 1.0);
    const Tensor w = Tensor::full({1, 1, 3, 3}, 1.0);
    const Tensor out = conv2d(x, w, ConvGeom{1, 1, 1});
    CHECK(out.at3(0, 2, 2) == doctest::Approx(9.0));
    CHECK(out.at3(0, 0, 0) == doctest::Approx(4.0));  // corner under zero padding
}

TEST_CASE("conv2d matches the naive oracle") {
    Rng rng(17);
    Tensor x({1, 4, 4});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1.0, 1.0);
    Tensor w({2, 1, 3, 3});
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1.0, 1.0);
    const ConvGeom g{1, 1, 1};
    CHECK(max_abs_diff(conv2d(x, w, g), naive_conv(x, w, g)) < 1e-12);
}

TEST_CASE("conv2d equals the oracle across shapes, strides, dilations") {
    Rng rng(18);
    for (int h = 3; h <= 8; h += 2) {
        for (int w_dim = 3; w_dim <= 8; w_dim += 2) {
            for (int k = 1; k <= 3; ++k) {
                for (const ConvGeom g : {ConvGeom{1, 1, 0}, ConvGeom{1, 1, 1}, ConvGeom{2, 1, 1},
                                         ConvGeom{1, 2, 2}}) {
                    const int eff = (k - 1) * g.dilation + 1;
                    if (eff > h + 2 * g.pad || eff > w_dim + 2 * g.pad) continue;
                    Tensor x({2, h, w_dim});
                    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1.0, 1.0);
                    Tensor kw({3, 2, k, k});
                    for (std::size_t i = 0; i < kw.size(); ++i) kw[i] = rng.uniform(-1.0, 1.0);
                    CHECK(max_abs_diff(conv2d(x, kw, g), naive_conv(x, kw, g)) < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("conv2d rejects kernels larger than the padded input") {
    const Tensor x({1, 2, 2});
    const Tensor w({1, 1, 3, 3});
    CHECK_THROWS_AS(conv2d(x, w, ConvGeom{1, 1, 0}), dim_error);
}

TEST_CASE("conv2d adjoints satisfy the inner-product identity") {
    Rng rng(19);
    const ConvGeom g{2, 1, 1};
    Tensor x({2, 6, 6});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1.0, 1.0);
    Tensor w({3, 2, 3, 3});
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1.0, 1.0);
    const Tensor y = conv2d(x, w, g);
    Tensor gy(y.shape());
    for (std::size_t i = 0; i < gy.size(); ++i) gy[i] = rng.uniform(-1.0, 1.0);

    // <gy, conv(x,w)> == <conv_bwd_input(gy,w), x> == <conv_bwd_weight(x,gy), w>
    double lhs = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) lhs += gy[i] * y[i];
    const Tensor gx = conv2d_bwd_input(gy, w, g, 6, 6);
    double rhs_x = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) rhs_x += gx[i] * x[i];
    const Tensor gw = conv2d_bwd_weight(x, gy, g, 3, 3);
    double rhs_w = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) rhs_w += gw[i] * w[i];
    CHECK(lhs == doctest::Approx(rhs_x).epsilon(1e-12));
    CHECK(lhs == doctest::Approx(rhs_w).epsilon(1e-12));
}

TEST_CASE("grad_check accepts the exact quadratic gradient") {
    Rng rng(20);
    Tensor x({6});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-2.0, 2.0);
    auto f = [](const Tensor& t) {
        double s = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * t[i];
        return s;
    };
    Tensor grad(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) grad[i] = 2.0 * x[i];
    const GradReport rep = grad_check(f, x, grad, 1e-5, 1e-7);
    CHECK(rep.passed);
    CHECK(rep.max_rel_err <= 1e-7);
}

TEST_CASE("grad_check passes for |x| away from the kink") {
    Tensor x({4}, {0.5, -0.7, 1.2, -0.3});
    auto f = [](const Tensor& t) {
        double s = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) s += std::abs(t[i]);
        return s;
    };
    Tensor grad({4});
    for (std::size_t i = 0; i < x.size(); ++i) grad[i] = x[i] > 0 ? 1.0 : -1.0;
    CHECK(grad_check(f, x, grad, 1e-5, 1e-6).passed);
}

TEST_CASE("grad_check reports non-finite probes") {
    Tensor x({1}, {0.0});
    auto f = [](const Tensor& t) { return 1.0 / t[0]; };
    CHECK_THROWS_AS(grad_check(f, x, Tensor({1}, {1.0}), 1e-5, 1e-6), finite_error);
}

TEST_CASE("rng streams are deterministic and fork-independent") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng base(7);
    CHECK(base.fork(1, 2, 3).next_u64() == base.fork(1, 2, 3).next_u64());
    CHECK(base.fork(1, 2, 3).next_u64() != base.fork(1, 2, 4).next_u64());
}
