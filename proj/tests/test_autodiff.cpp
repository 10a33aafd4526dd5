#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "inpaint/autodiff.hpp"
#include "inpaint/gradcheck.hpp"
#include "inpaint/rng.hpp"

#include <cmath>

using namespace inpaint;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// finite-difference check of an arbitrary tape expression in one leaf
GradReport fd_check(const std::function<ad::Var(const ad::Var&)>& build, const Tensor& point,
                    double step = 1e-6, double tol = 1e-6) {
    ad::Var leaf = ad::leaf(point);
    ad::Var out = build(leaf);
    ad::GradMap gm = ad::backward(out);
    auto f = [&](const Tensor& p) { return build(ad::leaf(p, false)).val()[0]; };
    return grad_check(f, point, gm.tensor(leaf), step, tol);
}

}  // namespace

TEST_CASE("elementwise ops and reductions differentiate correctly") {
    Rng rng(1);
    const Tensor x = random_tensor({2, 4, 4}, rng);

    CHECK(fd_check([](const ad::Var& v) { return ad::sum(ad::mul(v, v)); }, x).passed);
    CHECK(fd_check([](const ad::Var& v) { return ad::mean(ad::mul(ad::scale(v, 3.0), v)); }, x).passed);
    CHECK(fd_check([](const ad::Var& v) { return ad::sum(ad::sigmoid(v)); }, x).passed);
    CHECK(fd_check([](const ad::Var& v) { return ad::sum(ad::softplus(v)); }, x).passed);
    CHECK(fd_check([](const ad::Var& v) { return ad::sum(ad::rsqrt_eps(ad::mul(v, v), 0.5)); }, x).passed);
    const Tensor pos = random_tensor({2, 3, 3}, rng, 0.5, 2.0);
    CHECK(fd_check([](const ad::Var& v) { return ad::sum(ad::pow_elem(v, 1.5)); }, pos).passed);
}

TEST_CASE("piecewise-linear ops differentiate away from their kinks") {
    Tensor x({6}, {0.8, -0.6, 1.4, -1.1, 0.3, -0.2});
    CHECK(fd_check([](const ad::Var& v) { return ad::sum(ad::relu(v)); }, x, 1e-6, 1e-6).passed);
    CHECK(fd_check([](const ad::Var& v) { return ad::sum(ad::leaky_relu(v, 0.2)); }, x).passed);
    CHECK(fd_check([](const ad::Var& v) { return ad::sum(ad::abs_val(v)); }, x).passed);
}

TEST_CASE("broadcast and structure ops are exact adjoint pairs") {
    Rng rng(2);
    const Tensor x = random_tensor({3, 4, 4}, rng);
    CHECK(fd_check([](const ad::Var& v) { return ad::sum(ad::mul(ad::sum_hw(v), ad::sum_hw(v))); }, x)
              .passed);
    const Tensor c = random_tensor({3}, rng);
    CHECK(fd_check([](const ad::Var& v) {
              ad::Var e = ad::expand_hw(v, 5, 5);
              return ad::sum(ad::mul(e, e));
          },
                   c)
              .passed);
    CHECK(fd_check([](const ad::Var& v) {
              ad::Var a = ad::slice_channels(v, 0, 2);
              ad::Var b = ad::slice_channels(v, 2, 3);
              return ad::sum(ad::mul(ad::concat_channels(b, a), ad::concat_channels(b, a)));
          },
                   x)
              .passed);
}

TEST_CASE("conv ops differentiate in both inputs") {
    Rng rng(3);
    const Tensor x = random_tensor({2, 6, 6}, rng);
    const Tensor w = random_tensor({3, 2, 3, 3}, rng);
    const ConvGeom g{2, 1, 1};

    CHECK(fd_check([&](const ad::Var& v) {
              ad::Var y = ad::conv2d(v, ad::constant(w), g);
              return ad::sum(ad::mul(y, y));
          },
                   x)
              .passed);
    CHECK(fd_check([&](const ad::Var& v) {
              ad::Var y = ad::conv2d(ad::constant(x), v, g);
              return ad::sum(ad::mul(y, y));
          },
                   w)
              .passed);
    const Tensor gout = random_tensor({3, 3, 3}, rng);
    CHECK(fd_check([&](const ad::Var& v) {
              ad::Var y = ad::conv2d_bwd_input(ad::constant(gout), v, g, 6, 6);
              return ad::sum(ad::mul(y, y));
          },
                   w)
              .passed);
    CHECK(fd_check([&](const ad::Var& v) {
              ad::Var y = ad::conv2d_bwd_weight(v, ad::constant(gout), g, 3, 3);
              return ad::sum(ad::mul(y, y));
          },
                   x)
              .passed);
}

TEST_CASE("spectral pair: value identity and gradients") {
    Rng rng(4);
    const Tensor x = random_tensor({2, 8, 8}, rng);
    // ifft(fft(x)) == x through the stacked representation
    ad::Var v = ad::constant(x);
    ad::Var round = ad::ifft2_unstack(ad::fft2_stack(v));
    CHECK(max_abs_diff(round.val(), x) < 1e-12);

    CHECK(fd_check([](const ad::Var& t) {
              ad::Var s = ad::fft2_stack(t);
              return ad::sum(ad::mul(s, s));
          },
                   x)
              .passed);
    const Tensor packed = random_tensor({4, 4, 4}, rng);
    CHECK(fd_check([](const ad::Var& t) {
              ad::Var s = ad::ifft2_unstack(t);
              return ad::sum(ad::mul(s, s));
          },
                   packed)
              .passed);
}

TEST_CASE("difference ops and their adjoints") {
    Rng rng(5);
    const Tensor x = random_tensor({2, 5, 6}, rng);
    CHECK(fd_check([](const ad::Var& v) {
              ad::Var d = ad::diff_h(v);
              return ad::sum(ad::mul(d, d));
          },
                   x)
              .passed);
    CHECK(fd_check([](const ad::Var& v) {
              ad::Var d = ad::diff_v(v);
              return ad::sum(ad::mul(d, d));
          },
                   x)
              .passed);

    // adjoint identity <g, D x> == <D^T g, x>
    const Tensor g = random_tensor({2, 5, 6}, rng);
    ad::Var xv = ad::constant(x);
    ad::Var gv = ad::constant(g);
    double lhs = 0.0, rhs = 0.0;
    const Tensor dx = ad::diff_h(xv).val();
    const Tensor dtg = ad::diff_h_adj(gv).val();
    for (std::size_t i = 0; i < dx.size(); ++i) {
        lhs += g[i] * dx[i];
        rhs += dtg[i] * x[i];
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("second-order: gradient of a gradient-norm matches finite differences") {
    // L(theta) = || d/dx sum(conv(x, theta)) ||^2 requires backward-of-backward
    Rng rng(6);
    const Tensor x = random_tensor({1, 5, 5}, rng);
    const Tensor w0 = random_tensor({2, 1, 3, 3}, rng);

    auto penalty = [&](const Tensor& wt) {
        ad::Var wv = ad::leaf(wt);
        ad::Var xv = ad::leaf(x);
        ad::Var y = ad::conv2d(xv, wv, ConvGeom{1, 1, 1});
        ad::Var act = ad::sigmoid(y);
        ad::GradMap gm = ad::backward(ad::sum(act));
        ad::Var gx = gm.var(xv);
        return std::make_pair(ad::sum(ad::mul(gx, gx)), wv);
    };
    auto [lp, wv] = penalty(w0);
    ad::GradMap outer = ad::backward(lp);
    const Tensor analytic = outer.tensor(wv);
    const GradReport rep = grad_check([&](const Tensor& wt) { return penalty(wt).first.val()[0]; }, w0,
                                      analytic, 1e-5, 1e-6);
    CHECK(rep.passed);
}

TEST_CASE("gradients accumulate across fan-out") {
    Rng rng(7);
    const Tensor x = random_tensor({3, 3}, rng);
    ad::Var v = ad::leaf(x);
    ad::Var y = ad::add(ad::mul(v, v), ad::scale(v, 2.0));  // x^2 + 2x
    ad::GradMap gm = ad::backward(ad::sum(y));
    const Tensor g = gm.tensor(v);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(g[i] == doctest::Approx(2.0 * x[i] + 2.0));
}

TEST_CASE("constants receive no gradient") {
    ad::Var c = ad::constant(Tensor::full({3}, 1.5));
    ad::Var v = ad::leaf(Tensor::full({3}, 2.0));
    ad::GradMap gm = ad::backward(ad::sum(ad::mul(c, v)));
    CHECK_FALSE(gm.contains(c));
    CHECK(gm.contains(v));
}
