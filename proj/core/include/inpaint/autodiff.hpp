#pragma once

#include "inpaint/conv.hpp"
#include "inpaint/tensor.hpp"

#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

namespace inpaint::ad {

struct Node;

/// Handle to a node of the differentiation tape. Values are computed eagerly;
/// backward() emits gradient computations as new tape nodes, so gradients are
/// themselves differentiable (needed for the gradient-penalty term, whose
/// parameter gradient differentiates through an input gradient).
class Var {
  public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    bool defined() const { return static_cast<bool>(node_); }
    const Tensor& val() const;
    Node* node() const { return node_.get(); }
    const std::shared_ptr<Node>& ptr() const { return node_; }
    bool requires_grad() const;

  private:
    std::shared_ptr<Node> node_;
};

struct Node {
    Tensor value;
    bool requires_grad = false;
    std::vector<Var> parents;
    // Given the upstream gradient and a per-parent "needed" mask, return one
    // gradient Var per parent (undefined where not needed).
    std::function<std::vector<Var>(const Var& g, const std::vector<bool>& need)> vjp;
    const char* op = "leaf";
};

Var leaf(Tensor value, bool requires_grad = true);
Var constant(Tensor value);

// elementwise
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var neg(const Var& a);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var mul_const(const Var& a, const Tensor& c);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var sigmoid(const Var& a);
Var softplus(const Var& a);
Var abs_val(const Var& a);
Var pow_elem(const Var& a, double p);
Var rsqrt_eps(const Var& a, double eps);

// reductions / broadcasts
Var sum(const Var& a);
Var mean(const Var& a);
Var expand_scalar(const Var& s, std::vector<int> shape);
Var sum_hw(const Var& a);                      // (C,H,W) -> (C)
Var expand_hw(const Var& a, int h, int w);     // (C) -> (C,H,W)

// structure
Var slice_channels(const Var& a, int c0, int c1);
Var embed_channels(const Var& a, int c0, int total);
Var concat_channels(const Var& a, const Var& b);

// convolution (cross-correlation) and its adjoints; the three ops are closed
// under differentiation
Var conv2d(const Var& x, const Var& w, const ConvGeom& g);
Var conv2d_bwd_input(const Var& gout, const Var& w, const ConvGeom& g, int in_h, int in_w);
Var conv2d_bwd_weight(const Var& x, const Var& gout, const ConvGeom& g, int kh, int kw);

// spectral pair: per-channel unnormalized DFT with re/im stacked as channels,
// and the real part of the normalized inverse; mutual adjoints up to M*N
Var fft2_stack(const Var& x);        // (C,H,W) -> (2C,H,W)
Var ifft2_unstack(const Var& y);     // (2C,H,W) -> (C,H,W)

// forward spatial differences (same shape, trailing column/row zero) and
// their exact adjoints
Var diff_h(const Var& a);
Var diff_h_adj(const Var& a);
Var diff_v(const Var& a);
Var diff_v_adj(const Var& a);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }

/// Gradients of a scalar root with respect to every reachable node that
/// requires grad. Gradients are Vars: differentiable again.
class GradMap {
  public:
    bool contains(const Var& x) const { return grads_.count(x.node()) != 0; }
    /// gradient as a Var (undefined if x was not reached)
    Var var(const Var& x) const;
    /// gradient as a tensor (zeros_like(x) if not reached)
    Tensor tensor(const Var& x) const;

    std::unordered_map<const Node*, Var> grads_;
};

GradMap backward(const Var& root);

}  // namespace inpaint::ad
