#include "inpaint/autodiff.hpp"

#include "inpaint/fft.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace inpaint::ad {

namespace {

Var make_node(Tensor value, std::vector<Var> parents,
              std::function<std::vector<Var>(const Var&, const std::vector<bool>&)> vjp,
              const char* op) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    n->vjp = std::move(vjp);
    n->op = op;
    for (const Var& p : n->parents)
        if (p.requires_grad()) n->requires_grad = true;
    return Var(std::move(n));
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a.val().same_shape(b.val()))
        throw dim_error(std::string(op) + ": shape mismatch " + shape_str(a.val().shape()) + " vs " +
                        shape_str(b.val().shape()));
}

Tensor map_unary(const Tensor& x, double (*f)(double)) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
    return out;
}

}  // namespace

const Tensor& Var::val() const { return node_->value; }
bool Var::requires_grad() const { return node_ && node_->requires_grad; }

Var leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    n->op = requires_grad ? "leaf" : "const";
    return Var(std::move(n));
}

Var constant(Tensor value) { return leaf(std::move(value), false); }

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tensor out(a.val().shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.val()[i] + b.val()[i];
    return make_node(std::move(out), {a, b},
                     [](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? g : Var(), need[1] ? g : Var()};
                     },
                     "add");
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tensor out(a.val().shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.val()[i] - b.val()[i];
    return make_node(std::move(out), {a, b},
                     [](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? g : Var(), need[1] ? neg(g) : Var()};
                     },
                     "sub");
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Tensor out(a.val().shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.val()[i] * b.val()[i];
    return make_node(std::move(out), {a, b},
                     [a, b](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? mul(g, b) : Var(), need[1] ? mul(g, a) : Var()};
                     },
                     "mul");
}

Var scale(const Var& a, double c) {
    Tensor out(a.val().shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.val()[i] * c;
    return make_node(std::move(out), {a},
                     [c](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? scale(g, c) : Var()};
                     },
                     "scale");
}

Var mul_const(const Var& a, const Tensor& c) {
    if (!a.val().same_shape(c)) throw dim_error("mul_const: shape mismatch");
    Tensor out(a.val().shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.val()[i] * c[i];
    return make_node(std::move(out), {a},
                     [c](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? mul_const(g, c) : Var()};
                     },
                     "mul_const");
}

Var relu(const Var& a) { return leaky_relu(a, 0.0); }

Var leaky_relu(const Var& a, double slope) {
    Tensor out(a.val().shape());
    Tensor mask(a.val().shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const bool pos = a.val()[i] > 0.0;
        mask[i] = pos ? 1.0 : slope;
        out[i] = a.val()[i] * mask[i];
    }
    return make_node(std::move(out), {a},
                     [mask](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? mul_const(g, mask) : Var()};
                     },
                     "leaky_relu");
}

Var sigmoid(const Var& a) {
    Tensor out(a.val().shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = a.val()[i];
        out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    return make_node(std::move(out), {a},
                     [a](const Var& g, const std::vector<bool>& need) {
                         if (!need[0]) return std::vector<Var>{Var()};
                         Var s = sigmoid(a);
                         Var one = constant(Tensor::full(a.val().shape(), 1.0));
                         return std::vector<Var>{mul(g, mul(s, sub(one, s)))};
                     },
                     "sigmoid");
}

Var softplus(const Var& a) {
    Tensor out(a.val().shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = a.val()[i];
        out[i] = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    }
    return make_node(std::move(out), {a},
                     [a](const Var& g, const std::vector<bool>& need) {
                         if (!need[0]) return std::vector<Var>{Var()};
                         return std::vector<Var>{mul(g, sigmoid(a))};
                     },
                     "softplus");
}

Var abs_val(const Var& a) {
    Tensor out(a.val().shape());
    Tensor sign(a.val().shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = a.val()[i];
        out[i] = std::abs(x);
        sign[i] = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    }
    return make_node(std::move(out), {a},
                     [sign](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? mul_const(g, sign) : Var()};
                     },
                     "abs");
}

Var pow_elem(const Var& a, double p) {
    if (p == 1.0) return a;
    Tensor out(a.val().shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::pow(a.val()[i], p);
    return make_node(std::move(out), {a},
                     [a, p](const Var& g, const std::vector<bool>& need) {
                         if (!need[0]) return std::vector<Var>{Var()};
                         return std::vector<Var>{scale(mul(g, pow_elem(a, p - 1.0)), p)};
                     },
                     "pow");
}

Var rsqrt_eps(const Var& a, double eps) {
    Tensor out(a.val().shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / std::sqrt(a.val()[i] + eps);
    return make_node(std::move(out), {a},
                     [a, eps](const Var& g, const std::vector<bool>& need) {
                         if (!need[0]) return std::vector<Var>{Var()};
                         Var y = rsqrt_eps(a, eps);
                         return std::vector<Var>{scale(mul(g, mul(mul(y, y), y)), -0.5)};
                     },
                     "rsqrt");
}

Var sum(const Var& a) {
    const std::vector<int> shape = a.val().shape();
    Tensor out = Tensor::scalar(a.val().sum());
    return make_node(std::move(out), {a},
                     [shape](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? expand_scalar(g, shape) : Var()};
                     },
                     "sum");
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.val().size())); }

Var expand_scalar(const Var& s, std::vector<int> shape) {
    if (s.val().size() != 1) throw dim_error("expand_scalar expects a scalar");
    Tensor out = Tensor::full(shape, s.val()[0]);
    return make_node(std::move(out), {s},
                     [](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? sum(g) : Var()};
                     },
                     "expand_scalar");
}

Var sum_hw(const Var& a) {
    if (a.val().rank() != 3) throw dim_error("sum_hw expects (C,H,W)");
    const int c = a.val().dim(0), h = a.val().dim(1), w = a.val().dim(2);
    Tensor out({c});
    for (int ci = 0; ci < c; ++ci) {
        double acc = 0.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) acc += a.val().at3(ci, y, x);
        out[ci] = acc;
    }
    return make_node(std::move(out), {a},
                     [h, w](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? expand_hw(g, h, w) : Var()};
                     },
                     "sum_hw");
}

Var expand_hw(const Var& a, int h, int w) {
    if (a.val().rank() != 1) throw dim_error("expand_hw expects (C)");
    const int c = a.val().dim(0);
    Tensor out({c, h, w});
    for (int ci = 0; ci < c; ++ci) {
        const double v = a.val()[ci];
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at3(ci, y, x) = v;
    }
    return make_node(std::move(out), {a},
                     [](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? sum_hw(g) : Var()};
                     },
                     "expand_hw");
}

Var slice_channels(const Var& a, int c0, int c1) {
    if (a.val().rank() != 3) throw dim_error("slice_channels expects (C,H,W)");
    const int c = a.val().dim(0), h = a.val().dim(1), w = a.val().dim(2);
    if (c0 < 0 || c1 > c || c0 >= c1) throw dim_error("slice_channels: bad channel range");
    Tensor out({c1 - c0, h, w});
    std::copy(a.val().data() + static_cast<std::size_t>(c0) * h * w,
              a.val().data() + static_cast<std::size_t>(c1) * h * w, out.data());
    return make_node(std::move(out), {a},
                     [c0, c](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? embed_channels(g, c0, c) : Var()};
                     },
                     "slice_ch");
}

Var embed_channels(const Var& a, int c0, int total) {
    if (a.val().rank() != 3) throw dim_error("embed_channels expects (C,H,W)");
    const int c = a.val().dim(0), h = a.val().dim(1), w = a.val().dim(2);
    if (c0 < 0 || c0 + c > total) throw dim_error("embed_channels: bad channel range");
    Tensor out({total, h, w});
    std::copy(a.val().data(), a.val().data() + a.val().size(),
              out.data() + static_cast<std::size_t>(c0) * h * w);
    return make_node(std::move(out), {a},
                     [c0, c](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? slice_channels(g, c0, c0 + c) : Var()};
                     },
                     "embed_ch");
}

Var concat_channels(const Var& a, const Var& b) {
    if (a.val().rank() != 3 || b.val().rank() != 3) throw dim_error("concat_channels expects (C,H,W)");
    if (a.val().dim(1) != b.val().dim(1) || a.val().dim(2) != b.val().dim(2))
        throw dim_error("concat_channels: spatial dims differ");
    const int ca = a.val().dim(0), cb = b.val().dim(0), h = a.val().dim(1), w = a.val().dim(2);
    Tensor out({ca + cb, h, w});
    std::copy(a.val().data(), a.val().data() + a.val().size(), out.data());
    std::copy(b.val().data(), b.val().data() + b.val().size(), out.data() + a.val().size());
    return make_node(std::move(out), {a, b},
                     [ca, cb](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? slice_channels(g, 0, ca) : Var(),
                                                 need[1] ? slice_channels(g, ca, ca + cb) : Var()};
                     },
                     "concat_ch");
}

Var conv2d(const Var& x, const Var& w, const ConvGeom& g) {
    Tensor out = inpaint::conv2d(x.val(), w.val(), g);
    const int in_h = x.val().dim(1), in_w = x.val().dim(2);
    const int kh = w.val().dim(2), kw = w.val().dim(3);
    return make_node(std::move(out), {x, w},
                     [x, w, g, in_h, in_w, kh, kw](const Var& go, const std::vector<bool>& need) {
                         std::vector<Var> r(2);
                         if (need[0]) r[0] = conv2d_bwd_input(go, w, g, in_h, in_w);
                         if (need[1]) r[1] = conv2d_bwd_weight(x, go, g, kh, kw);
                         return r;
                     },
                     "conv2d");
}

Var conv2d_bwd_input(const Var& gout, const Var& w, const ConvGeom& g, int in_h, int in_w) {
    Tensor out = inpaint::conv2d_bwd_input(gout.val(), w.val(), g, in_h, in_w);
    const int kh = w.val().dim(2), kw = w.val().dim(3);
    return make_node(std::move(out), {gout, w},
                     [gout, w, g, kh, kw](const Var& v, const std::vector<bool>& need) {
                         std::vector<Var> r(2);
                         if (need[0]) r[0] = conv2d(v, w, g);
                         if (need[1]) r[1] = conv2d_bwd_weight(v, gout, g, kh, kw);
                         return r;
                     },
                     "conv2d_bwd_in");
}

Var conv2d_bwd_weight(const Var& x, const Var& gout, const ConvGeom& g, int kh, int kw) {
    Tensor out = inpaint::conv2d_bwd_weight(x.val(), gout.val(), g, kh, kw);
    const int in_h = x.val().dim(1), in_w = x.val().dim(2);
    return make_node(std::move(out), {x, gout},
                     [x, gout, g, in_h, in_w](const Var& v, const std::vector<bool>& need) {
                         std::vector<Var> r(2);
                         if (need[0]) r[0] = conv2d_bwd_input(gout, v, g, in_h, in_w);
                         if (need[1]) r[1] = conv2d(x, v, g);
                         return r;
                     },
                     "conv2d_bwd_w");
}

Var fft2_stack(const Var& x) {
    if (x.val().rank() != 3) throw dim_error("fft2_stack expects (C,H,W)");
    const int c = x.val().dim(0), h = x.val().dim(1), w = x.val().dim(2);
    Tensor out({2 * c, h, w});
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int ci = 0; ci < c; ++ci) {
        Tensor chan({h, w});
        std::copy(x.val().data() + ci * plane, x.val().data() + (ci + 1) * plane, chan.data());
        ComplexGrid g = fft2(chan);
        std::copy(g.re.begin(), g.re.end(), out.data() + ci * plane);
        std::copy(g.im.begin(), g.im.end(), out.data() + (static_cast<std::size_t>(c) + ci) * plane);
    }
    const double mn = static_cast<double>(h) * w;
    return make_node(std::move(out), {x},
                     [mn](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? scale(ifft2_unstack(g), mn) : Var()};
                     },
                     "fft2_stack");
}

Var ifft2_unstack(const Var& y) {
    if (y.val().rank() != 3 || y.val().dim(0) % 2 != 0)
        throw dim_error("ifft2_unstack expects (2C,H,W)");
    const int c = y.val().dim(0) / 2, h = y.val().dim(1), w = y.val().dim(2);
    Tensor out({c, h, w});
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int ci = 0; ci < c; ++ci) {
        ComplexGrid g(h, w);
        std::copy(y.val().data() + ci * plane, y.val().data() + (ci + 1) * plane, g.re.begin());
        std::copy(y.val().data() + (static_cast<std::size_t>(c) + ci) * plane,
                  y.val().data() + (static_cast<std::size_t>(c) + ci + 1) * plane, g.im.begin());
        std::vector<double> re, im;
        ifft2_complex(g, re, im);
        std::copy(re.begin(), re.end(), out.data() + ci * plane);
    }
    const double mn = static_cast<double>(h) * w;
    return make_node(std::move(out), {y},
                     [mn](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? scale(fft2_stack(g), 1.0 / mn) : Var()};
                     },
                     "ifft2_unstack");
}

namespace {

Tensor diff_h_value(const Tensor& x) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out({c, h, w});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            for (int j = 0; j + 1 < w; ++j) out.at3(ci, y, j) = x.at3(ci, y, j + 1) - x.at3(ci, y, j);
    return out;
}

Tensor diff_h_adj_value(const Tensor& g) {
    const int c = g.dim(0), h = g.dim(1), w = g.dim(2);
    Tensor out({c, h, w});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            for (int j = 0; j < w; ++j) {
                double v = 0.0;
                if (j > 0) v += g.at3(ci, y, j - 1);
                if (j + 1 < w) v -= g.at3(ci, y, j);
                out.at3(ci, y, j) = v;
            }
    return out;
}

Tensor diff_v_value(const Tensor& x) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out({c, h, w});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y + 1 < h; ++y)
            for (int j = 0; j < w; ++j) out.at3(ci, y, j) = x.at3(ci, y + 1, j) - x.at3(ci, y, j);
    return out;
}

Tensor diff_v_adj_value(const Tensor& g) {
    const int c = g.dim(0), h = g.dim(1), w = g.dim(2);
    Tensor out({c, h, w});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            for (int j = 0; j < w; ++j) {
                double v = 0.0;
                if (y > 0) v += g.at3(ci, y - 1, j);
                if (y + 1 < h) v -= g.at3(ci, y, j);
                out.at3(ci, y, j) = v;
            }
    return out;
}

}  // namespace

Var diff_h(const Var& a) {
    if (a.val().rank() != 3) throw dim_error("diff_h expects (C,H,W)");
    return make_node(diff_h_value(a.val()), {a},
                     [](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? diff_h_adj(g) : Var()};
                     },
                     "diff_h");
}

Var diff_h_adj(const Var& a) {
    if (a.val().rank() != 3) throw dim_error("diff_h_adj expects (C,H,W)");
    return make_node(diff_h_adj_value(a.val()), {a},
                     [](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? diff_h(g) : Var()};
                     },
                     "diff_h_adj");
}

Var diff_v(const Var& a) {
    if (a.val().rank() != 3) throw dim_error("diff_v expects (C,H,W)");
    return make_node(diff_v_value(a.val()), {a},
                     [](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? diff_v_adj(g) : Var()};
                     },
                     "diff_v");
}

Var diff_v_adj(const Var& a) {
    if (a.val().rank() != 3) throw dim_error("diff_v_adj expects (C,H,W)");
    return make_node(diff_v_adj_value(a.val()), {a},
                     [](const Var& g, const std::vector<bool>& need) {
                         return std::vector<Var>{need[0] ? diff_v(g) : Var()};
                     },
                     "diff_v_adj");
}

Var GradMap::var(const Var& x) const {
    auto it = grads_.find(x.node());
    return it == grads_.end() ? Var() : it->second;
}

Tensor GradMap::tensor(const Var& x) const {
    Var g = var(x);
    if (!g.defined()) return Tensor::zeros(x.val().shape());
    return g.val();
}

GradMap backward(const Var& root) {
    if (!root.defined()) throw std::invalid_argument("backward: undefined root");
    if (root.val().size() != 1) throw dim_error("backward: root must be scalar");

    // iterative DFS topological order (children after parents)
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    struct Frame {
        Node* n;
        std::size_t next = 0;
    };
    std::vector<Frame> stack;
    if (root.node()->requires_grad) {
        stack.push_back({root.node()});
        seen.insert(root.node());
    }
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.n->parents.size()) {
            Node* p = f.n->parents[f.next++].node();
            if (p->requires_grad && seen.insert(p).second) stack.push_back({p});
        } else {
            order.push_back(f.n);
            stack.pop_back();
        }
    }

    GradMap gm;
    gm.grads_[root.node()] = constant(Tensor::full({1}, 1.0));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        auto git = gm.grads_.find(n);
        if (git == gm.grads_.end() || !n->vjp) continue;
        std::vector<bool> need(n->parents.size());
        bool any = false;
        for (std::size_t i = 0; i < n->parents.size(); ++i) {
            need[i] = n->parents[i].requires_grad();
            any = any || need[i];
        }
        if (!any) continue;
        std::vector<Var> contrib = n->vjp(git->second, need);
        for (std::size_t i = 0; i < n->parents.size(); ++i) {
            if (!need[i] || !contrib[i].defined()) continue;
            Node* p = n->parents[i].node();
            auto pit = gm.grads_.find(p);
            if (pit == gm.grads_.end())
                gm.grads_[p] = contrib[i];
            else
                pit->second = add(pit->second, contrib[i]);
        }
    }
    return gm;
}

}  // namespace inpaint::ad
