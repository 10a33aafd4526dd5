#include "inpaint/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace inpaint {

const char* dtype_name(Dtype dt) { return dt == Dtype::f32 ? "f32" : "f64"; }

Dtype dtype_from_name(const std::string& name) {
    if (name == "f32") return Dtype::f32;
    if (name == "f64") return Dtype::f64;
    throw std::runtime_error("unknown dtype name: " + name);
}

std::size_t dtype_bytes(Dtype dt) { return dt == Dtype::f32 ? 4 : 8; }

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw dim_error("tensor dimensions must be positive, got " + shape_str(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<int> shape, Dtype dt)
    : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0), dtype_(dt) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values, Dtype dt)
    : shape_(std::move(shape)), data_(std::move(values)), dtype_(dt) {
    if (data_.size() != shape_numel(shape_)) {
        throw dim_error("data length " + std::to_string(data_.size()) + " does not match shape " +
                        shape_str(shape_));
    }
    if (dtype_ == Dtype::f32) {
        for (double& v : data_) v = static_cast<double>(static_cast<float>(v));
    }
}

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

double Tensor::at3(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
}
double& Tensor::at3(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
}
double Tensor::at4(int o, int c, int y, int x) const {
    return data_[((static_cast<std::size_t>(o) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
}
double& Tensor::at4(int o, int c, int y, int x) {
    return data_[((static_cast<std::size_t>(o) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::ensure_finite(const std::string& what) const {
    if (!all_finite()) throw finite_error("non-finite value in " + what);
}

Tensor Tensor::to(Dtype dt) const {
    Tensor out(shape_, dt);
    out.data_ = data_;
    if (dt == Dtype::f32) {
        for (double& v : out.data_) v = static_cast<double>(static_cast<float>(v));
    }
    return out;
}

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Tensor::abs_max() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw dim_error("max_abs_diff shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace inpaint
