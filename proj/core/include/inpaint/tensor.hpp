#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace inpaint {

/// Thrown when tensor shapes or dimensions violate an operation's contract.
struct dim_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a value that must be finite is NaN or Inf.
struct finite_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Dtype : std::uint8_t { f32, f64 };

const char* dtype_name(Dtype dt);
Dtype dtype_from_name(const std::string& name);
std::size_t dtype_bytes(Dtype dt);

/// Dense row-major tensor of reals. Arithmetic is always carried out in
/// double precision; an f32 tensor quantizes its contents through float
/// (storage dtype matters for checkpoint serialization and tolerance
/// selection, not for the compute path).
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape, Dtype dt = Dtype::f64);
    Tensor(std::vector<int> shape, std::vector<double> values, Dtype dt = Dtype::f64);

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, double value);
    static Tensor scalar(double value);

    const std::vector<int>& shape() const { return shape_; }
    int dim(std::size_t i) const { return shape_.at(i); }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    Dtype dtype() const { return dtype_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    // rank-3 (C,H,W) access
    double at3(int c, int y, int x) const;
    double& at3(int c, int y, int x);
    // rank-4 (O,C,Kh,Kw) access
    double at4(int o, int c, int y, int x) const;
    double& at4(int o, int c, int y, int x);

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    /// Throws finite_error naming `what` if any element is NaN/Inf.
    void ensure_finite(const std::string& what) const;

    /// Quantize through float precision (used when dtype is f32).
    Tensor to(Dtype dt) const;

    double sum() const;
    double abs_max() const;

  private:
    std::vector<int> shape_;
    std::vector<double> data_;
    Dtype dtype_ = Dtype::f64;
};

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

/// max |a-b| over all elements; shapes must match.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace inpaint
