#pragma once

#include "inpaint/autodiff.hpp"
#include "inpaint/masks.hpp"
#include "inpaint/tensor.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace inpaint {

/// Generator architecture: stem, n_down stride-2 blocks, n_residual FFC
/// residual blocks with a local/global channel split at the bottleneck,
/// n_up transposed-conv blocks, sigmoid head.
struct FfcConfig {
    int base_width = 16;
    double global_ratio = 0.5;
    int n_down = 3;
    int n_residual = 3;
    int n_up = 3;
    std::string norm = "instance";     // "instance" | "none"
    std::string activation = "relu";   // trunk activation
    int in_channels = 4;               // masked image + mask plane
    int out_channels = 3;

    void validate() const;
    int width_at(int stage) const { return base_width << stage; }
    int bottleneck_width() const { return base_width << n_down; }
    int global_channels() const;
};

struct DiscConfig {
    int base_width = 32;
    int depth = 4;  // feature stages
    double leaky_slope = 0.2;

    void validate() const;
};

/// Ordered, named collection of trainable tensors with seed-determined
/// initialization.
class ParamSet {
  public:
    struct Entry {
        std::string name;
        Tensor tensor;
    };

    ParamSet() = default;
    explicit ParamSet(std::uint64_t seed) : seed_(seed) {}

    void add(const std::string& name, Tensor t);
    bool has(const std::string& name) const { return index_.count(name) != 0; }
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t total_parameters() const;
    std::uint64_t seed() const { return seed_; }
    void set_seed(std::uint64_t s) { seed_ = s; }

  private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    std::uint64_t seed_ = 0;
};

/// Tape handles for a ParamSet's tensors, keyed by name.
struct VarMap {
    std::unordered_map<std::string, ad::Var> vars;

    const ad::Var& at(const std::string& name) const;
};

VarMap lift_params(const ParamSet& params, bool requires_grad);

ParamSet init_generator_params(const FfcConfig& cfg, std::uint64_t seed);
ParamSet init_discriminator_params(const DiscConfig& cfg, std::uint64_t seed, int in_channels = 3);

/// Closed-form parameter counts matching the init_* builders (documented in
/// the architecture table in the README).
std::size_t generator_parameter_count(const FfcConfig& cfg);
std::size_t discriminator_parameter_count(const DiscConfig& cfg, int in_channels = 3);

struct SpectralOptions {
    bool with_norm = true;
    bool with_activation = true;
};

/// FFC global path: per-channel FFT, pointwise mixing of the stacked
/// real/imaginary channels, optional normalization + activation in the
/// frequency domain, inverse FFT. Spatial dims must be powers of two.
ad::Var spectral_transform(const ad::Var& x_global, const VarMap& params, const std::string& prefix,
                           const SpectralOptions& opts = {});

/// One FFC unit: local->local, global->local, local->global 3x3 convs,
/// global->global spectral transform; per-destination sums are normalized
/// and activated. The residual connection lives in the caller.
std::pair<ad::Var, ad::Var> ffc_block(const ad::Var& x_local, const ad::Var& x_global,
                                      const VarMap& params, const std::string& prefix,
                                      const FfcConfig& cfg);

/// Full generator on the tape: consumes the raw image and hole mask and
/// builds the 4-channel input stack [x*(1-M), M] internally. Output is
/// (3,H,W) in [0,1].
ad::Var generator_forward(const ad::Var& image, const Mask& m, const VarMap& params,
                          const FfcConfig& cfg);

struct DiscOutput {
    ad::Var logits;                 // (1, H/8, W/8)
    std::vector<ad::Var> features;  // one per stage
};

DiscOutput discriminator_forward(const ad::Var& x, const VarMap& params, const DiscConfig& cfg);

// value-level convenience wrappers
Tensor generator_forward(const Tensor& image, const Mask& m, const ParamSet& params,
                         const FfcConfig& cfg);
std::pair<Tensor, std::vector<Tensor>> discriminator_forward(const Tensor& x, const ParamSet& params,
                                                             const DiscConfig& cfg);

}  // namespace inpaint
