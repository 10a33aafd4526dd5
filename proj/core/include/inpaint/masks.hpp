#pragma once

#include "inpaint/rng.hpp"
#include "inpaint/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace inpaint {

/// Degenerate mask (all masked or all unmasked) or a generator that failed
/// to satisfy its coverage range after the bounded number of redraws.
struct mask_invariant_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed mask file; message carries the byte offset of the problem.
struct mask_parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Binary hole mask; 1 = masked (to be inpainted), 0 = known pixel.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits;  // row-major, values in {0,1}

    Mask() = default;
    Mask(int h, int w) : height(h), width(w), bits(static_cast<std::size_t>(h) * w, 0) {}

    std::uint8_t at(int y, int x) const { return bits[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int y, int x) { return bits[static_cast<std::size_t>(y) * width + x]; }
    std::size_t count_masked() const;

    /// Throws mask_invariant_error unless at least one masked and one
    /// unmasked pixel exist and all values are 0/1.
    void validate() const;

    /// mask as a (H,W) tensor of 0/1 reals
    Tensor to_tensor() const;
};

enum class MaskType {
    Completion,
    Expand,
    EveryNLines,
    NearestNeighbor,
    ThinStrokes,
    MediumStrokes,
    ThickStrokes,
    LamaPolygonal,
    LamaRectangle,
};

enum class MaskPolicy { LamaMask, LamaPlusMask, GeneralMask };

std::string mask_type_name(MaskType t);
MaskType mask_type_from_name(const std::string& name);
std::string mask_policy_name(MaskPolicy p);
MaskPolicy mask_policy_from_name(const std::string& name);

/// The set of types a policy samples from, in declaration order.
const std::vector<MaskType>& policy_types(MaskPolicy p);

struct CoverageRange {
    double lo = 0.0;
    double hi = 1.0;
    bool declared = false;  // Lama baseline types only require non-degeneracy
};

CoverageRange coverage_range(MaskType t);

/// Draw a mask of the given type. Pure function of (type, h, w, rng seed):
/// the generator forks substreams from the seed, redrawing (bounded at 16
/// attempts) whenever a draw violates non-degeneracy or the declared
/// coverage range.
Mask generate(MaskType type, int h, int w, const Rng& rng);

/// Uniform draw over the policy's type set.
MaskType sample_type(MaskPolicy policy, Rng& rng);

/// (# masked pixels) / (h*w)
double coverage(const Mask& m);

/// Binary PBM (P4) with 1-bits marking masked pixels.
void save_mask(const Mask& m, const std::string& path);
Mask load_mask(const std::string& path);

// Parameterized geometry used by generate(); exposed because several have
// exactly-known coverage (EveryNLines: t/n, NearestNeighbor: 1 - 1/s^2).
Mask completion_band(int h, int w, int side, double fraction);
Mask expand_keep_rect(int h, int w, double area_frac, double aspect);
Mask every_n_lines(int h, int w, bool over_rows, int n, int thickness, int offset);
Mask nearest_neighbor(int h, int w, int stride);

}  // namespace inpaint
