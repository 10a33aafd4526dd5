#pragma once

#include "inpaint/tensor.hpp"

#include <vector>

namespace inpaint {

/// Thrown by ifft2 when the input is not conjugate-symmetric and the caller
/// did not accept a larger imaginary residue.
struct symmetry_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// M x N grid of complex numbers stored as separate re/im planes.
struct ComplexGrid {
    int m = 0;
    int n = 0;
    std::vector<double> re;
    std::vector<double> im;

    ComplexGrid() = default;
    ComplexGrid(int m_, int n_);

    std::size_t size() const { return re.size(); }
    std::size_t idx(int u, int v) const { return static_cast<std::size_t>(u) * n + v; }

    double abs2(int u, int v) const {
        const std::size_t i = idx(u, v);
        return re[i] * re[i] + im[i] * im[i];
    }

    /// max |G(u,v) - conj(G((M-u)%M,(N-v)%N))| over the grid
    double conjugate_symmetry_residue() const;
};

/// Unnormalized forward 2D DFT of a real M x N grid:
///   G(u,v) = sum_{a,b} x(a,b) * exp(-2*pi*i*(u*a/M + v*b/N))
/// Radix-2 along power-of-two dimensions, direct transform otherwise.
ComplexGrid fft2(const Tensor& grid);

/// Inverse 2D DFT with 1/(MN) normalization, returning the real part.
/// If the imaginary residue of the inverse exceeds `imag_tol` (relative to
/// max(1, output magnitude)) a symmetry_error is thrown.
Tensor ifft2(const ComplexGrid& g, double imag_tol = 1e-9);

/// Full complex inverse transform (no symmetry requirement).
void ifft2_complex(const ComplexGrid& g, std::vector<double>& out_re, std::vector<double>& out_im);

/// Forward transform of a complex grid (used by adjoint paths).
ComplexGrid fft2_complex(const std::vector<double>& re, const std::vector<double>& im, int m, int n);

bool is_power_of_two(int n);

}  // namespace inpaint
