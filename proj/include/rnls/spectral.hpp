#pragma once

#include <span>
#include <vector>

#include "rnls/grid.hpp"
#include "rnls/kernels.hpp"

namespace rnls {

/// Unnormalized forward DFT over one axis, in place.
void forward_axis(std::span<cplx> data, const GridSpec& grid, int axis,
                  kernels::Exec exec = kernels::Exec::parallel);
/// Inverse DFT over one axis including the 1/N_axis factor, in place.
void inverse_axis(std::span<cplx> data, const GridSpec& grid, int axis,
                  kernels::Exec exec = kernels::Exec::parallel);

/// Full n-D transforms. forward is unnormalized; inverse carries 1/prod(N).
void forward_all(std::span<cplx> data, const GridSpec& grid, kernels::Exec exec = kernels::Exec::parallel);
void inverse_all(std::span<cplx> data, const GridSpec& grid, kernels::Exec exec = kernels::Exec::parallel);

/// Spectral coefficients of a field (unnormalized DFT).
std::vector<cplx> transform_forward(const WaveField& field);
/// Field whose forward transform is `coeffs`.
WaveField transform_inverse(const GridSpec& grid, std::vector<cplx> coeffs);

/// Weight w with integral |u|^2 = w * sum |u_hat|^2.
inline double parseval_weight(const GridSpec& grid) {
    return grid.cell_volume() / static_cast<double>(grid.size());
}

/// Spectral partial derivative d/dx_axis. The Nyquist bin is dropped, which
/// keeps the derivative of a real field real.
WaveField derivative(const WaveField& u, int axis, kernels::Exec exec = kernels::Exec::parallel);

/// Wavenumber used for first derivatives: k with the Nyquist bin set to zero.
double derivative_wavenumber(const GridSpec& grid, int axis, std::size_t m);

}  // namespace rnls
