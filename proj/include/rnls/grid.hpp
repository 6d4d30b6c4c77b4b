#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "rnls/error.hpp"

namespace rnls {

using cplx = std::complex<double>;

/// Uniform periodic tensor grid on the box [-L_j, L_j) in n = 2 or 3 dimensions.
///
/// Nodes are stored row-major with axis 0 (x_1) fastest:
///   index = i0 + N0 * (i1 + N1 * i2).
/// Unused trailing axes have N = 1 and are never transformed.
class GridSpec {
public:
    GridSpec() = default;

    int dim() const { return dim_; }
    double half_extent(int axis) const { return half_extent_[axis]; }
    std::size_t points(int axis) const { return points_[axis]; }
    double spacing(int axis) const { return 2.0 * half_extent_[axis] / static_cast<double>(points_[axis]); }

    std::size_t size() const { return points_[0] * points_[1] * points_[2]; }
    /// Product of spacings; the rectangle-rule quadrature weight.
    double cell_volume() const;

    /// Distance between successive samples along `axis` in the flat buffer.
    std::size_t stride(int axis) const;

    double coordinate(int axis, std::size_t i) const {
        return -half_extent_[axis] + static_cast<double>(i) * spacing(axis);
    }
    /// Wavenumber of FFT bin m in standard ordering: m < N/2 -> pi m / L, else pi (m - N) / L.
    double wavenumber(int axis, std::size_t m) const;
    /// pi / h: the Nyquist wavenumber magnitude.
    double max_wavenumber(int axis) const;

    std::vector<double> coordinates(int axis) const;
    std::vector<double> wavenumbers(int axis) const;

    /// Multi-index of a flat node index.
    std::array<std::size_t, 3> unflatten(std::size_t idx) const;
    /// Squared radius |x|^2 at a flat node index.
    double radius_squared(std::size_t idx) const;

    bool operator==(const GridSpec& other) const = default;

private:
    friend GridSpec make_grid(int n, std::span<const double> extents, std::span<const std::size_t> points);

    int dim_ = 0;
    std::array<double, 3> half_extent_{1.0, 1.0, 1.0};
    std::array<std::size_t, 3> points_{1, 1, 1};
};

/// Validates and builds a grid. Throws ConfigError on n outside {2,3},
/// non-positive extents, or point counts that are not powers of two >= 8.
GridSpec make_grid(int n, std::span<const double> extents, std::span<const std::size_t> points);

/// Isotropic convenience overload: same L and N on every axis.
GridSpec make_grid(int n, double half_extent, std::size_t points);

/// Complex field sampled on every node of a grid.
struct WaveField {
    GridSpec grid;
    std::vector<cplx> values;

    WaveField() = default;
    explicit WaveField(const GridSpec& g) : grid(g), values(g.size(), cplx{0.0, 0.0}) {}
    WaveField(const GridSpec& g, std::vector<cplx> v);

    std::size_t size() const { return values.size(); }
    std::span<cplx> span() { return values; }
    std::span<const cplx> span() const { return values; }

    /// False if any sample is NaN or infinite.
    bool is_finite() const;
};

/// Builds a field by evaluating f(x) at each node; x is passed as a 3-array
/// with unused components set to zero.
template <class F>
WaveField sample_field(const GridSpec& grid, F&& f) {
    WaveField out(grid);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        const auto ijk = grid.unflatten(idx);
        for (int a = 0; a < grid.dim(); ++a) x[a] = grid.coordinate(a, ijk[a]);
        out.values[idx] = f(x);
    }
    return out;
}

/// Rectangle-rule quadrature (prod h_j) * sum of samples. Exact for
/// band-limited periodic integrands. Summation order is fixed, so the result
/// does not depend on the thread count.
double integrate(const GridSpec& grid, std::span<const double> samples);
cplx integrate(const GridSpec& grid, std::span<const cplx> samples);

/// Integral of |u|^2.
double mass(const WaveField& u);
/// L^2 inner product <f, g> = integral of f * conj(g).
cplx inner(const WaveField& f, const WaveField& g);
/// Integral of |u|^2 over |x| > radius_fraction * min_j L_j, divided by the total mass.
double boundary_mass_fraction(const WaveField& u, double radius_fraction = 0.9);

void require_same_grid(const GridSpec& a, const GridSpec& b);

}  // namespace rnls
