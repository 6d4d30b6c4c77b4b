#include "rnls/spectral.hpp"

namespace rnls {

void forward_axis(std::span<cplx> data, const GridSpec& grid, int axis, kernels::Exec exec) {
    kernels::line_fft(data, grid, axis, -1, exec);
}

void inverse_axis(std::span<cplx> data, const GridSpec& grid, int axis, kernels::Exec exec) {
    kernels::line_fft(data, grid, axis, +1, exec);
    const double s = 1.0 / static_cast<double>(grid.points(axis));
    kernels::for_each_index(data.size(), exec, [&](std::size_t i) { data[i] *= s; });
}

void forward_all(std::span<cplx> data, const GridSpec& grid, kernels::Exec exec) {
    for (int a = 0; a < grid.dim(); ++a) kernels::line_fft(data, grid, a, -1, exec);
}

void inverse_all(std::span<cplx> data, const GridSpec& grid, kernels::Exec exec) {
    for (int a = 0; a < grid.dim(); ++a) kernels::line_fft(data, grid, a, +1, exec);
    const double s = 1.0 / static_cast<double>(grid.size());
    kernels::for_each_index(data.size(), exec, [&](std::size_t i) { data[i] *= s; });
}

std::vector<cplx> transform_forward(const WaveField& field) {
    if (!field.is_finite()) throw NumericalError("transform of a non-finite field");
    std::vector<cplx> c = field.values;
    forward_all(c, field.grid);
    return c;
}

WaveField transform_inverse(const GridSpec& grid, std::vector<cplx> coeffs) {
    WaveField out(grid, std::move(coeffs));
    inverse_all(out.values, grid);
    return out;
}

double derivative_wavenumber(const GridSpec& grid, int axis, std::size_t m) {
    return m == grid.points(axis) / 2 ? 0.0 : grid.wavenumber(axis, m);
}

WaveField derivative(const WaveField& u, int axis, kernels::Exec exec) {
    WaveField d = u;
    const GridSpec& g = u.grid;
    forward_axis(d.values, g, axis, exec);
    const kernels::LineLayout lay(g, axis);
    std::vector<cplx> ik(lay.length);
    for (std::size_t m = 0; m < lay.length; ++m) ik[m] = cplx{0.0, derivative_wavenumber(g, axis, m)};
    kernels::multiply_lines(d.values, lay, ik, [](std::size_t) { return std::size_t{0}; }, exec);
    inverse_axis(d.values, g, axis, exec);
    return d;
}

}  // namespace rnls
