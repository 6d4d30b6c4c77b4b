#include "rnls/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rnls/kernels.hpp"

namespace rnls {

namespace {
bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }
}  // namespace

GridSpec make_grid(int n, std::span<const double> extents, std::span<const std::size_t> points) {
    if (n != 2 && n != 3) throw ConfigError("grid dimension must be 2 or 3, got " + std::to_string(n));
    if (extents.size() != static_cast<std::size_t>(n) || points.size() != static_cast<std::size_t>(n))
        throw ConfigError("grid needs one extent and one point count per axis");
    GridSpec g;
    g.dim_ = n;
    for (int a = 0; a < n; ++a) {
        if (!(extents[a] > 0.0) || !std::isfinite(extents[a]))
            throw ConfigError("grid half-extent must be > 0 on axis " + std::to_string(a));
        if (points[a] < 8 || !is_power_of_two(points[a]))
            throw ConfigError("grid points must be a power of two >= 8 on axis " + std::to_string(a) + ", got " +
                              std::to_string(points[a]));
        g.half_extent_[a] = extents[a];
        g.points_[a] = points[a];
    }
    return g;
}

GridSpec make_grid(int n, double half_extent, std::size_t points) {
    const std::array<double, 3> L{half_extent, half_extent, half_extent};
    const std::array<std::size_t, 3> N{points, points, points};
    const std::size_t k = (n == 2 || n == 3) ? static_cast<std::size_t>(n) : 3;
    return make_grid(n, std::span(L.data(), k), std::span(N.data(), k));
}

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= spacing(a);
    return v;
}

std::size_t GridSpec::stride(int axis) const {
    std::size_t s = 1;
    for (int a = 0; a < axis; ++a) s *= points_[a];
    return s;
}

double GridSpec::wavenumber(int axis, std::size_t m) const {
    const auto n = static_cast<std::ptrdiff_t>(points_[axis]);
    auto mm = static_cast<std::ptrdiff_t>(m);
    if (mm >= n / 2) mm -= n;
    return std::numbers::pi * static_cast<double>(mm) / half_extent_[axis];
}

double GridSpec::max_wavenumber(int axis) const { return std::numbers::pi / spacing(axis); }

std::vector<double> GridSpec::coordinates(int axis) const {
    std::vector<double> x(points_[axis]);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = coordinate(axis, i);
    return x;
}

std::vector<double> GridSpec::wavenumbers(int axis) const {
    std::vector<double> k(points_[axis]);
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = wavenumber(axis, i);
    return k;
}

std::array<std::size_t, 3> GridSpec::unflatten(std::size_t idx) const {
    std::array<std::size_t, 3> ijk{0, 0, 0};
    ijk[0] = idx % points_[0];
    idx /= points_[0];
    ijk[1] = idx % points_[1];
    ijk[2] = idx / points_[1];
    return ijk;
}

double GridSpec::radius_squared(std::size_t idx) const {
    const auto ijk = unflatten(idx);
    double r2 = 0.0;
    for (int a = 0; a < dim_; ++a) {
        const double x = coordinate(a, ijk[a]);
        r2 += x * x;
    }
    return r2;
}

WaveField::WaveField(const GridSpec& g, std::vector<cplx> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size())
        throw ConfigError("field has " + std::to_string(values.size()) + " samples, grid has " +
                          std::to_string(grid.size()));
}

bool WaveField::is_finite() const {
    for (const cplx& z : values)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

void require_same_grid(const GridSpec& a, const GridSpec& b) {
    if (!(a == b)) throw ConfigError("fields live on different grids");
}

double integrate(const GridSpec& grid, std::span<const double> samples) {
    if (samples.size() != grid.size()) throw ConfigError("sample count does not match grid");
    const double s = kernels::reduce<double>(samples.size(), kernels::Exec::parallel,
                                             [&](std::size_t i) { return samples[i]; });
    return grid.cell_volume() * s;
}

cplx integrate(const GridSpec& grid, std::span<const cplx> samples) {
    if (samples.size() != grid.size()) throw ConfigError("sample count does not match grid");
    const cplx s =
        kernels::reduce<cplx>(samples.size(), kernels::Exec::parallel, [&](std::size_t i) { return samples[i]; });
    return grid.cell_volume() * s;
}

double mass(const WaveField& u) {
    const double s = kernels::reduce<double>(u.size(), kernels::Exec::parallel,
                                             [&](std::size_t i) { return std::norm(u.values[i]); });
    return u.grid.cell_volume() * s;
}

cplx inner(const WaveField& f, const WaveField& g) {
    require_same_grid(f.grid, g.grid);
    const cplx s = kernels::reduce<cplx>(f.size(), kernels::Exec::parallel,
                                         [&](std::size_t i) { return f.values[i] * std::conj(g.values[i]); });
    return f.grid.cell_volume() * s;
}

double boundary_mass_fraction(const WaveField& u, double radius_fraction) {
    double lmin = u.grid.half_extent(0);
    for (int a = 1; a < u.grid.dim(); ++a) lmin = std::min(lmin, u.grid.half_extent(a));
    const double r2 = radius_fraction * radius_fraction * lmin * lmin;
    const double outer = kernels::reduce<double>(u.size(), kernels::Exec::parallel, [&](std::size_t i) {
        return u.grid.radius_squared(i) > r2 ? std::norm(u.values[i]) : 0.0;
    });
    const double total = mass(u) / u.grid.cell_volume();
    return total > 0.0 ? outer / total : 0.0;
}

}  // namespace rnls
