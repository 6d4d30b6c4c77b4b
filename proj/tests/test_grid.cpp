#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "rnls/grid.hpp"
#include "rnls/kernels.hpp"
#include "rnls/spectral.hpp"

using namespace rnls;
using kernels::Exec;

namespace {

WaveField random_field(const GridSpec& g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    WaveField u(g);
    for (auto& v : u.values) v = {nd(rng), nd(rng)};
    return u;
}

WaveField oscillator_gaussian(const GridSpec& g, double gamma) {
    const double amp = std::pow(gamma / std::numbers::pi, g.dim() / 4.0);
    return sample_field(g, [&](const std::array<double, 3>& x) {
        return cplx{amp * std::exp(-0.5 * gamma * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])), 0.0};
    });
}

double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("make_grid spacing and validation") {
    const auto g = make_grid(2, 8.0, 128);
    CHECK(g.spacing(0) == 0.125);
    CHECK(g.spacing(0) * 128 == 16.0);
    CHECK(g.size() == 128 * 128);
    CHECK_THROWS_AS(make_grid(2, 8.0, 100), ConfigError);
    CHECK_THROWS_AS(make_grid(4, 8.0, 64), ConfigError);
    CHECK_THROWS_AS(make_grid(2, 8.0, 4), ConfigError);
    CHECK_THROWS_AS(make_grid(2, -1.0, 64), ConfigError);
    const auto g3 = make_grid(3, 8.0, 64);
    CHECK(g3.size() == 262144);
}

TEST_CASE("wavenumbers use symmetric FFT ordering") {
    const auto g = make_grid(2, 8.0, 16);
    const auto k = g.wavenumbers(0);
    CHECK(k[0] == 0.0);
    CHECK(k[1] == doctest::Approx(std::numbers::pi / 8.0));
    CHECK(k[8] == doctest::Approx(-std::numbers::pi / g.spacing(0)));
    CHECK(g.max_wavenumber(0) == doctest::Approx(std::numbers::pi / g.spacing(0)));
    CHECK(k[15] == doctest::Approx(-std::numbers::pi / 8.0));
}

TEST_CASE("constant and single-mode fields transform to one coefficient") {
    const auto g = make_grid(2, 8.0, 32);
    WaveField one = sample_field(g, [](const auto&) { return cplx{1.0, 0.0}; });
    const auto c = transform_forward(one);
    CHECK(std::abs(c[0] - cplx(static_cast<double>(g.size()), 0.0)) < 1e-10);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(std::abs(c[i]) <= 1e-13 * g.size());

    const double k1 = 3.0 * std::numbers::pi / 8.0;
    WaveField mode = sample_field(g, [&](const auto& x) { return std::polar(1.0, k1 * x[0]); });
    const auto cm = transform_forward(mode);
    std::size_t peak = 0;
    for (std::size_t i = 0; i < cm.size(); ++i)
        if (std::abs(cm[i]) > std::abs(cm[peak])) peak = i;
    CHECK(g.wavenumber(0, g.unflatten(peak)[0]) == doctest::Approx(k1));
    for (std::size_t i = 0; i < cm.size(); ++i)
        if (i != peak) CHECK(std::abs(cm[i]) <= 1e-13 * g.size());
}

TEST_CASE("round trip and Parseval on random fields") {
    for (int n : {2, 3}) {
        const auto g = make_grid(n, 8.0, n == 2 ? 64 : 16);
        const WaveField u = random_field(g, 7 + n);
        const WaveField back = transform_inverse(g, transform_forward(u));
        CHECK(max_abs_diff(u.values, back.values) <= 1e-13 * 8);
        double maxu = 0.0;
        for (auto v : u.values) maxu = std::max(maxu, std::abs(v));
        CHECK(max_abs_diff(u.values, back.values) / maxu <= 1e-13);

        const auto c = transform_forward(u);
        double s = 0.0;
        for (auto v : c) s += std::norm(v);
        CHECK(std::abs(parseval_weight(g) * s - mass(u)) / mass(u) <= 1e-12);
    }
}

TEST_CASE("FFT lines agree with direct DFT, serial and parallel paths agree") {
    const auto g = make_grid(3, 4.0, 16);
    const WaveField u = random_field(g, 3);
    for (int axis = 0; axis < 3; ++axis) {
        for (int sign : {-1, 1}) {
            std::vector<cplx> a = u.values, b = u.values, c = u.values;
            kernels::line_fft(a, g, axis, sign, Exec::parallel);
            kernels::line_fft(b, g, axis, sign, Exec::serial);
            kernels::line_dft_reference(c, g, axis, sign);
            CHECK(max_abs_diff(a, b) == 0.0);
            CHECK(max_abs_diff(a, c) <= 1e-12);
        }
    }
    const double ps = kernels::reduce<double>(u.size(), Exec::serial, [&](std::size_t i) { return std::norm(u.values[i]); });
    const double pp = kernels::reduce<double>(u.size(), Exec::parallel, [&](std::size_t i) { return std::norm(u.values[i]); });
    CHECK(ps == pp);
}

TEST_CASE("Gaussian quadrature") {
    const auto g = make_grid(2, 8.0, 128);
    const WaveField gauss = oscillator_gaussian(g, 1.0);
    CHECK(mass(gauss) == doctest::Approx(1.0).epsilon(1e-10));
    std::vector<double> second(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) second[i] = g.radius_squared(i) * std::norm(gauss.values[i]);
    CHECK(std::abs(integrate(g, second) - 1.0) <= 1e-9);
    std::vector<double> zero(g.size(), 0.0);
    CHECK(integrate(g, zero) == 0.0);

    const auto g3 = make_grid(3, 8.0, 32);
    CHECK(mass(oscillator_gaussian(g3, 1.0)) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK_THROWS_AS(inner(gauss, oscillator_gaussian(make_grid(2, 8.0, 64), 1.0)), ConfigError);
}

TEST_CASE("spectral derivative of a plane wave") {
    const auto g = make_grid(2, 8.0, 64);
    const double k = 5.0 * std::numbers::pi / 8.0;
    for (int axis : {0, 1}) {
        WaveField u = sample_field(g, [&](const auto& x) { return std::polar(1.0, k * x[axis]); });
        const WaveField d = derivative(u, axis);
        double err = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) err = std::max(err, std::abs(d.values[i] - cplx(0, k) * u.values[i]));
        CHECK(err <= 1e-12);
    }
}

TEST_CASE("invalid fields are rejected") {
    const auto g = make_grid(2, 8.0, 16);
    WaveField u(g);
    CHECK(u.is_finite());
    u.values[5] = {std::nan(""), 0.0};
    CHECK_FALSE(u.is_finite());
    CHECK_THROWS_AS(transform_forward(u), NumericalError);
    CHECK_THROWS_AS(WaveField(g, std::vector<cplx>(3)), ConfigError);
}

TEST_CASE("boundary mass fraction") {
    const auto g = make_grid(2, 8.0, 128);
    CHECK(boundary_mass_fraction(oscillator_gaussian(g, 1.0)) < 1e-8);
    WaveField edge = sample_field(g, [](const auto& x) { return cplx{std::abs(x[0]) > 7.5 ? 1.0 : 0.0, 0.0}; });
    CHECK(boundary_mass_fraction(edge) == doctest::Approx(1.0));
}
