#include "rnls/kernels.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace rnls::kernels {

LineLayout::LineLayout(const GridSpec& grid, int axis)
    : length(grid.points(axis)), stride(grid.stride(axis)), count(grid.size() / grid.points(axis)),
      inner(grid.stride(axis)) {}

namespace {

// Lines transformed per FFTW call. Fixed, so the serial and parallel paths
// execute identical plans on identical chunks and agree bit for bit.
constexpr std::size_t chunk_lines = 16;

struct PlanKey {
    std::size_t n;
    int sign;
    std::size_t stride, dist, howmany;
    auto operator<=>(const PlanKey&) const = default;
};

// FFTW's planner is not thread-safe; plans are created once per layout under a
// lock and then executed concurrently through the new-array interface.
fftw_plan plan_for(const PlanKey& key) {
    static std::mutex mu;
    static std::map<PlanKey, fftw_plan> plans;
    std::lock_guard lock(mu);
    if (auto it = plans.find(key); it != plans.end()) return it->second;
    const std::size_t extent = (key.n - 1) * key.stride + (key.howmany - 1) * key.dist + 1;
    auto* buf = fftw_alloc_complex(extent);
    const int n = static_cast<int>(key.n);
    fftw_plan p = fftw_plan_many_dft(1, &n, static_cast<int>(key.howmany), buf, nullptr, static_cast<int>(key.stride),
                                     static_cast<int>(key.dist), buf, nullptr, static_cast<int>(key.stride),
                                     static_cast<int>(key.dist), key.sign == -1 ? FFTW_FORWARD : FFTW_BACKWARD,
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    plans.emplace(key, p);
    return p;
}

}  // namespace

void line_fft(std::span<cplx> data, const GridSpec& grid, int axis, int sign, Exec exec) {
    const LineLayout lay(grid, axis);
    // Contiguous lines sit lay.length apart; strided ones are interleaved with
    // neighbours one element apart inside blocks of `inner` lines.
    const std::size_t dist = lay.stride == 1 ? lay.length : 1;
    const std::size_t howmany = std::min(chunk_lines, lay.stride == 1 ? lay.count : lay.inner);
    const fftw_plan plan = plan_for({lay.length, sign, lay.stride, dist, howmany});
    for_each_index(lay.count / howmany, exec, [&](std::size_t c) {
        auto* p = reinterpret_cast<fftw_complex*>(data.data() + lay.start(c * howmany));
        fftw_execute_dft(plan, p, p);
    });
}

void line_dft_reference(std::span<cplx> data, const GridSpec& grid, int axis, int sign) {
    const LineLayout lay(grid, axis);
    const std::size_t n = lay.length;
    std::vector<cplx> in(n), twiddle(n);
    for (std::size_t j = 0; j < n; ++j)
        twiddle[j] = std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n));
    for (std::size_t line = 0; line < lay.count; ++line) {
        cplx* p = data.data() + lay.start(line);
        for (std::size_t m = 0; m < n; ++m) in[m] = p[m * lay.stride];
        for (std::size_t k = 0; k < n; ++k) {
            cplx acc{0.0, 0.0};
            for (std::size_t m = 0; m < n; ++m) acc += in[m] * twiddle[(k * m) % n];
            p[k * lay.stride] = acc;
        }
    }
}

void multiply(std::span<cplx> data, std::span<const cplx> factor, Exec exec) {
    for_each_index(data.size(), exec, [&](std::size_t i) { data[i] *= factor[i]; });
}

}  // namespace rnls::kernels
