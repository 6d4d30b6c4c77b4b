#pragma once

// Data-parallel building blocks shared by every module.
//
// Each kernel comes in two flavours selected by `Exec`: an OpenMP version
// used in production and a plain serial loop kept as the reference the tests
// compare against. Reductions accumulate fixed-size blocks and combine the
// block sums serially, so both flavours agree bit-for-bit and results do not
// depend on the thread count.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "rnls/grid.hpp"

namespace rnls::kernels {

enum class Exec { serial, parallel };

/// Geometry of the 1-D lines along one axis of a grid.
struct LineLayout {
    std::size_t length = 0;  // N_axis
    std::size_t stride = 1;  // distance between consecutive samples of one line
    std::size_t count = 0;   // number of lines
    std::size_t inner = 1;   // lines interleaved at stride (product of faster axes)

    LineLayout(const GridSpec& grid, int axis);
    std::size_t start(std::size_t line) const {
        const std::size_t lo = line % inner;
        const std::size_t hi = line / inner;
        return lo + hi * inner * length;
    }
};

/// Calls fn(i) for every i in [0, n).
template <class F>
void for_each_index(std::size_t n, Exec exec, F&& fn) {
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) fn(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < n; ++i) fn(i);
    }
}

/// Sum of fn(i) over i in [0, n), accumulated in fixed-size blocks whose
/// partial sums are combined serially in block order.
template <class T, class F>
T reduce(std::size_t n, Exec exec, F&& fn) {
    constexpr std::size_t block = 256;
    const std::size_t nblocks = (n + block - 1) / block;
    std::vector<T> partial(nblocks, T{});
    for_each_index(nblocks, exec, [&](std::size_t b) {
        T acc{};
        const std::size_t end = std::min(n, (b + 1) * block);
        for (std::size_t i = b * block; i < end; ++i) acc += fn(i);
        partial[b] = acc;
    });
    T total{};
    for (const T& p : partial) total += p;
    return total;
}

/// In-place unnormalized DFT of every line along `axis`.
/// sign = -1 is the forward transform, +1 the backward one.
void line_fft(std::span<cplx> data, const GridSpec& grid, int axis, int sign, Exec exec = Exec::parallel);

/// O(N^2) direct DFT of every line along `axis`; test reference for line_fft.
void line_dft_reference(std::span<cplx> data, const GridSpec& grid, int axis, int sign);

/// Multiply each line along `axis` (in place) by table[m + length * t], where
/// m is the position along the line and t = table_index(line start).
/// Used for multipliers that depend on one spectral and one spatial coordinate.
template <class IndexFn>
void multiply_lines(std::span<cplx> data, const LineLayout& lay, std::span<const cplx> table, IndexFn&& table_index,
                    Exec exec) {
    for_each_index(lay.count, exec, [&](std::size_t line) {
        const std::size_t s = lay.start(line);
        const cplx* row = table.data() + lay.length * table_index(s);
        cplx* p = data.data() + s;
        for (std::size_t m = 0; m < lay.length; ++m) p[m * lay.stride] *= row[m];
    });
}

/// Elementwise data[i] *= factor[i].
void multiply(std::span<cplx> data, std::span<const cplx> factor, Exec exec = Exec::parallel);

}  // namespace rnls::kernels
