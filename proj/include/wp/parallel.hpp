#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace wp {

/// Parallel loop over [0, n). Iterations must be independent.
template <class Fn>
void parallel_for(std::ptrdiff_t n, Fn&& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
#else
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
#endif
}

template <class Fn>
void serial_for(std::ptrdiff_t n, Fn&& fn) {
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
}

// Accumulation into a shared vector with a fixed chunk decomposition.
// Each chunk owns a private buffer; buffers are reduced in chunk order,
// so the result does not depend on the number of threads.
class ChunkedAccumulator {
  public:
    ChunkedAccumulator(std::size_t len, int nchunks = 64)
        : len_(len), bufs_(static_cast<std::size_t>(nchunks)) {}

    int chunks() const { return static_cast<int>(bufs_.size()); }

    std::vector<std::complex<double>>& buffer(int chunk) {
        auto& b = bufs_[static_cast<std::size_t>(chunk)];
        if (b.empty()) b.assign(len_, {0.0, 0.0});
        return b;
    }

    /// Reduce all chunk buffers in index order.
    std::vector<std::complex<double>> reduce() const {
        std::vector<std::complex<double>> out(len_, {0.0, 0.0});
        for (const auto& b : bufs_) {
            if (b.empty()) continue;
            for (std::size_t i = 0; i < len_; ++i) out[i] += b[i];
        }
        return out;
    }

  private:
    std::size_t len_;
    std::vector<std::vector<std::complex<double>>> bufs_;
};

/// Deterministic chunked sum: f(i) summed over [0,n) with a fixed
/// chunk tree, parallel over chunks.
template <class Fn>
double chunked_sum(std::ptrdiff_t n, Fn&& fn, int nchunks = 64) {
    if (n <= 0) return 0.0;
    if (nchunks > n) nchunks = static_cast<int>(n);
    std::vector<double> partial(static_cast<std::size_t>(nchunks), 0.0);
    const std::ptrdiff_t per = (n + nchunks - 1) / nchunks;
    parallel_for(nchunks, [&](std::ptrdiff_t c) {
        const std::ptrdiff_t lo = c * per;
        const std::ptrdiff_t hi = std::min(n, lo + per);
        double s = 0.0;
        for (std::ptrdiff_t i = lo; i < hi; ++i) s += fn(i);
        partial[static_cast<std::size_t>(c)] = s;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace wp
