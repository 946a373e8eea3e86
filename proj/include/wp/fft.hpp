#pragma once

#include <complex>
#include <vector>

namespace wp {

// Thin wrapper over FFTW with a process-wide plan cache keyed by size.
// Plan creation is serialized internally; execution on caller-owned
// buffers is safe from multiple threads.
namespace fft {

/// In-order forward DFT: out[m] = sum_j in[j] e^{-2 pi i j m / n}.
std::vector<std::complex<double>> forward(const std::vector<std::complex<double>>& in);

/// Unnormalized backward DFT: out[j] = sum_m in[m] e^{+2 pi i j m / n}.
std::vector<std::complex<double>> backward(const std::vector<std::complex<double>>& in);

}  // namespace fft

}  // namespace wp
