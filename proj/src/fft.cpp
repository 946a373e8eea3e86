#include "wp/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace wp {
namespace fft {

namespace {

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

std::mutex plan_mutex;
std::map<std::size_t, PlanPair>& plan_cache() {
    static std::map<std::size_t, PlanPair> cache;
    return cache;
}

// FFTW_ESTIMATE keeps planning deterministic and cheap; plans are reused
// with the new-array execute interface.
PlanPair get_plans(std::size_t n) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto& cache = plan_cache();
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<std::complex<double>> a(n), b(n);
    PlanPair p;
    p.fwd = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(a.data()),
                             reinterpret_cast<fftw_complex*>(b.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    p.bwd = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(a.data()),
                             reinterpret_cast<fftw_complex*>(b.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!p.fwd || !p.bwd) throw std::runtime_error("fftw plan creation failed");
    cache[n] = p;
    return p;
}

}  // namespace

std::vector<std::complex<double>> forward(const std::vector<std::complex<double>>& in) {
    if (in.empty()) return {};
    PlanPair p = get_plans(in.size());
    std::vector<std::complex<double>> src(in), out(in.size());
    fftw_execute_dft(p.fwd, reinterpret_cast<fftw_complex*>(src.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

std::vector<std::complex<double>> backward(const std::vector<std::complex<double>>& in) {
    if (in.empty()) return {};
    PlanPair p = get_plans(in.size());
    std::vector<std::complex<double>> src(in), out(in.size());
    fftw_execute_dft(p.bwd, reinterpret_cast<fftw_complex*>(src.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

}  // namespace fft
}  // namespace wp
