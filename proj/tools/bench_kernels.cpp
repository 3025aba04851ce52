// Times the serial reference kernels against the OpenMP variants and prints
// a speedup table. Sizes cover the shapes the captioner actually produces
// (skinny gemms, gemvs) plus square ones for scaling.

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "grucap/kernels.hpp"
#include "grucap/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(int repeats, const std::function<void()>& fn) {
    fn();  // warm up
    const auto start = Clock::now();
    for (int i = 0; i < repeats; ++i) fn();
    const auto stop = Clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / repeats;
}

std::vector<double> random_buffer(std::size_t n, grucap::Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

void bench_gemm(std::size_t m, std::size_t k, std::size_t n, grucap::Rng& rng) {
    const auto a = random_buffer(m * k, rng);
    const auto b = random_buffer(k * n, rng);
    std::vector<double> out(m * n);
    const int repeats = m * k * n > (1u << 24) ? 3 : 20;
    const double serial_ms = time_ms(repeats, [&] {
        grucap::kernels::serial::gemm_nn(a.data(), b.data(), out.data(), m, k, n, false);
    });
    const double parallel_ms = time_ms(repeats, [&] {
        grucap::kernels::parallel::gemm_nn(a.data(), b.data(), out.data(), m, k, n, false);
    });
    std::printf("gemm_nn  %5zu x %5zu x %5zu   serial %9.3f ms   openmp %9.3f ms   x%.2f\n",
                m, k, n, serial_ms, parallel_ms, serial_ms / parallel_ms);
}

void bench_map(std::size_t n, grucap::Rng& rng) {
    const auto x = random_buffer(n, rng);
    std::vector<double> y(n);
    const double serial_ms =
        time_ms(10, [&] { grucap::kernels::serial::tanh_eval(x.data(), y.data(), n); });
    const double parallel_ms =
        time_ms(10, [&] { grucap::kernels::parallel::tanh_eval(x.data(), y.data(), n); });
    std::printf("tanh     %15zu         serial %9.3f ms   openmp %9.3f ms   x%.2f\n", n,
                serial_ms, parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("built without openmp; both columns run the same loops\n");
#endif
    grucap::Rng rng(1234);
    bench_gemm(64, 64, 64, rng);
    bench_gemm(256, 256, 256, rng);
    bench_gemm(512, 512, 512, rng);
    bench_gemm(64, 2048, 64, rng);  // feature-projection shape
    bench_map(1u << 16, rng);
    bench_map(1u << 22, rng);
    return 0;
}
