// Times the OpenMP kernels against the serial reference at mapper-sized
// shapes and checks the outputs stay bit-identical.

#include "mmhcl/kernels.hpp"
#include "mmhcl/rng.hpp"

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace mmhcl;

namespace {

Mat random_mat(int r, int c, SeededRng& rng) {
    Mat m(r, c);
    for (double& x : m.data) x = rng.gaussian();
    return m;
}

template <typename F>
double time_ms(F&& f, int reps) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) f();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void bench_case(const char* name, int m, int k, int n, int reps) {
    SeededRng rng(42);
    const Mat a = random_mat(m, k, rng);
    const Mat b = random_mat(n, k, rng);
    Mat out_par, out_ref;
    const double ms_par = time_ms([&] { matmul_nt(a, b, out_par); }, reps);
    const double ms_ref = time_ms([&] { reference::matmul_nt(a, b, out_ref); }, reps);
    const bool identical = out_par.data == out_ref.data;
    std::printf("%-28s %4dx%-4dx%-4d  omp %8.3f ms   serial %8.3f ms   speedup %5.2fx   %s\n",
                name, m, k, n, ms_par, ms_ref, ms_ref / ms_par,
                identical ? "bit-identical" : "MISMATCH");
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("built without openmp: parallel kernels run serially\n");
#endif
    bench_case("mapper fwd (batch x hidden)", 256, 48, 512, 50);
    bench_case("mapper hidden (512 -> 256)", 256, 512, 256, 50);
    bench_case("mapper out (256 -> 32)", 256, 256, 32, 50);
    bench_case("grad weights (out x in)", 512, 256, 48, 50);
    bench_case("classifier (batch x classes)", 1024, 32, 20, 50);
    return 0;
}
