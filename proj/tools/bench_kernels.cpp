// Timing comparison of the serial reference kernels against the OpenMP
// versions, plus a bit-identity spot check on the benchmark inputs.
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <random>
#include <vector>

#include "schnet/kernels.hpp"

using namespace schnet::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53 - 0.5;
    return v;
}

template <typename F>
double time_ms(F&& f, int reps) {
    f();  // warm-up
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) f();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

bool equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a == b;  // bit-identical by contract
}

void report(const char* name, double serial_ms, double omp_ms, bool identical) {
    std::printf("%-24s serial %9.3f ms   omp %9.3f ms   speedup %5.2fx   %s\n",
                name, serial_ms, omp_ms, serial_ms / omp_ms,
                identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
    std::mt19937_64 rng(42);
    const int reps = 5;
    std::printf("kernel benchmark (averaged over %d runs)\n\n", reps);

    {
        const std::size_t n = 512, p = 384, m = 512;
        auto a = random_vec(n * p, rng);
        auto b = random_vec(p * m, rng);
        std::vector<double> c1(n * m), c2(n * m);
        const double ts = time_ms([&] { matmul_serial(a.data(), b.data(), c1.data(), n, p, m); }, reps);
        const double tp = time_ms([&] { matmul_omp(a.data(), b.data(), c2.data(), n, p, m); }, reps);
        std::printf("matmul %zux%zux%zu\n", n, p, m);
        report("  matmul", ts, tp, equal(c1, c2));
    }
    {
        const std::size_t n = 200000, d = 64, nseg = 5000;
        auto x = random_vec(n * d, rng);
        std::vector<std::int64_t> seg(n);
        for (auto& s : seg) s = static_cast<std::int64_t>(rng() % nseg);
        std::vector<double> o1(nseg * d), o2(nseg * d);
        const double ts = time_ms([&] {
            std::fill(o1.begin(), o1.end(), 0.0);
            segment_sum_serial(x.data(), seg.data(), o1.data(), n, d, nseg);
        }, reps);
        const double tp = time_ms([&] {
            std::fill(o2.begin(), o2.end(), 0.0);
            segment_sum_omp(x.data(), seg.data(), o2.data(), n, d, nseg);
        }, reps);
        std::printf("segment_sum %zu rows x %zu cols -> %zu segments\n", n, d, nseg);
        report("  segment_sum", ts, tp, equal(o1, o2));
    }
    {
        const std::size_t rows = 100000, d = 64, k = 400000;
        auto x = random_vec(rows * d, rng);
        std::vector<std::int64_t> idx(k);
        for (auto& i : idx) i = static_cast<std::int64_t>(rng() % rows);
        std::vector<double> o1(k * d), o2(k * d);
        const double ts = time_ms([&] { gather_rows_serial(x.data(), idx.data(), o1.data(), k, d); }, reps);
        const double tp = time_ms([&] { gather_rows_omp(x.data(), idx.data(), o2.data(), k, d); }, reps);
        std::printf("gather_rows %zu picks of %zu-wide rows\n", k, d);
        report("  gather_rows", ts, tp, equal(o1, o2));
    }
    {
        const std::size_t n = 20000000;
        auto a = random_vec(n, rng);
        auto b = random_vec(n, rng);
        std::vector<double> o1(n), o2(n);
        const double ts = time_ms([&] { ew_binary_serial(EwOp::mul, a.data(), b.data(), o1.data(), n); }, reps);
        const double tp = time_ms([&] { ew_binary_omp(EwOp::mul, a.data(), b.data(), o2.data(), n); }, reps);
        std::printf("ew_binary mul, %zu elements\n", n);
        report("  ew_binary", ts, tp, equal(o1, o2));
    }
    return 0;
}
