#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "schnet/kernels.hpp"

using namespace schnet::kernels;

namespace {
std::vector<double> rand_vec(std::mt19937_64& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v)
        x = 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
    return v;
}
}  // namespace

TEST_CASE("matmul omp is bit-identical to the serial reference") {
    std::mt19937_64 rng(1);
    for (auto [n, p, m] : {std::array<std::size_t, 3>{3, 4, 5},
                           {64, 300, 64},
                           {1, 7, 1},
                           {0, 4, 3}}) {
        auto a = rand_vec(rng, n * p);
        auto b = rand_vec(rng, p * m);
        std::vector<double> c1(n * m), c2(n * m);
        matmul_serial(a.data(), b.data(), c1.data(), n, p, m);
        matmul_omp(a.data(), b.data(), c2.data(), n, p, m);
        CHECK(c1 == c2);
    }
}

TEST_CASE("matmul correctness on a hand example") {
    // [1 2; 3 4] * [5 6; 7 8] = [19 22; 43 50]
    std::vector<double> a{1, 2, 3, 4}, b{5, 6, 7, 8}, c(4);
    matmul(a.data(), b.data(), c.data(), 2, 2, 2);
    CHECK(c == std::vector<double>{19, 22, 43, 50});
}

TEST_CASE("segment_sum omp matches serial bit-exactly") {
    std::mt19937_64 rng(2);
    const std::size_t n = 500, d = 48, nseg = 17;
    auto x = rand_vec(rng, n * d);
    std::vector<std::int64_t> seg(n);
    for (auto& s : seg) s = static_cast<std::int64_t>(rng() % nseg);
    std::vector<double> o1(nseg * d, 0.0), o2(nseg * d, 0.0);
    segment_sum_serial(x.data(), seg.data(), o1.data(), n, d, nseg);
    segment_sum_omp(x.data(), seg.data(), o2.data(), n, d, nseg);
    CHECK(o1 == o2);
}

TEST_CASE("segment_sum scatter semantics with unsorted ids") {
    std::vector<double> x{1, 2, 3, 4};
    std::vector<std::int64_t> seg{2, 0, 2, 1};
    std::vector<double> out(3, 0.0);
    segment_sum(x.data(), seg.data(), out.data(), 4, 1, 3);
    CHECK(out == std::vector<double>{2, 4, 4});
}

TEST_CASE("gather_rows omp matches serial") {
    std::mt19937_64 rng(3);
    const std::size_t rows = 40, d = 8, k = 100;
    auto x = rand_vec(rng, rows * d);
    std::vector<std::int64_t> idx(k);
    for (auto& i : idx) i = static_cast<std::int64_t>(rng() % rows);
    std::vector<double> o1(k * d), o2(k * d);
    gather_rows_serial(x.data(), idx.data(), o1.data(), k, d);
    gather_rows_omp(x.data(), idx.data(), o2.data(), k, d);
    CHECK(o1 == o2);
}

TEST_CASE("ew_binary variants agree; div_safe maps x/0 to 0") {
    std::mt19937_64 rng(4);
    auto a = rand_vec(rng, 1000);
    auto b = rand_vec(rng, 1000);
    b[17] = 0.0;
    for (EwOp op : {EwOp::add, EwOp::sub, EwOp::mul, EwOp::div_safe}) {
        std::vector<double> o1(1000), o2(1000);
        ew_binary_serial(op, a.data(), b.data(), o1.data(), 1000);
        ew_binary_omp(op, a.data(), b.data(), o2.data(), 1000);
        CHECK(o1 == o2);
    }
    std::vector<double> out(1000);
    ew_binary(EwOp::div_safe, a.data(), b.data(), out.data(), 1000);
    CHECK(out[17] == 0.0);
}

TEST_CASE("dispatch honors the parallel toggle") {
    const bool was = parallel_enabled();
    set_parallel(false);
    CHECK_FALSE(parallel_enabled());
    set_parallel(true);
    set_parallel(was);
}
