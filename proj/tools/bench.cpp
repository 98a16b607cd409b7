// Serial vs OpenMP timing for the shared kernels, plus a bitwise-equality
// check of the two paths on every benchmarked problem.
#include <chrono>
#include <cstring>
#include <functional>
#include <string>
#include <iomanip>
#include <iostream>
#include <random>
#include <vector>

#include "mvcca/kernels.hpp"

using namespace mvcca::kernels;

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = Clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<double> random_vec(size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    std::vector<double> v(n);
    for (auto& x : v) x = gauss(rng);
    return v;
}

void report(const std::string& name, double serial_ms, double parallel_ms,
            bool identical) {
    std::cout << std::left << std::setw(18) << name << std::right
              << std::setw(12) << std::fixed << std::setprecision(3)
              << serial_ms << std::setw(12) << parallel_ms << std::setw(10)
              << std::setprecision(2) << serial_ms / parallel_ms
              << (identical ? "   bit-identical" : "   MISMATCH") << '\n';
}

}  // namespace

int main() {
    std::mt19937_64 rng(42);
    std::cout << std::left << std::setw(18) << "kernel" << std::right
              << std::setw(12) << "serial ms" << std::setw(12) << "openmp ms"
              << std::setw(10) << "speedup" << '\n';

    {
        const int m = 384, k = 384, n = 384;
        const auto a = random_vec(static_cast<size_t>(m) * k, rng);
        const auto b = random_vec(static_cast<size_t>(k) * n, rng);
        std::vector<double> cs(static_cast<size_t>(m) * n), cp(cs.size());
        const double ts = time_ms(
            [&] { gemm_nn(m, k, n, a.data(), b.data(), cs.data(), 0.0, Exec::Serial); }, 5);
        const double tp = time_ms(
            [&] { gemm_nn(m, k, n, a.data(), b.data(), cp.data(), 0.0, Exec::Parallel); }, 5);
        report("gemm_nn 384^3", ts, tp,
               std::memcmp(cs.data(), cp.data(), cs.size() * 8) == 0);
    }

    {
        const std::vector<int> dims = {40, 40, 40};
        const auto v0 = random_vec(40, rng), v1 = random_vec(40, rng),
                   v2 = random_vec(40, rng);
        const std::vector<const double*> vecs = {v0.data(), v1.data(), v2.data()};
        std::vector<double> ts_buf(64000, 0.0), tp_buf(64000, 0.0);
        const double ts = time_ms(
            [&] { rank1_update(ts_buf.data(), dims, vecs, 1.0, Exec::Serial); }, 50);
        const double tp = time_ms(
            [&] { rank1_update(tp_buf.data(), dims, vecs, 1.0, Exec::Parallel); }, 50);
        report("rank1 40^3", ts, tp,
               std::memcmp(ts_buf.data(), tp_buf.data(), ts_buf.size() * 8) == 0);
    }

    {
        const int lead = 48, d = 48, trail = 48 * 48, p = 48;
        const auto in = random_vec(static_cast<size_t>(lead) * d * trail, rng);
        const auto u = random_vec(static_cast<size_t>(p) * d, rng);
        std::vector<double> outs(static_cast<size_t>(lead) * p * trail),
            outp(outs.size());
        const double ts = time_ms(
            [&] { mode_product(in.data(), lead, d, trail, u.data(), p, outs.data(), Exec::Serial); }, 3);
        const double tp = time_ms(
            [&] { mode_product(in.data(), lead, d, trail, u.data(), p, outp.data(), Exec::Parallel); }, 3);
        report("mode_product 48^4", ts, tp,
               std::memcmp(outs.data(), outp.data(), outs.size() * 8) == 0);
    }

    {
        const std::vector<int> dims = {32, 32, 32};
        const int m = 16;
        const auto t = random_vec(32768, rng);
        const auto f0 = random_vec(32 * m, rng), f1 = random_vec(32 * m, rng),
                   f2 = random_vec(32 * m, rng);
        const std::vector<const double*> factors = {f0.data(), f1.data(), f2.data()};
        std::vector<double> outs(32 * m), outp(32 * m);
        const double ts = time_ms(
            [&] { mttkrp(t.data(), dims, 1, factors, m, outs.data(), Exec::Serial); }, 20);
        const double tp = time_ms(
            [&] { mttkrp(t.data(), dims, 1, factors, m, outp.data(), Exec::Parallel); }, 20);
        report("mttkrp 32^3 m=16", ts, tp,
               std::memcmp(outs.data(), outp.data(), outs.size() * 8) == 0);
    }
    return 0;
}
