// Times the OpenMP kernels against the serial reference implementations.
// Usage: kernel_bench [pixels] (default 1<<20, i.e. a ~1 megapixel image).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "chromaforge/kernels.hpp"
#include "chromaforge/rng.hpp"
#include "reference_kernels.hpp"

using namespace chromaforge;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn(); // warm up
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void report(const std::string& name, double serial_ms, double parallel_ms) {
    std::printf("%-24s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx\n",
                name.c_str(), serial_ms, parallel_ms, serial_ms / parallel_ms);
}

} // namespace

int main(int argc, char** argv) {
    const size_t pixels = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1 << 20;
    const int reps = 5;
    Rng rng(7);

    // Curve application over a large RGB buffer.
    {
        const int k = 64;
        std::vector<double> in(pixels * 3), out(in.size()), ref_out(in.size());
        std::vector<double> theta(3 * k), prefix(3 * (k + 1), 0.0);
        for (double& v : in) v = rng.uniform();
        for (double& v : theta) v = rng.uniform();
        for (int c = 0; c < 3; ++c) {
            double run = 0.0, total = 0.0;
            for (int i = 0; i < k; ++i) total += theta[c * k + i];
            for (int i = 0; i < k; ++i) theta[c * k + i] /= total;
            for (int i = 0; i < k; ++i) {
                run += theta[c * k + i];
                prefix[c * (k + 1) + i + 1] = run;
            }
        }
        double s = time_ms([&] { ref::apply_curves(in.data(), ref_out.data(), pixels,
                                                   3, k, theta.data()); }, reps);
        double p = time_ms([&] { kernels::apply_curves(in.data(), out.data(), pixels,
                                                       3, k, theta.data(),
                                                       prefix.data(), nullptr, 1); },
                           reps);
        report("apply_curves K=64", s, p);
    }

    // Conv 3x3 on a 128x128x16 -> 32 activation block.
    {
        const size_t h = 128, w = 128;
        const int cin = 16, cout = 32;
        std::vector<double> in(h * w * cin), weights(size_t(cout) * 9 * cin),
            bias(cout), out(h * w * cout), ref_out(out.size());
        for (double& v : in) v = rng.uniform(-1, 1);
        for (double& v : weights) v = rng.uniform(-0.1, 0.1);
        for (double& v : bias) v = rng.uniform(-0.1, 0.1);
        double s = time_ms([&] { ref::conv3x3_forward(in.data(), h, w, cin,
                                                      weights.data(), bias.data(),
                                                      cout, ref_out.data()); }, reps);
        double p = time_ms([&] { kernels::conv3x3_forward(in.data(), h, w, cin,
                                                          weights.data(), bias.data(),
                                                          cout, out.data()); }, reps);
        report("conv3x3 128x128x16->32", s, p);
    }

    // Dense 4096 -> 4096.
    {
        const size_t n_in = 4096, n_out = 4096;
        std::vector<double> in(n_in), weights(n_in * n_out), bias(n_out),
            out(n_out), ref_out(n_out);
        for (double& v : in) v = rng.uniform(-1, 1);
        for (double& v : weights) v = rng.uniform(-0.05, 0.05);
        double s = time_ms([&] { ref::dense_forward(in.data(), n_in, weights.data(),
                                                    bias.data(), n_out,
                                                    ref_out.data()); }, reps);
        double p = time_ms([&] { kernels::dense_forward(in.data(), n_in,
                                                        weights.data(), bias.data(),
                                                        n_out, out.data()); }, reps);
        report("dense 4096x4096", s, p);
    }

    // Blocked scalar reduction.
    {
        std::vector<double> v(pixels * 3);
        for (double& x : v) x = rng.uniform(-1, 1);
        volatile double sink = 0.0;
        double s = time_ms([&] { sink = ref::sum(v.data(), v.size()); }, reps);
        double p = time_ms([&] { sink = kernels::block_sum(v.data(), v.size()); },
                           reps);
        (void)sink;
        report("sum reduction", s, p);
    }
    return 0;
}
