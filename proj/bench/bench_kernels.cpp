// Serial reference vs OpenMP kernels. Run with --benchmark_filter to pick a kernel.
#include <vector>

#include <benchmark/benchmark.h>

#include "attn/kernels.hpp"
#include "attn/random.hpp"

namespace k = attn::kernels;

namespace {

std::vector<attn::Point2> random_points(std::size_t n, attn::Geometry g)
{
    attn::Rng rng(1);
    std::vector<attn::Point2> pts(n);
    for (auto& p : pts) {
        p = {rng.uniform(0.0, g.width - 1.0), rng.uniform(0.0, g.height - 1.0)};
    }
    return pts;
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed)
{
    attn::Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) {
        x = rng.uniform(-1.0, 1.0);
    }
    return v;
}

template <bool Parallel>
void BM_splat(benchmark::State& state)
{
    const attn::Geometry g{480, 848};
    const auto pts = random_points(4, g);
    std::vector<double> out(g.pixel_count());
    const double sigma = static_cast<double>(state.range(0));
    for (auto _ : state) {
        std::fill(out.begin(), out.end(), 0.0);
        if constexpr (Parallel) {
            k::parallel::splat_gaussians(pts, g, sigma, 4.0, out);
        } else {
            k::serial::splat_gaussians(pts, g, sigma, 4.0, out);
        }
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_decay_max(benchmark::State& state)
{
    const std::size_t n = 480 * 848;
    const auto a = random_values(n, 1);
    const auto b = random_values(n, 2);
    std::vector<double> out(n);
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::parallel::decay_max(a, b, 0.83, out);
        } else {
            k::serial::decay_max(a, b, 0.83, out);
        }
        benchmark::DoNotOptimize(out.data());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * n * 3 * sizeof(double)));
}

template <bool Parallel>
void BM_scale_u8(benchmark::State& state)
{
    const std::size_t n = 480 * 848 * 3;
    std::vector<std::uint8_t> in(n);
    for (std::size_t i = 0; i < n; ++i) {
        in[i] = static_cast<std::uint8_t>(i * 31);
    }
    std::vector<std::uint8_t> out(n);
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::parallel::scale_u8(in, 1.85, out);
        } else {
            k::serial::scale_u8(in, 1.85, out);
        }
        benchmark::DoNotOptimize(out.data());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * n * 2));
}

template <bool Parallel>
void BM_conv_forward(benchmark::State& state)
{
    const k::ConvShape shape{4, 8, 16, 64, 64, 3};
    const auto in = random_values(shape.input_size(), 1);
    const auto w = random_values(shape.weight_size(), 2);
    const auto b = random_values(static_cast<std::size_t>(shape.out_channels), 3);
    std::vector<double> out(shape.output_size());
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::parallel::conv2d_forward(shape, in, w, b, out);
        } else {
            k::serial::conv2d_forward(shape, in, w, b, out);
        }
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_conv_backward(benchmark::State& state)
{
    const k::ConvShape shape{4, 8, 16, 64, 64, 3};
    const auto in = random_values(shape.input_size(), 1);
    const auto w = random_values(shape.weight_size(), 2);
    const auto gout = random_values(shape.output_size(), 3);
    std::vector<double> gin(shape.input_size());
    std::vector<double> gw(shape.weight_size());
    std::vector<double> gb(static_cast<std::size_t>(shape.out_channels));
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::parallel::conv2d_backward_input(shape, gout, w, gin);
            k::parallel::conv2d_backward_params(shape, in, gout, gw, gb);
        } else {
            k::serial::conv2d_backward_input(shape, gout, w, gin);
            k::serial::conv2d_backward_params(shape, in, gout, gw, gb);
        }
        benchmark::DoNotOptimize(gin.data());
        benchmark::DoNotOptimize(gw.data());
    }
}

} // namespace

BENCHMARK(BM_splat<false>)->Name("splat/serial")->Arg(1)->Arg(8);
BENCHMARK(BM_splat<true>)->Name("splat/parallel")->Arg(1)->Arg(8);
BENCHMARK(BM_decay_max<false>)->Name("decay_max/serial");
BENCHMARK(BM_decay_max<true>)->Name("decay_max/parallel");
BENCHMARK(BM_scale_u8<false>)->Name("scale_u8/serial");
BENCHMARK(BM_scale_u8<true>)->Name("scale_u8/parallel");
BENCHMARK(BM_conv_forward<false>)->Name("conv_forward/serial");
BENCHMARK(BM_conv_forward<true>)->Name("conv_forward/parallel");
BENCHMARK(BM_conv_backward<false>)->Name("conv_backward/serial");
BENCHMARK(BM_conv_backward<true>)->Name("conv_backward/parallel");

BENCHMARK_MAIN();
