#include <doctest.h>

#include <stdexcept>
#include <vector>

#include "attn/kernels.hpp"
#include "attn/random.hpp"

namespace k = attn::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed)
{
    attn::Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) {
        x = rng.uniform(-1.0, 1.0);
    }
    return v;
}

const int kWorkerCounts[] = {1, 2, 3, 8};

} // namespace

TEST_CASE("splat_gaussians serial and parallel agree bit for bit")
{
    attn::Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const attn::Geometry g{static_cast<int>(rng.uniform_int(1, 40)), static_cast<int>(rng.uniform_int(1, 40))};
        std::vector<attn::Point2> pts(static_cast<std::size_t>(rng.uniform_int(0, 6)));
        for (auto& p : pts) {
            p = {rng.uniform(0.0, g.width - 1e-9), rng.uniform(0.0, g.height - 1e-9)};
        }
        const double sigma = rng.uniform(0.3, 4.0);
        std::vector<double> ref(g.pixel_count(), 0.0);
        k::serial::splat_gaussians(pts, g, sigma, 4.0, ref);
        for (int w : kWorkerCounts) {
            k::set_workers(w);
            std::vector<double> out(g.pixel_count(), 0.0);
            k::parallel::splat_gaussians(pts, g, sigma, 4.0, out);
            CHECK(out == ref);
        }
    }
    k::set_workers(1);
}

TEST_CASE("decay_max and scale_u8 serial and parallel agree")
{
    const auto a = random_values(10'001, 1);
    const auto b = random_values(10'001, 2);
    std::vector<double> ref(a.size());
    k::serial::decay_max(a, b, 0.83, ref);
    std::vector<std::uint8_t> in(70'000);
    for (std::size_t i = 0; i < in.size(); ++i) {
        in[i] = static_cast<std::uint8_t>(i * 37 + i / 256);
    }
    std::vector<std::uint8_t> ref8(in.size());
    k::serial::scale_u8(in, 1.37, ref8);
    for (int w : kWorkerCounts) {
        k::set_workers(w);
        std::vector<double> out(a.size());
        k::parallel::decay_max(a, b, 0.83, out);
        CHECK(out == ref);
        std::vector<std::uint8_t> out8(in.size());
        k::parallel::scale_u8(in, 1.37, out8);
        CHECK(out8 == ref8);
    }
    k::set_workers(1);
}

TEST_CASE("scale_u8 rounds half away from zero and clamps")
{
    const std::vector<std::uint8_t> in{1, 3, 200, 200, 255, 0};
    std::vector<std::uint8_t> out(in.size());
    k::serial::scale_u8(in, 0.5, out);
    CHECK(out[0] == 1); // 0.5 -> 1
    CHECK(out[1] == 2); // 1.5 -> 2
    k::serial::scale_u8(in, 1.85, out);
    CHECK(out[2] == 255);
    k::serial::scale_u8(in, 0.75, out);
    CHECK(out[2] == 150);
    CHECK(out[5] == 0);
}

TEST_CASE("conv kernels serial and parallel agree")
{
    const k::ConvShape shape{3, 2, 5, 7, 6, 3};
    const auto in = random_values(shape.input_size(), 1);
    const auto w = random_values(shape.weight_size(), 2);
    const auto bias = random_values(5, 3);
    const auto gout = random_values(shape.output_size(), 4);

    std::vector<double> out_ref(shape.output_size());
    std::vector<double> gin_ref(shape.input_size());
    std::vector<double> gw_ref(shape.weight_size(), 0.5);
    std::vector<double> gb_ref(5, 0.25);
    k::serial::conv2d_forward(shape, in, w, bias, out_ref);
    k::serial::conv2d_backward_input(shape, gout, w, gin_ref);
    k::serial::conv2d_backward_params(shape, in, gout, gw_ref, gb_ref);
    for (int workers : kWorkerCounts) {
        k::set_workers(workers);
        std::vector<double> out(shape.output_size());
        std::vector<double> gin(shape.input_size());
        std::vector<double> gw(shape.weight_size(), 0.5);
        std::vector<double> gb(5, 0.25);
        k::parallel::conv2d_forward(shape, in, w, bias, out);
        k::parallel::conv2d_backward_input(shape, gout, w, gin);
        k::parallel::conv2d_backward_params(shape, in, gout, gw, gb);
        CHECK(out == out_ref);
        CHECK(gin == gin_ref);
        CHECK(gw == gw_ref);
        CHECK(gb == gb_ref);
    }
    k::set_workers(1);
}

TEST_CASE("conv forward matches a direct sum")
{
    const k::ConvShape shape{1, 2, 1, 4, 5, 3};
    const auto in = random_values(shape.input_size(), 5);
    const auto w = random_values(shape.weight_size(), 6);
    const std::vector<double> bias{0.3};
    std::vector<double> out(shape.output_size());
    k::serial::conv2d_forward(shape, in, w, bias, out);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 5; ++x) {
            double s = 0.3;
            for (int c = 0; c < 2; ++c) {
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) {
                        const int iy = y + ky - 1;
                        const int ix = x + kx - 1;
                        if (iy >= 0 && iy < 4 && ix >= 0 && ix < 5) {
                            s += w[(c * 3 + ky) * 3 + kx] * in[(c * 4 + iy) * 5 + ix];
                        }
                    }
                }
            }
            CHECK(out[y * 5 + x] == doctest::Approx(s).epsilon(1e-12));
        }
    }
}

TEST_CASE("parallel_for rethrows the lowest failing index")
{
    k::set_workers(4);
    try {
        k::parallel_for(100, [](std::ptrdiff_t i) {
            if (i % 10 == 7) {
                throw std::runtime_error(std::to_string(i));
            }
        });
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "7");
    }
    k::set_workers(1);
}
