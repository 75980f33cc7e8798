#pragma once

// Data-parallel inner loops. Every kernel exists twice: a plain serial
// reference and an OpenMP version. Both share the same per-element routine,
// so results are bit-identical for any thread count.

#include <cstddef>
#include <cstdint>
#include <exception>
#include <span>

#include "attn/image.hpp"

namespace attn::kernels {

struct ConvShape {
    int batch = 1;
    int in_channels = 1;
    int out_channels = 1;
    int height = 1;
    int width = 1;
    int kernel = 3; // odd; zero "same" padding, stride 1

    std::size_t input_size() const;
    std::size_t output_size() const;
    std::size_t weight_size() const;
};

namespace serial {

/// out(q) = max(out(q), exp(-|q-p|^2 / (2 sigma^2))) for every point p with |q-p| <= radius_sigmas * sigma.
void splat_gaussians(std::span<const Point2> points, Geometry geometry, double sigma, double radius_sigmas,
                     std::span<double> out);

/// out = max(current, keep * previous), element-wise.
void decay_max(std::span<const double> current, std::span<const double> previous, double keep,
               std::span<double> out);

/// out = clamp(round(in * factor), 0, 255), rounding half away from zero.
void scale_u8(std::span<const std::uint8_t> in, double factor, std::span<std::uint8_t> out);

void conv2d_forward(const ConvShape& shape, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output);
void conv2d_backward_input(const ConvShape& shape, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input);
/// Accumulates into grad_weight / grad_bias.
void conv2d_backward_params(const ConvShape& shape, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias);

} // namespace serial

namespace parallel {

void splat_gaussians(std::span<const Point2> points, Geometry geometry, double sigma, double radius_sigmas,
                     std::span<double> out);
void decay_max(std::span<const double> current, std::span<const double> previous, double keep,
               std::span<double> out);
void scale_u8(std::span<const std::uint8_t> in, double factor, std::span<std::uint8_t> out);

void conv2d_forward(const ConvShape& shape, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output);
void conv2d_backward_input(const ConvShape& shape, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input);
void conv2d_backward_params(const ConvShape& shape, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias);

} // namespace parallel

/// Runs fn(i) for i in [0, n) across OpenMP threads. The exception from the lowest failing
/// index is rethrown after the loop, so errors are reported deterministically.
template <typename Fn>
void parallel_for(std::ptrdiff_t n, Fn&& fn)
{
    std::exception_ptr error;
    std::ptrdiff_t error_index = n;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            fn(i);
        } catch (...) {
#pragma omp critical(attn_parallel_for_error)
            if (i < error_index) {
                error_index = i;
                error = std::current_exception();
            }
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

/// Sets the OpenMP worker count used by the parallel kernels (n < 1 is treated as 1).
void set_workers(int n);
int workers();

} // namespace attn::kernels
