#include "attn/kernels.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

namespace attn::kernels {

std::size_t ConvShape::input_size() const
{
    return static_cast<std::size_t>(batch) * in_channels * height * width;
}

std::size_t ConvShape::output_size() const
{
    return static_cast<std::size_t>(batch) * out_channels * height * width;
}

std::size_t ConvShape::weight_size() const
{
    return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel;
}

namespace {

void splat_row(std::span<const Point2> points, Geometry geometry, double sigma, double radius_sigmas, int y,
               double* row)
{
    const double radius = radius_sigmas * sigma;
    const double radius2 = radius * radius;
    const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
    for (const Point2& p : points) {
        const double dy = static_cast<double>(y) - p.y;
        if (std::abs(dy) > radius) {
            continue;
        }
        const int x0 = std::max(0, static_cast<int>(std::floor(p.x - radius)));
        const int x1 = std::min(geometry.width - 1, static_cast<int>(std::ceil(p.x + radius)));
        for (int x = x0; x <= x1; ++x) {
            const double dx = static_cast<double>(x) - p.x;
            const double d2 = dx * dx + dy * dy;
            if (d2 > radius2) {
                continue;
            }
            const double v = std::exp(-d2 * inv_two_var);
            if (v > row[x]) {
                row[x] = v;
            }
        }
    }
}

inline std::uint8_t scale_one(std::uint8_t v, double factor)
{
    const long r = std::lround(static_cast<double>(v) * factor);
    return static_cast<std::uint8_t>(std::clamp(r, 0L, 255L));
}

// One output plane (b, o).
void conv_forward_plane(const ConvShape& s, std::span<const double> input, std::span<const double> weight,
                        std::span<const double> bias, std::span<double> output, int b, int o)
{
    const int pad = s.kernel / 2;
    const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
    double* out = output.data() + (static_cast<std::size_t>(b) * s.out_channels + o) * plane;
    std::fill(out, out + plane, bias[o]);
    for (int c = 0; c < s.in_channels; ++c) {
        const double* in = input.data() + (static_cast<std::size_t>(b) * s.in_channels + c) * plane;
        const double* w = weight.data() + (static_cast<std::size_t>(o) * s.in_channels + c) * s.kernel * s.kernel;
        for (int ky = 0; ky < s.kernel; ++ky) {
            for (int kx = 0; kx < s.kernel; ++kx) {
                const double wk = w[ky * s.kernel + kx];
                const int dy = ky - pad;
                const int dx = kx - pad;
                const int y0 = std::max(0, -dy);
                const int y1 = std::min(s.height, s.height - dy);
                const int x0 = std::max(0, -dx);
                const int x1 = std::min(s.width, s.width - dx);
                for (int y = y0; y < y1; ++y) {
                    double* orow = out + static_cast<std::size_t>(y) * s.width;
                    const double* irow = in + static_cast<std::size_t>(y + dy) * s.width + dx;
                    for (int x = x0; x < x1; ++x) {
                        orow[x] += wk * irow[x];
                    }
                }
            }
        }
    }
}

// One input-gradient plane (b, c).
void conv_backward_input_plane(const ConvShape& s, std::span<const double> grad_output,
                               std::span<const double> weight, std::span<double> grad_input, int b, int c)
{
    const int pad = s.kernel / 2;
    const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
    double* gin = grad_input.data() + (static_cast<std::size_t>(b) * s.in_channels + c) * plane;
    std::fill(gin, gin + plane, 0.0);
    for (int o = 0; o < s.out_channels; ++o) {
        const double* gout = grad_output.data() + (static_cast<std::size_t>(b) * s.out_channels + o) * plane;
        const double* w = weight.data() + (static_cast<std::size_t>(o) * s.in_channels + c) * s.kernel * s.kernel;
        for (int ky = 0; ky < s.kernel; ++ky) {
            for (int kx = 0; kx < s.kernel; ++kx) {
                const double wk = w[ky * s.kernel + kx];
                const int dy = ky - pad;
                const int dx = kx - pad;
                // out(y, x) reads in(y + dy, x + dx)
                const int y0 = std::max(0, -dy);
                const int y1 = std::min(s.height, s.height - dy);
                const int x0 = std::max(0, -dx);
                const int x1 = std::min(s.width, s.width - dx);
                for (int y = y0; y < y1; ++y) {
                    const double* grow = gout + static_cast<std::size_t>(y) * s.width;
                    double* irow = gin + static_cast<std::size_t>(y + dy) * s.width + dx;
                    for (int x = x0; x < x1; ++x) {
                        irow[x] += wk * grow[x];
                    }
                }
            }
        }
    }
}

// Parameter gradients owned by output channel o, summed over the batch in order.
void conv_backward_params_channel(const ConvShape& s, std::span<const double> input,
                                  std::span<const double> grad_output, std::span<double> grad_weight,
                                  std::span<double> grad_bias, int o)
{
    const int pad = s.kernel / 2;
    const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
    for (int b = 0; b < s.batch; ++b) {
        const double* gout = grad_output.data() + (static_cast<std::size_t>(b) * s.out_channels + o) * plane;
        double bias_acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
            bias_acc += gout[i];
        }
        grad_bias[o] += bias_acc;
        for (int c = 0; c < s.in_channels; ++c) {
            const double* in = input.data() + (static_cast<std::size_t>(b) * s.in_channels + c) * plane;
            double* gw = grad_weight.data() + (static_cast<std::size_t>(o) * s.in_channels + c) * s.kernel * s.kernel;
            for (int ky = 0; ky < s.kernel; ++ky) {
                for (int kx = 0; kx < s.kernel; ++kx) {
                    const int dy = ky - pad;
                    const int dx = kx - pad;
                    const int y0 = std::max(0, -dy);
                    const int y1 = std::min(s.height, s.height - dy);
                    const int x0 = std::max(0, -dx);
                    const int x1 = std::min(s.width, s.width - dx);
                    double acc = 0.0;
                    for (int y = y0; y < y1; ++y) {
                        const double* grow = gout + static_cast<std::size_t>(y) * s.width;
                        const double* irow = in + static_cast<std::size_t>(y + dy) * s.width + dx;
                        for (int x = x0; x < x1; ++x) {
                            acc += grow[x] * irow[x];
                        }
                    }
                    gw[ky * s.kernel + kx] += acc;
                }
            }
        }
    }
}

} // namespace

namespace serial {

void splat_gaussians(std::span<const Point2> points, Geometry geometry, double sigma, double radius_sigmas,
                     std::span<double> out)
{
    for (int y = 0; y < geometry.height; ++y) {
        splat_row(points, geometry, sigma, radius_sigmas, y, out.data() + static_cast<std::size_t>(y) * geometry.width);
    }
}

void decay_max(std::span<const double> current, std::span<const double> previous, double keep,
               std::span<double> out)
{
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::max(current[i], keep * previous[i]);
    }
}

void scale_u8(std::span<const std::uint8_t> in, double factor, std::span<std::uint8_t> out)
{
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = scale_one(in[i], factor);
    }
}

void conv2d_forward(const ConvShape& shape, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output)
{
    for (int b = 0; b < shape.batch; ++b) {
        for (int o = 0; o < shape.out_channels; ++o) {
            conv_forward_plane(shape, input, weight, bias, output, b, o);
        }
    }
}

void conv2d_backward_input(const ConvShape& shape, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input)
{
    for (int b = 0; b < shape.batch; ++b) {
        for (int c = 0; c < shape.in_channels; ++c) {
            conv_backward_input_plane(shape, grad_output, weight, grad_input, b, c);
        }
    }
}

void conv2d_backward_params(const ConvShape& shape, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias)
{
    for (int o = 0; o < shape.out_channels; ++o) {
        conv_backward_params_channel(shape, input, grad_output, grad_weight, grad_bias, o);
    }
}

} // namespace serial

namespace parallel {

void splat_gaussians(std::span<const Point2> points, Geometry geometry, double sigma, double radius_sigmas,
                     std::span<double> out)
{
#pragma omp parallel for schedule(static)
    for (int y = 0; y < geometry.height; ++y) {
        splat_row(points, geometry, sigma, radius_sigmas, y, out.data() + static_cast<std::size_t>(y) * geometry.width);
    }
}

void decay_max(std::span<const double> current, std::span<const double> previous, double keep,
               std::span<double> out)
{
    const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[i] = std::max(current[i], keep * previous[i]);
    }
}

void scale_u8(std::span<const std::uint8_t> in, double factor, std::span<std::uint8_t> out)
{
    const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[i] = scale_one(in[i], factor);
    }
}

void conv2d_forward(const ConvShape& shape, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output)
{
    const int planes = shape.batch * shape.out_channels;
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        conv_forward_plane(shape, input, weight, bias, output, p / shape.out_channels, p % shape.out_channels);
    }
}

void conv2d_backward_input(const ConvShape& shape, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input)
{
    const int planes = shape.batch * shape.in_channels;
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        conv_backward_input_plane(shape, grad_output, weight, grad_input, p / shape.in_channels,
                                  p % shape.in_channels);
    }
}

void conv2d_backward_params(const ConvShape& shape, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias)
{
#pragma omp parallel for schedule(static)
    for (int o = 0; o < shape.out_channels; ++o) {
        conv_backward_params_channel(shape, input, grad_output, grad_weight, grad_bias, o);
    }
}

} // namespace parallel

void set_workers(int n)
{
    omp_set_num_threads(std::max(1, n));
}

int workers()
{
    return omp_get_max_threads();
}

} // namespace attn::kernels
