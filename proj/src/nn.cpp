#include "attn/nn.hpp"

#include <algorithm>
#include <cmath>

#include "attn/errors.hpp"
#include "attn/kernels.hpp"

namespace attn::nn {

Tensor::Tensor(int n_, int c_, int h_, int w_, double fill)
    : n(n_), c(c_), h(h_), w(w_)
{
    if (n_ < 0 || c_ < 0 || h_ < 0 || w_ < 0) {
        throw ValidationError("negative tensor dimension");
    }
    data.assign(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill);
}

std::string Tensor::shape_str() const
{
    return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
}

ConvLayer make_conv(int in_channels, int out_channels, int kernel, std::size_t& cursor)
{
    ConvLayer layer{in_channels, out_channels, kernel, cursor, 0};
    cursor += layer.weight_count();
    layer.bias_offset = cursor;
    cursor += static_cast<std::size_t>(out_channels);
    return layer;
}

DenseLayer make_dense(int in_features, int out_features, std::size_t& cursor)
{
    DenseLayer layer{in_features, out_features, cursor, 0};
    cursor += layer.weight_count();
    layer.bias_offset = cursor;
    cursor += static_cast<std::size_t>(out_features);
    return layer;
}

namespace {

kernels::ConvShape shape_of(const ConvLayer& layer, const Tensor& input)
{
    if (input.c != layer.in_channels) {
        throw ValidationError("conv expects " + std::to_string(layer.in_channels) + " input channels, got tensor "
                              + input.shape_str());
    }
    return {input.n, layer.in_channels, layer.out_channels, input.h, input.w, layer.kernel};
}

} // namespace

Tensor conv_forward(const ConvLayer& layer, std::span<const double> params, const Tensor& input)
{
    const auto shape = shape_of(layer, input);
    Tensor out(input.n, layer.out_channels, input.h, input.w);
    kernels::parallel::conv2d_forward(shape, input.data, params.subspan(layer.weight_offset, layer.weight_count()),
                                      params.subspan(layer.bias_offset, layer.out_channels), out.data);
    return out;
}

Tensor conv_backward(const ConvLayer& layer, std::span<const double> params, const Tensor& input,
                     const Tensor& grad_output, std::span<double> grads, bool want_input_grad)
{
    const auto shape = shape_of(layer, input);
    kernels::parallel::conv2d_backward_params(shape, input.data, grad_output.data,
                                              grads.subspan(layer.weight_offset, layer.weight_count()),
                                              grads.subspan(layer.bias_offset, layer.out_channels));
    if (!want_input_grad) {
        return {};
    }
    Tensor grad_in(input.n, input.c, input.h, input.w);
    kernels::parallel::conv2d_backward_input(shape, grad_output.data,
                                             params.subspan(layer.weight_offset, layer.weight_count()), grad_in.data);
    return grad_in;
}

Tensor dense_forward(const DenseLayer& layer, std::span<const double> params, const Tensor& input)
{
    const std::size_t features = input.size() / std::max(1, input.n);
    if (static_cast<int>(features) != layer.in_features) {
        throw ValidationError("dense layer expects " + std::to_string(layer.in_features) + " features, got tensor "
                              + input.shape_str());
    }
    Tensor out(input.n, layer.out_features, 1, 1);
    const double* W = params.data() + layer.weight_offset;
    const double* B = params.data() + layer.bias_offset;
    for (int b = 0; b < input.n; ++b) {
        const double* x = input.data.data() + b * features;
        for (int o = 0; o < layer.out_features; ++o) {
            double acc = B[o];
            const double* row = W + static_cast<std::size_t>(o) * features;
            for (std::size_t i = 0; i < features; ++i) {
                acc += row[i] * x[i];
            }
            out.data[static_cast<std::size_t>(b) * layer.out_features + o] = acc;
        }
    }
    return out;
}

Tensor dense_backward(const DenseLayer& layer, std::span<const double> params, const Tensor& input,
                      const Tensor& grad_output, std::span<double> grads)
{
    const std::size_t features = static_cast<std::size_t>(layer.in_features);
    const double* W = params.data() + layer.weight_offset;
    double* gW = grads.data() + layer.weight_offset;
    double* gB = grads.data() + layer.bias_offset;
    Tensor grad_in(input.n, input.c, input.h, input.w);
    for (int b = 0; b < input.n; ++b) {
        const double* x = input.data.data() + b * features;
        double* gx = grad_in.data.data() + b * features;
        for (int o = 0; o < layer.out_features; ++o) {
            const double g = grad_output.data[static_cast<std::size_t>(b) * layer.out_features + o];
            gB[o] += g;
            double* grow = gW + static_cast<std::size_t>(o) * features;
            const double* row = W + static_cast<std::size_t>(o) * features;
            for (std::size_t i = 0; i < features; ++i) {
                grow[i] += g * x[i];
                gx[i] += g * row[i];
            }
        }
    }
    return grad_in;
}

Tensor leaky_relu(const Tensor& z, double slope)
{
    Tensor out = z;
    for (double& v : out.data) {
        v = v > 0.0 ? v : slope * v;
    }
    return out;
}

Tensor leaky_relu_backward(const Tensor& z, const Tensor& grad_output, double slope)
{
    Tensor out = grad_output;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(z.data[i] > 0.0)) {
            out.data[i] *= slope;
        }
    }
    return out;
}

Tensor avg_pool2(const Tensor& x)
{
    if (x.h % 2 != 0 || x.w % 2 != 0) {
        throw ValidationError("avg_pool2 needs even spatial size, got " + x.shape_str());
    }
    Tensor out(x.n, x.c, x.h / 2, x.w / 2);
    for (int b = 0; b < x.n; ++b) {
        for (int c = 0; c < x.c; ++c) {
            for (int y = 0; y < out.h; ++y) {
                for (int xx = 0; xx < out.w; ++xx) {
                    out.at(b, c, y, xx) = 0.25
                            * (x.at(b, c, 2 * y, 2 * xx) + x.at(b, c, 2 * y, 2 * xx + 1) + x.at(b, c, 2 * y + 1, 2 * xx)
                               + x.at(b, c, 2 * y + 1, 2 * xx + 1));
                }
            }
        }
    }
    return out;
}

Tensor avg_pool2_backward(const Tensor& g)
{
    Tensor out(g.n, g.c, g.h * 2, g.w * 2);
    for (int b = 0; b < g.n; ++b) {
        for (int c = 0; c < g.c; ++c) {
            for (int y = 0; y < out.h; ++y) {
                for (int x = 0; x < out.w; ++x) {
                    out.at(b, c, y, x) = 0.25 * g.at(b, c, y / 2, x / 2);
                }
            }
        }
    }
    return out;
}

Tensor upsample2(const Tensor& x)
{
    Tensor out(x.n, x.c, x.h * 2, x.w * 2);
    for (int b = 0; b < x.n; ++b) {
        for (int c = 0; c < x.c; ++c) {
            for (int y = 0; y < out.h; ++y) {
                for (int xx = 0; xx < out.w; ++xx) {
                    out.at(b, c, y, xx) = x.at(b, c, y / 2, xx / 2);
                }
            }
        }
    }
    return out;
}

Tensor upsample2_backward(const Tensor& g)
{
    Tensor out(g.n, g.c, g.h / 2, g.w / 2);
    for (int b = 0; b < out.n; ++b) {
        for (int c = 0; c < out.c; ++c) {
            for (int y = 0; y < out.h; ++y) {
                for (int x = 0; x < out.w; ++x) {
                    out.at(b, c, y, x) = g.at(b, c, 2 * y, 2 * x) + g.at(b, c, 2 * y, 2 * x + 1)
                            + g.at(b, c, 2 * y + 1, 2 * x) + g.at(b, c, 2 * y + 1, 2 * x + 1);
                }
            }
        }
    }
    return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b)
{
    if (a.n != b.n || a.h != b.h || a.w != b.w) {
        throw ValidationError("cannot concatenate " + a.shape_str() + " and " + b.shape_str());
    }
    Tensor out(a.n, a.c + b.c, a.h, a.w);
    const std::size_t plane = a.plane();
    for (int s = 0; s < a.n; ++s) {
        auto dst = out.data.begin() + static_cast<std::ptrdiff_t>(s * out.c * plane);
        dst = std::copy_n(a.data.begin() + static_cast<std::ptrdiff_t>(s * a.c * plane), a.c * plane, dst);
        std::copy_n(b.data.begin() + static_cast<std::ptrdiff_t>(s * b.c * plane), b.c * plane, dst);
    }
    return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& grad, int first_channels)
{
    Tensor a(grad.n, first_channels, grad.h, grad.w);
    Tensor b(grad.n, grad.c - first_channels, grad.h, grad.w);
    const std::size_t plane = grad.plane();
    for (int s = 0; s < grad.n; ++s) {
        auto src = grad.data.begin() + static_cast<std::ptrdiff_t>(s * grad.c * plane);
        std::copy_n(src, a.c * plane, a.data.begin() + static_cast<std::ptrdiff_t>(s * a.c * plane));
        std::copy_n(src + static_cast<std::ptrdiff_t>(a.c * plane), b.c * plane,
                    b.data.begin() + static_cast<std::ptrdiff_t>(s * b.c * plane));
    }
    return {std::move(a), std::move(b)};
}

namespace {

void check_loss_shapes(const Tensor& pred, const Tensor& target)
{
    if (!pred.same_shape(target)) {
        throw ValidationError("loss shape mismatch: prediction " + pred.shape_str() + " vs target "
                              + target.shape_str());
    }
    if (pred.size() == 0) {
        throw ValidationError("loss of an empty tensor");
    }
}

} // namespace

double smooth_l1(const Tensor& pred, const Tensor& target, double beta)
{
    check_loss_shapes(pred, target);
    if (!(beta > 0.0)) {
        throw ValidationError("smooth-L1 beta must be positive");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = std::abs(pred.data[i] - target.data[i]);
        sum += d < beta ? 0.5 * d * d / beta : d - 0.5 * beta;
    }
    return sum / static_cast<double>(pred.size());
}

Tensor smooth_l1_grad(const Tensor& pred, const Tensor& target, double beta)
{
    check_loss_shapes(pred, target);
    Tensor g(pred.n, pred.c, pred.h, pred.w);
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data[i] - target.data[i];
        const double local = std::abs(d) < beta ? d / beta : (d > 0.0 ? 1.0 : -1.0);
        g.data[i] = local * inv_n;
    }
    return g;
}

double mse(const Tensor& pred, const Tensor& target)
{
    check_loss_shapes(pred, target);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data[i] - target.data[i];
        sum += d * d;
    }
    return sum / static_cast<double>(pred.size());
}

Tensor mse_grad(const Tensor& pred, const Tensor& target)
{
    check_loss_shapes(pred, target);
    Tensor g(pred.n, pred.c, pred.h, pred.w);
    const double scale = 2.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        g.data[i] = scale * (pred.data[i] - target.data[i]);
    }
    return g;
}

Tensor gather(const Tensor& source, std::span<const std::size_t> indices)
{
    Tensor out(static_cast<int>(indices.size()), source.c, source.h, source.w);
    const std::size_t sample = static_cast<std::size_t>(source.c) * source.plane();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= static_cast<std::size_t>(source.n)) {
            throw ValidationError("sample index " + std::to_string(indices[i]) + " out of range");
        }
        std::copy_n(source.data.begin() + static_cast<std::ptrdiff_t>(indices[i] * sample), sample,
                    out.data.begin() + static_cast<std::ptrdiff_t>(i * sample));
    }
    return out;
}

} // namespace attn::nn
