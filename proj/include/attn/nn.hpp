#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace attn::nn {

/// Dense NCHW tensor of doubles.
struct Tensor {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int n, int c, int h, int w, double fill = 0.0);

    std::size_t size() const { return data.size(); }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    double& at(int b, int ch, int y, int x) { return data[((static_cast<std::size_t>(b) * c + ch) * h + y) * w + x]; }
    double at(int b, int ch, int y, int x) const
    {
        return data[((static_cast<std::size_t>(b) * c + ch) * h + y) * w + x];
    }
    bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
    std::string shape_str() const;

    bool operator==(const Tensor&) const = default;
};

/// Location of one layer's parameters inside a flat parameter vector.
struct ConvLayer {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 3;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;

    std::size_t weight_count() const { return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel; }
    int fan_in() const { return in_channels * kernel * kernel; }
};

struct DenseLayer {
    int in_features = 0;
    int out_features = 0;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;

    std::size_t weight_count() const { return static_cast<std::size_t>(out_features) * in_features; }
};

/// Appends a layer's parameters to a running layout and returns it.
ConvLayer make_conv(int in_channels, int out_channels, int kernel, std::size_t& cursor);
DenseLayer make_dense(int in_features, int out_features, std::size_t& cursor);

Tensor conv_forward(const ConvLayer& layer, std::span<const double> params, const Tensor& input);
/// Accumulates parameter gradients into `grads`; returns dL/dinput when `want_input_grad`.
Tensor conv_backward(const ConvLayer& layer, std::span<const double> params, const Tensor& input,
                     const Tensor& grad_output, std::span<double> grads, bool want_input_grad = true);

/// Flattens each sample (C*H*W features) and maps it to out_features; output shape n x out x 1 x 1.
Tensor dense_forward(const DenseLayer& layer, std::span<const double> params, const Tensor& input);
Tensor dense_backward(const DenseLayer& layer, std::span<const double> params, const Tensor& input,
                      const Tensor& grad_output, std::span<double> grads);

Tensor leaky_relu(const Tensor& z, double slope);
Tensor leaky_relu_backward(const Tensor& z, const Tensor& grad_output, double slope);

Tensor avg_pool2(const Tensor& x);
Tensor avg_pool2_backward(const Tensor& grad_output);

Tensor upsample2(const Tensor& x);
Tensor upsample2_backward(const Tensor& grad_output);

Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Splits a gradient of concat_channels(a, b) back into (dL/da, dL/db); `first_channels` = a.c.
std::pair<Tensor, Tensor> split_channels(const Tensor& grad, int first_channels);

/// Mean smooth-L1: 0.5 d^2 / beta for |d| < beta, |d| - 0.5 beta otherwise.
double smooth_l1(const Tensor& pred, const Tensor& target, double beta);
/// d(mean smooth-L1)/d(pred).
Tensor smooth_l1_grad(const Tensor& pred, const Tensor& target, double beta);

double mse(const Tensor& pred, const Tensor& target);
Tensor mse_grad(const Tensor& pred, const Tensor& target);

/// Copies samples `indices` of `source` into a new batch tensor.
Tensor gather(const Tensor& source, std::span<const std::size_t> indices);

} // namespace attn::nn
