#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "attn/nn.hpp"

namespace attn {

struct TinyNetConfig {
    int input_channels = 3; ///< 1 or 3
    int base_width = 8;
    int depth = 2;          ///< downsampling stages, 1..3
    double leaky_slope = 0.1;

    void validate() const;
    bool operator==(const TinyNetConfig&) const = default;
};

/// Encoder-decoder attention predictor. Each encoder stage halves resolution and doubles width
/// (base_width * 2^i); the decoder upsamples back, and the full-resolution encoder features are
/// concatenated with the last decoder output before a 1x1 head. Output: B x 1 x H x W, unbounded.
class AttentionNet {
public:
    /// He-scaled weights from `seed`; zero biases; zero head so initial predictions are the zero map.
    explicit AttentionNet(const TinyNetConfig& cfg, std::uint64_t seed = 0);

    const TinyNetConfig& config() const { return cfg_; }
    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }
    std::size_t parameter_count() const { return params_.size(); }

    /// Activations retained by forward for the backward pass.
    struct Trace {
        nn::Tensor input;
        std::vector<nn::Tensor> encoder_in;
        std::vector<nn::Tensor> encoder_pre;
        std::vector<nn::Tensor> encoder_act;
        std::vector<nn::Tensor> decoder_in;
        std::vector<nn::Tensor> decoder_pre;
        nn::Tensor head_in;
    };

    nn::Tensor forward(const nn::Tensor& batch) const;
    nn::Tensor forward(const nn::Tensor& batch, Trace& trace) const;
    /// Gradient of the loss w.r.t. every parameter, in parameter order.
    std::vector<double> backward(const Trace& trace, const nn::Tensor& grad_output) const;

    /// Throws ValidationError naming expected and actual shapes.
    void check_input(const nn::Tensor& batch) const;

private:
    TinyNetConfig cfg_;
    std::vector<nn::ConvLayer> encoder_;
    std::vector<nn::ConvLayer> decoder_;
    nn::ConvLayer head_;
    std::vector<double> params_;
};

struct CommandNetConfig {
    int input_channels = 3;
    int width = 8;   ///< channels of the first conv; the second has 2 * width
    int image_height = 32;
    int image_width = 32;
    double leaky_slope = 0.1;

    void validate() const;
    bool operator==(const CommandNetConfig&) const = default;
};

/// Driving-command regressor for the imitation stand-in: two conv + pool stages and a dense
/// head producing (steering, velocity). Output: B x 2 x 1 x 1.
class CommandNet {
public:
    explicit CommandNet(const CommandNetConfig& cfg, std::uint64_t seed = 0);

    const CommandNetConfig& config() const { return cfg_; }
    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }
    std::size_t parameter_count() const { return params_.size(); }

    struct Trace {
        nn::Tensor input;
        nn::Tensor pre1;
        nn::Tensor conv2_in;
        nn::Tensor pre2;
        nn::Tensor dense_in;
    };

    nn::Tensor forward(const nn::Tensor& batch) const;
    nn::Tensor forward(const nn::Tensor& batch, Trace& trace) const;
    std::vector<double> backward(const Trace& trace, const nn::Tensor& grad_output) const;
    void check_input(const nn::Tensor& batch) const;

private:
    CommandNetConfig cfg_;
    nn::ConvLayer conv1_;
    nn::ConvLayer conv2_;
    nn::DenseLayer dense_;
    std::vector<double> params_;
};

} // namespace attn
