#include "attn/tinynet.hpp"

#include <cmath>
#include <string>

#include "attn/errors.hpp"
#include "attn/random.hpp"

namespace attn {

using nn::Tensor;

void TinyNetConfig::validate() const
{
    if (input_channels != 1 && input_channels != 3) {
        throw ValidationError("input_channels must be 1 or 3, got " + std::to_string(input_channels));
    }
    if (base_width < 1) {
        throw ValidationError("base_width must be >= 1");
    }
    if (depth < 1 || depth > 3) {
        throw ValidationError("depth must be 1, 2 or 3, got " + std::to_string(depth));
    }
    if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
        throw ValidationError("leaky_slope must lie in [0, 1)");
    }
}

namespace {

void he_init(const nn::ConvLayer& layer, double slope, Rng& rng, std::vector<double>& params)
{
    const double stddev = std::sqrt(2.0 / ((1.0 + slope * slope) * layer.fan_in()));
    for (std::size_t i = 0; i < layer.weight_count(); ++i) {
        params[layer.weight_offset + i] = stddev * rng.normal();
    }
}

} // namespace

AttentionNet::AttentionNet(const TinyNetConfig& cfg, std::uint64_t seed)
    : cfg_(cfg)
{
    cfg_.validate();
    std::size_t cursor = 0;
    auto width = [&](int level) { return cfg_.base_width << level; };
    for (int i = 0; i <= cfg_.depth; ++i) {
        encoder_.push_back(nn::make_conv(i == 0 ? cfg_.input_channels : width(i - 1), width(i), 3, cursor));
    }
    for (int level = cfg_.depth; level >= 1; --level) {
        decoder_.push_back(nn::make_conv(width(level), width(level - 1), 3, cursor));
    }
    head_ = nn::make_conv(2 * width(0), 1, 1, cursor);
    params_.assign(cursor, 0.0);

    Rng rng(seed);
    for (const auto& layer : encoder_) {
        he_init(layer, cfg_.leaky_slope, rng, params_);
    }
    for (const auto& layer : decoder_) {
        he_init(layer, cfg_.leaky_slope, rng, params_);
    }
}

void AttentionNet::check_input(const Tensor& batch) const
{
    const int multiple = 1 << cfg_.depth;
    if (batch.c != cfg_.input_channels || batch.n < 1 || batch.h < multiple || batch.w < multiple
        || batch.h % multiple != 0 || batch.w % multiple != 0) {
        throw ValidationError("attention net expects B x " + std::to_string(cfg_.input_channels)
                              + " x H x W with H, W divisible by " + std::to_string(multiple) + ", got "
                              + batch.shape_str());
    }
}

Tensor AttentionNet::forward(const Tensor& batch) const
{
    Trace trace;
    return forward(batch, trace);
}

Tensor AttentionNet::forward(const Tensor& batch, Trace& trace) const
{
    check_input(batch);
    trace = Trace{};
    trace.input = batch;
    const double slope = cfg_.leaky_slope;
    for (int i = 0; i <= cfg_.depth; ++i) {
        Tensor in = i == 0 ? batch : nn::avg_pool2(trace.encoder_act.back());
        Tensor pre = nn::conv_forward(encoder_[i], params_, in);
        trace.encoder_act.push_back(nn::leaky_relu(pre, slope));
        trace.encoder_in.push_back(std::move(in));
        trace.encoder_pre.push_back(std::move(pre));
    }
    Tensor d = trace.encoder_act.back();
    for (const auto& layer : decoder_) {
        Tensor in = nn::upsample2(d);
        Tensor pre = nn::conv_forward(layer, params_, in);
        d = nn::leaky_relu(pre, slope);
        trace.decoder_in.push_back(std::move(in));
        trace.decoder_pre.push_back(std::move(pre));
    }
    trace.head_in = nn::concat_channels(d, trace.encoder_act.front());
    return nn::conv_forward(head_, params_, trace.head_in);
}

std::vector<double> AttentionNet::backward(const Trace& trace, const Tensor& grad_output) const
{
    std::vector<double> grads(params_.size(), 0.0);
    const double slope = cfg_.leaky_slope;
    Tensor g = nn::conv_backward(head_, params_, trace.head_in, grad_output, grads);
    auto [grad_decoder, grad_skip] = nn::split_channels(g, cfg_.base_width);

    Tensor gd = std::move(grad_decoder);
    for (int k = static_cast<int>(decoder_.size()) - 1; k >= 0; --k) {
        gd = nn::leaky_relu_backward(trace.decoder_pre[k], gd, slope);
        gd = nn::conv_backward(decoder_[k], params_, trace.decoder_in[k], gd, grads);
        gd = nn::upsample2_backward(gd);
    }
    // gd is now dL/d(deepest encoder activation).
    for (int i = cfg_.depth; i >= 0; --i) {
        if (i == 0) {
            for (std::size_t j = 0; j < gd.size(); ++j) {
                gd.data[j] += grad_skip.data[j];
            }
        }
        gd = nn::leaky_relu_backward(trace.encoder_pre[i], gd, slope);
        gd = nn::conv_backward(encoder_[i], params_, trace.encoder_in[i], gd, grads, i > 0);
        if (i > 0) {
            gd = nn::avg_pool2_backward(gd);
        }
    }
    return grads;
}

void CommandNetConfig::validate() const
{
    if (input_channels < 1 || input_channels > 4) {
        throw ValidationError("command net input_channels must be 1..4");
    }
    if (width < 1) {
        throw ValidationError("command net width must be >= 1");
    }
    if (image_height < 4 || image_width < 4 || image_height % 4 != 0 || image_width % 4 != 0) {
        throw ValidationError("command net image size must be a positive multiple of 4");
    }
    if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
        throw ValidationError("leaky_slope must lie in [0, 1)");
    }
}

CommandNet::CommandNet(const CommandNetConfig& cfg, std::uint64_t seed)
    : cfg_(cfg)
{
    cfg_.validate();
    std::size_t cursor = 0;
    conv1_ = nn::make_conv(cfg_.input_channels, cfg_.width, 3, cursor);
    conv2_ = nn::make_conv(cfg_.width, 2 * cfg_.width, 3, cursor);
    dense_ = nn::make_dense(2 * cfg_.width * (cfg_.image_height / 4) * (cfg_.image_width / 4), 2, cursor);
    params_.assign(cursor, 0.0);
    Rng rng(seed);
    he_init(conv1_, cfg_.leaky_slope, rng, params_);
    he_init(conv2_, cfg_.leaky_slope, rng, params_);
}

void CommandNet::check_input(const Tensor& batch) const
{
    if (batch.n < 1 || batch.c != cfg_.input_channels || batch.h != cfg_.image_height || batch.w != cfg_.image_width) {
        throw ValidationError("command net expects B x " + std::to_string(cfg_.input_channels) + " x "
                              + std::to_string(cfg_.image_height) + " x " + std::to_string(cfg_.image_width) + ", got "
                              + batch.shape_str());
    }
}

Tensor CommandNet::forward(const Tensor& batch) const
{
    Trace trace;
    return forward(batch, trace);
}

Tensor CommandNet::forward(const Tensor& batch, Trace& trace) const
{
    check_input(batch);
    const double slope = cfg_.leaky_slope;
    trace.input = batch;
    trace.pre1 = nn::conv_forward(conv1_, params_, batch);
    trace.conv2_in = nn::avg_pool2(nn::leaky_relu(trace.pre1, slope));
    trace.pre2 = nn::conv_forward(conv2_, params_, trace.conv2_in);
    trace.dense_in = nn::avg_pool2(nn::leaky_relu(trace.pre2, slope));
    return nn::dense_forward(dense_, params_, trace.dense_in);
}

std::vector<double> CommandNet::backward(const Trace& trace, const Tensor& grad_output) const
{
    std::vector<double> grads(params_.size(), 0.0);
    const double slope = cfg_.leaky_slope;
    Tensor g = nn::dense_backward(dense_, params_, trace.dense_in, grad_output, grads);
    g = nn::avg_pool2_backward(g);
    g = nn::leaky_relu_backward(trace.pre2, g, slope);
    g = nn::conv_backward(conv2_, params_, trace.conv2_in, g, grads);
    g = nn::avg_pool2_backward(g);
    g = nn::leaky_relu_backward(trace.pre1, g, slope);
    nn::conv_backward(conv1_, params_, trace.input, g, grads, false);
    return grads;
}

} // namespace attn
