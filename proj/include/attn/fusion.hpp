#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "attn/attention.hpp"
#include "attn/image.hpp"

namespace attn {

enum class FusionMode { channel, marked };

struct FusedSample {
    Image pixels; ///< RGBA (channel mode) or RGB (marked mode)
    FusionMode mode = FusionMode::channel;

    bool operator==(const FusedSample&) const = default;
};

struct MarkStyle {
    int radius = 4;
    std::array<std::uint8_t, 3> color{255, 0, 0};
    double alpha = 1.0;

    void validate() const;
    bool operator==(const MarkStyle&) const = default;
};

/// Stacks the 8-bit attention map as a fourth channel.
FusedSample fuse_channel(const Image& rgb, const Image& attention);
/// Quantizes `attention` first.
FusedSample fuse_channel(const Image& rgb, const AttentionMap& attention);

/// Inverse of fuse_channel: (RGB image, 1-channel attention).
std::pair<Image, Image> split_channel(const FusedSample& fused);

/// Blends a filled disc at each rounded focus point. Every pixel inside at least one disc is
/// blended exactly once: out = round(alpha * color + (1 - alpha) * in).
FusedSample mark_points(const Image& rgb, const FocusPointSet& points, const MarkStyle& style = {});

} // namespace attn
