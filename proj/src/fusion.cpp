#include "attn/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "attn/errors.hpp"

namespace attn {

void MarkStyle::validate() const
{
    if (radius < 0) {
        throw ValidationError("mark radius must be non-negative");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ValidationError("mark alpha must lie in [0, 1]");
    }
}

FusedSample fuse_channel(const Image& rgb, const Image& attention)
{
    if (rgb.channels() != 3) {
        throw ValidationError("channel fusion needs an RGB image, got " + std::to_string(rgb.channels()) + " channels");
    }
    if (attention.channels() != 1 || attention.geometry() != rgb.geometry()) {
        throw ValidationError("attention map " + attention.geometry().str() + " does not match image "
                              + rgb.geometry().str());
    }
    FusedSample out{Image(rgb.height(), rgb.width(), 4), FusionMode::channel};
#pragma omp parallel for schedule(static)
    for (int y = 0; y < rgb.height(); ++y) {
        const std::uint8_t* src = rgb.row(y);
        const std::uint8_t* att = attention.row(y);
        std::uint8_t* dst = out.pixels.row(y);
        for (int x = 0; x < rgb.width(); ++x) {
            dst[4 * x] = src[3 * x];
            dst[4 * x + 1] = src[3 * x + 1];
            dst[4 * x + 2] = src[3 * x + 2];
            dst[4 * x + 3] = att[x];
        }
    }
    return out;
}

FusedSample fuse_channel(const Image& rgb, const AttentionMap& attention)
{
    return fuse_channel(rgb, quantize(attention));
}

std::pair<Image, Image> split_channel(const FusedSample& fused)
{
    if (fused.mode != FusionMode::channel || fused.pixels.channels() != 4) {
        throw ValidationError("split_channel needs a 4-channel fused sample");
    }
    const Image& px = fused.pixels;
    Image rgb(px.height(), px.width(), 3);
    Image att(px.height(), px.width(), 1);
    for (int y = 0; y < px.height(); ++y) {
        for (int x = 0; x < px.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                rgb.at(y, x, c) = px.at(y, x, c);
            }
            att.at(y, x) = px.at(y, x, 3);
        }
    }
    return {std::move(rgb), std::move(att)};
}

FusedSample mark_points(const Image& rgb, const FocusPointSet& points, const MarkStyle& style)
{
    style.validate();
    if (rgb.channels() != 3) {
        throw ValidationError("point marking needs an RGB image");
    }
    FusedSample out{rgb, FusionMode::marked};
    const int W = rgb.width();
    const int H = rgb.height();
    std::vector<std::uint8_t> inside(static_cast<std::size_t>(W) * H, 0);
    const int r = style.radius;
    for (const Point2& p : points.points) {
        const long px = std::lround(p.x);
        const long py = std::lround(p.y);
        for (long y = std::max(0L, py - r); y <= std::min<long>(H - 1, py + r); ++y) {
            for (long x = std::max(0L, px - r); x <= std::min<long>(W - 1, px + r); ++x) {
                if ((x - px) * (x - px) + (y - py) * (y - py) <= static_cast<long>(r) * r) {
                    inside[static_cast<std::size_t>(y) * W + x] = 1;
                }
            }
        }
    }
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (!inside[static_cast<std::size_t>(y) * W + x]) {
                continue;
            }
            for (int c = 0; c < 3; ++c) {
                const double v = style.alpha * style.color[c] + (1.0 - style.alpha) * rgb.at(y, x, c);
                out.pixels.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

} // namespace attn
