#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace attn {

struct Geometry {
    int height = 0;
    int width = 0;

    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
    bool contains(double x, double y) const { return x >= 0.0 && y >= 0.0 && x < width && y < height; }
    std::string str() const;

    bool operator==(const Geometry&) const = default;
};

/// Sub-pixel location in pixel-index coordinates: the center of pixel (r, c) is (x=c, y=r).
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point2&) const = default;
};

/// Interleaved 8-bit image, row-major, `channels` samples per pixel.
class Image {
public:
    Image() = default;
    Image(int height, int width, int channels, std::uint8_t fill = 0);

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    Geometry geometry() const { return {height_, width_}; }
    bool empty() const { return data_.empty(); }

    std::uint8_t& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
    std::uint8_t at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }

    std::uint8_t* row(int y) { return data_.data() + index(y, 0, 0); }
    const std::uint8_t* row(int y) const { return data_.data() + index(y, 0, 0); }

    std::span<std::uint8_t> samples() { return data_; }
    std::span<const std::uint8_t> samples() const { return data_; }

    bool operator==(const Image&) const = default;

private:
    std::size_t index(int y, int x, int c) const
    {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x))
                * static_cast<std::size_t>(channels_)
                + static_cast<std::size_t>(c);
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<std::uint8_t> data_;
};

/// A camera frame x_t with its position in a recording.
struct Frame {
    Image image;
    std::size_t frame_index = 0;
    std::int64_t t_ns = 0;
    std::string sequence;
};

} // namespace attn
