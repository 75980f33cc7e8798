#include "attn/image.hpp"

#include "attn/errors.hpp"

namespace attn {

std::string Geometry::str() const
{
    return std::to_string(height) + "x" + std::to_string(width);
}

Image::Image(int height, int width, int channels, std::uint8_t fill)
    : height_(height), width_(width), channels_(channels)
{
    if (height < 0 || width < 0 || channels < 1 || channels > 4) {
        throw ValidationError("invalid image shape " + std::to_string(height) + "x" + std::to_string(width) + "x"
                              + std::to_string(channels));
    }
    data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * static_cast<std::size_t>(channels),
                 fill);
}

} // namespace attn
