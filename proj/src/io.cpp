#include "attn/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <vector>

#include <png.h>

#include "attn/errors.hpp"

namespace attn {

Image read_png(const std::filesystem::path& path)
{
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str())) {
        throw IoError("cannot read PNG " + path.string() + ": " + png.message);
    }
    int channels;
    if (png.format & PNG_FORMAT_FLAG_COLOR) {
        channels = (png.format & PNG_FORMAT_FLAG_ALPHA) ? 4 : 3;
    } else {
        channels = (png.format & PNG_FORMAT_FLAG_ALPHA) ? 4 : 1;
    }
    png.format = channels == 1 ? PNG_FORMAT_GRAY : channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_RGBA;
    Image image(static_cast<int>(png.height), static_cast<int>(png.width), channels);
    if (!png_image_finish_read(&png, nullptr, image.samples().data(), 0, nullptr)) {
        const std::string message = png.message;
        png_image_free(&png);
        throw IoError("cannot decode PNG " + path.string() + ": " + message);
    }
    return image;
}

void write_png(const std::filesystem::path& path, const Image& image)
{
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width());
    png.height = static_cast<png_uint_32>(image.height());
    switch (image.channels()) {
    case 1: png.format = PNG_FORMAT_GRAY; break;
    case 3: png.format = PNG_FORMAT_RGB; break;
    case 4: png.format = PNG_FORMAT_RGBA; break;
    default: throw ValidationError("cannot write a " + std::to_string(image.channels()) + "-channel PNG");
    }
    if (!png_image_write_to_file(&png, path.c_str(), 0, image.samples().data(), 0, nullptr)) {
        throw IoError("cannot write PNG " + path.string() + ": " + png.message);
    }
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v)
{
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in)
{
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw ValidationError("attention map file truncated");
    }
    return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace

void write_attention_raw(std::ostream& out, const AttentionMap& map)
{
    out.write("ATTN", 4);
    put_u32(out, static_cast<std::uint32_t>(map.height()));
    put_u32(out, static_cast<std::uint32_t>(map.width()));
    put_u32(out, 0);
    for (double v : map.values()) {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    if (!out) {
        throw IoError("failed writing attention map");
    }
}

AttentionMap read_attention_raw(std::istream& in)
{
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "ATTN", 4) != 0) {
        throw ValidationError("not an ATTN map file");
    }
    const auto h = static_cast<int>(get_u32(in));
    const auto w = static_cast<int>(get_u32(in));
    get_u32(in);
    AttentionMap map(Geometry{h, w}, MapKind::aggregated);
    for (double& v : map.values()) {
        v = std::bit_cast<float>(get_u32(in));
    }
    return map;
}

void write_attention_raw(const std::filesystem::path& path, const AttentionMap& map)
{
    auto out = open_output(path, true);
    write_attention_raw(out, map);
}

AttentionMap read_attention_raw(const std::filesystem::path& path)
{
    auto in = open_input(path, true);
    return read_attention_raw(in);
}

std::ifstream open_input(const std::filesystem::path& path, bool binary)
{
    std::ifstream in(path, binary ? std::ios::in | std::ios::binary : std::ios::in);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return in;
}

std::ofstream open_output(const std::filesystem::path& path, bool binary)
{
    std::ofstream out(path, binary ? std::ios::out | std::ios::binary : std::ios::out);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    return out;
}

std::filesystem::path frame_png_path(const std::filesystem::path& dir, std::size_t frame_index)
{
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.png", frame_index);
    return dir / name;
}

} // namespace attn
