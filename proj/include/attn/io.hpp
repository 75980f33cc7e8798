#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>

#include "attn/attention.hpp"
#include "attn/image.hpp"

namespace attn {

/// Reads an 8-bit PNG as gray (1), RGB (3) or RGBA (4) channels. Palette and 16-bit inputs are
/// converted; gray+alpha becomes RGBA.
Image read_png(const std::filesystem::path& path);
/// Writes 1/3/4-channel images as gray/RGB/RGBA PNG.
void write_png(const std::filesystem::path& path, const Image& image);

/// Raw float map: "ATTN", u32 height, u32 width, u32 reserved (0), then height*width
/// little-endian f32 values row by row.
void write_attention_raw(std::ostream& out, const AttentionMap& map);
AttentionMap read_attention_raw(std::istream& in);
void write_attention_raw(const std::filesystem::path& path, const AttentionMap& map);
AttentionMap read_attention_raw(const std::filesystem::path& path);

/// Opens a file or throws IoError naming it.
std::ifstream open_input(const std::filesystem::path& path, bool binary = false);
std::ofstream open_output(const std::filesystem::path& path, bool binary = false);

/// "<dir>/<frame_index:06d>.png"
std::filesystem::path frame_png_path(const std::filesystem::path& dir, std::size_t frame_index);

} // namespace attn
