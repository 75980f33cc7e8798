// Generates the bundled test fixtures: make_fixture {toy|synthetic} <dir>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "attn/image.hpp"
#include "attn/io.hpp"
#include "attn/random.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kWidth = 64;
constexpr int kHeight = 48;
constexpr std::int64_t kPeriod = 33'333'333;

attn::Image background(attn::Rng& rng)
{
    attn::Image img(kHeight, kWidth, 3);
    for (int y = 0; y < kHeight; ++y) {
        for (int x = 0; x < kWidth; ++x) {
            const int noise = static_cast<int>(rng.uniform_int(0, 15));
            img.at(y, x, 0) = static_cast<std::uint8_t>(40 + y + noise);
            img.at(y, x, 1) = static_cast<std::uint8_t>(60 + x + noise);
            img.at(y, x, 2) = static_cast<std::uint8_t>(90 + noise);
        }
    }
    return img;
}

void write_frame(const fs::path& dir, std::ofstream& manifest, int index, const attn::Image& img)
{
    char name[32];
    std::snprintf(name, sizeof name, "frames/%06d.png", index);
    attn::write_png(dir / name, img);
    manifest << "{\"frame_index\":" << index << ",\"t_ns\":" << index * kPeriod << ",\"path\":\"" << name
             << "\",\"width\":" << kWidth << ",\"height\":" << kHeight << "}\n";
}

void make_toy(const fs::path& dir)
{
    fs::create_directories(dir / "frames");
    attn::Rng rng(7);
    std::ofstream manifest(dir / "manifest.jsonl");
    std::ofstream gaze(dir / "gaze.jsonl");
    const double xs[3] = {20.0, 24.5, 30.0};
    const double ys[3] = {30.0, 31.0, 33.25};
    for (int i = 0; i < 3; ++i) {
        write_frame(dir, manifest, i, background(rng));
        gaze << "{\"t_ns\":" << i * kPeriod << ",\"x\":" << xs[i] << ",\"y\":" << ys[i] << ",\"valid\":true}\n";
    }
}

void make_synthetic(const fs::path& dir)
{
    fs::create_directories(dir / "frames");
    attn::Rng rng(11);
    std::ofstream manifest(dir / "manifest.jsonl");
    std::ofstream gaze(dir / "gaze.jsonl");
    std::ofstream commands(dir / "commands.jsonl");
    std::ofstream boxes(dir / "boxes.jsonl");
    std::ofstream dets(dir / "detections.jsonl");
    // Cropped frames keep rows 16..47; the car box is given in cropped coordinates.
    const int crop = kHeight / 3;
    for (int i = 0; i < 30; ++i) {
        attn::Image img = background(rng);
        const int bx = 8 + i;
        const int by = 10 + (i % 5);
        for (int y = by; y < by + 8; ++y) {
            for (int x = bx; x < bx + 12; ++x) {
                img.at(y + crop, x, 0) = 230;
                img.at(y + crop, x, 1) = 40;
                img.at(y + crop, x, 2) = 40;
            }
        }
        write_frame(dir, manifest, i, img);
        // Two gaze samples per frame period: one on the car, one wandering (sometimes off-frame or invalid).
        const double gx = bx + 6.0 + rng.uniform(-1.0, 1.0);
        const double gy = by + crop + 4.0 + rng.uniform(-1.0, 1.0);
        gaze << "{\"t_ns\":" << i * kPeriod << ",\"x\":" << gx << ",\"y\":" << gy << ",\"valid\":true}\n";
        const double wx = 32.0 + 40.0 * std::sin(i * 0.4);
        const double wy = 30.0 + 10.0 * std::cos(i * 0.3);
        const bool valid = i % 7 != 3;
        gaze << "{\"t_ns\":" << i * kPeriod + kPeriod / 2 + 1 << ",\"x\":" << wx << ",\"y\":" << wy
             << ",\"valid\":" << (valid ? "true" : "false") << "}\n";
        char id[32];
        std::snprintf(id, sizeof id, "synthetic30/%06d", i);
        const double steering = 2.0 * (bx + 6.0) / (kWidth - 1) - 1.0;
        commands << "{\"id\":\"" << id << "\",\"steering\":" << steering << ",\"velocity\":" << 0.5 + 0.01 * i << "}\n";
        boxes << "{\"image_id\":\"" << id << "\",\"class_id\":0,\"x\":" << bx << ",\"y\":" << by
              << ",\"w\":12,\"h\":8}\n";
        dets << "{\"image_id\":\"" << id << "\",\"class_id\":0,\"x\":" << bx << ",\"y\":" << by
             << ",\"w\":12,\"h\":8,\"score\":0.9}\n";
    }
}

} // namespace

int main(int argc, char** argv)
{
    if (argc != 3) {
        std::cerr << "usage: make_fixture {toy|synthetic} <dir>\n";
        return 2;
    }
    const std::string kind = argv[1];
    if (kind == "toy") {
        make_toy(argv[2]);
    } else if (kind == "synthetic") {
        make_synthetic(argv[2]);
    } else {
        std::cerr << "unknown fixture " << kind << '\n';
        return 2;
    }
    return 0;
}
