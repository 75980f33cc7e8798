#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "attn/annotations.hpp"
#include "attn/attention.hpp"
#include "attn/image.hpp"

namespace attn {

inline constexpr std::uint8_t kFillGray = 114; ///< colour of canvas exposed by warps and mosaic
inline constexpr double kMinBoxArea = 4.0;     ///< boxes smaller than this (px^2) are dropped

/// One training sample: RGB image plus optional 8-bit attention channel, focus points and boxes,
/// all in the image's pixel frame.
struct Sample {
    std::string id;
    Image image;                         ///< 3 channels
    std::optional<Image> attention;      ///< 1 channel, same geometry
    std::optional<FocusPointSet> points;
    std::vector<BoxAnnotation> boxes;

    void validate() const;
    bool operator==(const Sample&) const = default;
};

/// Mirrors columns; points map x -> W-1-x and boxes x -> W-x-w.
Sample flip_h(const Sample& s);

/// Scales colour channels by `factor` in [0.1, 3.0] with rounding and clamping; attention untouched.
Sample brightness(const Sample& s, double factor);

/// Maximum jitter magnitudes. Defaults equal the YOLOv7 colourspace gains
/// (hue 0.015 of the full circle, saturation 0.7, value 0.4).
struct HsvJitter {
    double hue_deg = 0.015 * 360.0;
    double saturation = 0.7;
    double value = 0.4;

    bool operator==(const HsvJitter&) const = default;
};

/// Draws hue shift, saturation gain and value gain once per image from `seed` and applies them in HSV space.
Sample hsv_jitter(const Sample& s, const HsvJitter& magnitudes, std::uint64_t seed);

/// Scales about the image centre by `scale`, then shifts by (fx*W, fy*H). Colour is resampled
/// bilinearly with gray fill, attention nearest-neighbour with zero fill. Boxes are clipped and
/// dropped below kMinBoxArea; points leaving the canvas are dropped.
Sample translate_scale(const Sample& s, double fx, double fy, double scale);

struct MosaicOptions {
    bool rescale = true;                      ///< shrink the 2W x 2H canvas back to W x H
    std::optional<std::array<int, 2>> center; ///< (cx, cy) on the canvas; random when absent
};

/// Four-image mosaic around a random centre in [W/2, 3W/2] x [H/2, 3H/2].
Sample mosaic(std::span<const Sample, 4> samples, std::uint64_t seed, const MosaicOptions& options = {});

struct FlipOp {
    bool operator==(const FlipOp&) const = default;
};
struct BrightnessOp {
    double factor = 1.0;
    bool operator==(const BrightnessOp&) const = default;
};
struct HsvOp {
    HsvJitter magnitudes;
    bool operator==(const HsvOp&) const = default;
};
/// Applied shift is (fx, fy) plus a uniform draw in [-jitter, jitter] per axis.
struct TranslateOp {
    double fx = 0.0;
    double fy = 0.0;
    double jitter = 0.0;
    bool operator==(const TranslateOp&) const = default;
};
/// Applied scale is s plus a uniform draw in [-jitter, jitter].
struct ScaleOp {
    double s = 1.0;
    double jitter = 0.0;
    bool operator==(const ScaleOp&) const = default;
};
struct MosaicOp {
    bool rescale = true;
    bool operator==(const MosaicOp&) const = default;
};

using AugmentOp = std::variant<FlipOp, BrightnessOp, HsvOp, TranslateOp, ScaleOp, MosaicOp>;

struct AugmentStep {
    AugmentOp op;
    double probability = 1.0;
    bool operator==(const AugmentStep&) const = default;
};

struct AugmentSpec {
    std::vector<AugmentStep> ops;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const AugmentSpec&) const = default;
};

/// Applies `spec` to every sample. Sample i draws from seed ^ i only, so the result does not
/// depend on scheduling; mosaic partners are drawn from the (unaugmented) batch.
std::vector<Sample> augment_batch(std::span<const Sample> samples, const AugmentSpec& spec);

} // namespace attn
