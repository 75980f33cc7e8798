#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "attn/image.hpp"

namespace attn {

/// Parameters of the Gaussian rendering and the max-decay recurrence.
struct DecayConfig {
    double rate = 0.17;             ///< fraction of likelihood lost per frame, in (0, 1)
    double sigma = 1.0;             ///< Gaussian standard deviation in map pixels
    double truncation_radius = 4.0; ///< contributions beyond this many sigmas are dropped; >= 3

    void validate() const;
};

inline constexpr std::size_t kDefaultMaxPoints = 4;

struct FocusPointSet {
    std::size_t frame_index = 0;
    std::vector<Point2> points;

    bool operator==(const FocusPointSet&) const = default;
};

/// Throws ValidationError if a point lies outside `geometry` or there are more than `max_points`.
void validate_points(const FocusPointSet& set, Geometry geometry, std::size_t max_points = kDefaultMaxPoints);

enum class MapKind { instantaneous, aggregated };

/// Single-channel likelihood grid with values in [0, 1].
class AttentionMap {
public:
    AttentionMap() = default;
    explicit AttentionMap(Geometry geometry, MapKind kind = MapKind::instantaneous);

    Geometry geometry() const { return geometry_; }
    int height() const { return geometry_.height; }
    int width() const { return geometry_.width; }
    MapKind kind() const { return kind_; }
    void set_kind(MapKind kind) { kind_ = kind; }

    double& at(int y, int x) { return values_[static_cast<std::size_t>(y) * geometry_.width + x]; }
    double at(int y, int x) const { return values_[static_cast<std::size_t>(y) * geometry_.width + x]; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double max_value() const;

    bool operator==(const AttentionMap&) const = default;

private:
    Geometry geometry_;
    MapKind kind_ = MapKind::instantaneous;
    std::vector<double> values_;
};

/// Instantaneous heatmap h_t: per-pixel max over unit-peak Gaussians centred on each focus point.
AttentionMap render_heatmap(const FocusPointSet& points, Geometry geometry, const DecayConfig& cfg);

/// Base case of the recurrence: y_0 = h_0.
AttentionMap aggregate_step(const AttentionMap& current, const DecayConfig& cfg);

/// y_t = max(h_t, (1 - r) y_{t-1}), pixel-wise.
AttentionMap aggregate_step(const AttentionMap& current, const AttentionMap& previous, const DecayConfig& cfg);

/// Runs the recurrence over a recording. Frame indices must be strictly increasing;
/// a jump of k indices decays the running map k times (skipped frames count as empty).
std::vector<AttentionMap> aggregate_sequence(std::span<const FocusPointSet> point_sets, Geometry geometry,
                                             const DecayConfig& cfg);

/// Aggregates independent recordings in parallel; result[i] = aggregate_sequence(recordings[i], ...).
std::vector<std::vector<AttentionMap>> aggregate_sequences(std::span<const std::vector<FocusPointSet>> recordings,
                                                           Geometry geometry, const DecayConfig& cfg);

/// Fixed-scale 8-bit quantization: round(v * 255), half away from zero. Values outside [0, 1] are rejected.
Image quantize(const AttentionMap& map);

/// Inverse scale of quantize (v / 255); exact only on the 256 quantization levels.
AttentionMap dequantize(const Image& map, MapKind kind = MapKind::aggregated);

namespace serial {

// Reference implementations of the two map kernels, kept for equivalence tests and benchmarks.
AttentionMap render_heatmap(const FocusPointSet& points, Geometry geometry, const DecayConfig& cfg);
AttentionMap aggregate_step(const AttentionMap& current, const AttentionMap& previous, const DecayConfig& cfg);

} // namespace serial

} // namespace attn
