#include "attn/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attn/errors.hpp"
#include "attn/kernels.hpp"

namespace attn {

void DecayConfig::validate() const
{
    if (!(rate > 0.0 && rate < 1.0)) {
        throw ValidationError("decay rate must lie in (0, 1), got " + std::to_string(rate));
    }
    if (!(sigma > 0.0)) {
        throw ValidationError("sigma must be positive, got " + std::to_string(sigma));
    }
    if (!(truncation_radius >= 3.0)) {
        throw ValidationError("truncation_radius must be >= 3 sigmas, got " + std::to_string(truncation_radius));
    }
}

void validate_points(const FocusPointSet& set, Geometry geometry, std::size_t max_points)
{
    if (set.points.size() > max_points) {
        throw ValidationError("frame " + std::to_string(set.frame_index) + " has " + std::to_string(set.points.size())
                              + " focus points, limit is " + std::to_string(max_points));
    }
    for (const Point2& p : set.points) {
        if (!geometry.contains(p.x, p.y)) {
            throw ValidationError("focus point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") of frame "
                                  + std::to_string(set.frame_index) + " lies outside " + geometry.str());
        }
    }
}

AttentionMap::AttentionMap(Geometry geometry, MapKind kind)
    : geometry_(geometry), kind_(kind), values_(geometry.pixel_count(), 0.0)
{
    if (geometry.height < 0 || geometry.width < 0) {
        throw ValidationError("invalid map geometry " + geometry.str());
    }
}

double AttentionMap::max_value() const
{
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

namespace {

void check_render_inputs(const FocusPointSet& points, Geometry geometry, const DecayConfig& cfg)
{
    cfg.validate();
    for (const Point2& p : points.points) {
        if (!geometry.contains(p.x, p.y)) {
            throw ValidationError("focus point (" + std::to_string(p.x) + ", " + std::to_string(p.y)
                                  + ") outside map " + geometry.str());
        }
    }
}

void check_same_geometry(const AttentionMap& a, const AttentionMap& b)
{
    if (a.geometry() != b.geometry()) {
        throw ValidationError("attention map geometry mismatch: current " + a.geometry().str() + " vs previous "
                              + b.geometry().str());
    }
}

} // namespace

AttentionMap render_heatmap(const FocusPointSet& points, Geometry geometry, const DecayConfig& cfg)
{
    check_render_inputs(points, geometry, cfg);
    AttentionMap map(geometry, MapKind::instantaneous);
    kernels::parallel::splat_gaussians(points.points, geometry, cfg.sigma, cfg.truncation_radius, map.values());
    return map;
}

AttentionMap aggregate_step(const AttentionMap& current, const DecayConfig& cfg)
{
    cfg.validate();
    AttentionMap out = current;
    out.set_kind(MapKind::aggregated);
    return out;
}

AttentionMap aggregate_step(const AttentionMap& current, const AttentionMap& previous, const DecayConfig& cfg)
{
    cfg.validate();
    check_same_geometry(current, previous);
    AttentionMap out(current.geometry(), MapKind::aggregated);
    kernels::parallel::decay_max(current.values(), previous.values(), 1.0 - cfg.rate, out.values());
    return out;
}

namespace {

// Folds rendered heatmaps through the recurrence. Skipped frame indices act as
// empty frames: max(0, keep * y) = keep * y.
template <typename DecayMax>
std::vector<AttentionMap> fold_recurrence(std::vector<AttentionMap> rendered, std::span<const FocusPointSet> point_sets,
                                          const DecayConfig& cfg, DecayMax decay_max)
{
    const double keep = 1.0 - cfg.rate;
    std::vector<AttentionMap> out;
    out.reserve(rendered.size());
    for (std::size_t i = 0; i < rendered.size(); ++i) {
        if (i == 0) {
            rendered[0].set_kind(MapKind::aggregated);
            out.push_back(std::move(rendered[0]));
            continue;
        }
        const AttentionMap* previous = &out.back();
        AttentionMap decayed;
        if (point_sets[i].frame_index > point_sets[i - 1].frame_index + 1) {
            decayed = out.back();
            for (std::size_t gap = point_sets[i - 1].frame_index + 1; gap < point_sets[i].frame_index; ++gap) {
                for (double& v : decayed.values()) {
                    v = keep * v;
                }
            }
            previous = &decayed;
        }
        AttentionMap y(rendered[i].geometry(), MapKind::aggregated);
        decay_max(rendered[i].values(), previous->values(), keep, y.values());
        out.push_back(std::move(y));
    }
    return out;
}

void check_sequence(std::span<const FocusPointSet> point_sets, Geometry geometry)
{
    for (std::size_t i = 0; i < point_sets.size(); ++i) {
        if (i > 0 && point_sets[i].frame_index <= point_sets[i - 1].frame_index) {
            throw ValidationError("frame indices must be strictly increasing: "
                                  + std::to_string(point_sets[i - 1].frame_index) + " followed by "
                                  + std::to_string(point_sets[i].frame_index));
        }
        for (const Point2& p : point_sets[i].points) {
            if (!geometry.contains(p.x, p.y)) {
                throw ValidationError("focus point (" + std::to_string(p.x) + ", " + std::to_string(p.y)
                                      + ") of frame " + std::to_string(point_sets[i].frame_index) + " outside map "
                                      + geometry.str());
            }
        }
    }
}

} // namespace

std::vector<AttentionMap> aggregate_sequence(std::span<const FocusPointSet> point_sets, Geometry geometry,
                                             const DecayConfig& cfg)
{
    cfg.validate();
    check_sequence(point_sets, geometry);
    // Rendering is pure per frame, the recurrence is not: render in parallel, then fold in order.
    std::vector<AttentionMap> rendered(point_sets.size());
    const auto n = static_cast<std::ptrdiff_t>(point_sets.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        AttentionMap h(geometry, MapKind::instantaneous);
        kernels::serial::splat_gaussians(point_sets[i].points, geometry, cfg.sigma, cfg.truncation_radius,
                                         h.values());
        rendered[i] = std::move(h);
    }
    return fold_recurrence(std::move(rendered), point_sets, cfg, kernels::parallel::decay_max);
}

std::vector<std::vector<AttentionMap>> aggregate_sequences(std::span<const std::vector<FocusPointSet>> recordings,
                                                           Geometry geometry, const DecayConfig& cfg)
{
    cfg.validate();
    for (const auto& recording : recordings) {
        check_sequence(recording, geometry);
    }
    std::vector<std::vector<AttentionMap>> out(recordings.size());
    kernels::parallel_for(static_cast<std::ptrdiff_t>(recordings.size()), [&](std::ptrdiff_t i) {
        const auto& recording = recordings[i];
        std::vector<AttentionMap> rendered;
        rendered.reserve(recording.size());
        for (const FocusPointSet& set : recording) {
            AttentionMap h(geometry, MapKind::instantaneous);
            kernels::serial::splat_gaussians(set.points, geometry, cfg.sigma, cfg.truncation_radius, h.values());
            rendered.push_back(std::move(h));
        }
        out[i] = fold_recurrence(std::move(rendered), recording, cfg, kernels::serial::decay_max);
    });
    return out;
}

Image quantize(const AttentionMap& map)
{
    Image out(map.height(), map.width(), 1);
    auto dst = out.samples();
    const auto& src = map.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double v = src[i];
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ValidationError("attention value " + std::to_string(v) + " at pixel " + std::to_string(i)
                                  + " outside [0, 1]");
        }
        dst[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    return out;
}

AttentionMap dequantize(const Image& map, MapKind kind)
{
    if (map.channels() != 1) {
        throw ValidationError("attention image must have one channel, got " + std::to_string(map.channels()));
    }
    AttentionMap out(map.geometry(), kind);
    auto& dst = out.values();
    const auto src = map.samples();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = static_cast<double>(src[i]) / 255.0;
    }
    return out;
}

namespace serial {

AttentionMap render_heatmap(const FocusPointSet& points, Geometry geometry, const DecayConfig& cfg)
{
    check_render_inputs(points, geometry, cfg);
    AttentionMap map(geometry, MapKind::instantaneous);
    kernels::serial::splat_gaussians(points.points, geometry, cfg.sigma, cfg.truncation_radius, map.values());
    return map;
}

AttentionMap aggregate_step(const AttentionMap& current, const AttentionMap& previous, const DecayConfig& cfg)
{
    cfg.validate();
    check_same_geometry(current, previous);
    AttentionMap out(current.geometry(), MapKind::aggregated);
    kernels::serial::decay_max(current.values(), previous.values(), 1.0 - cfg.rate, out.values());
    return out;
}

} // namespace serial

} // namespace attn
