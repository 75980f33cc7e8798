#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attn/attention.hpp"
#include "attn/image.hpp"

namespace attn {

struct GazeSample {
    std::int64_t t_ns = 0;
    double x = 0.0;
    double y = 0.0;
    bool valid = true;

    bool operator==(const GazeSample&) const = default;
};

struct FrameManifestEntry {
    std::size_t frame_index = 0;
    std::int64_t t_ns = 0;
    std::string path;
    int width = 0;
    int height = 0;

    Geometry geometry() const { return {height, width}; }
};

/// Row-major 3x3 homography from tracker coordinates to camera pixels.
class CameraTransform {
public:
    CameraTransform(); // identity
    explicit CameraTransform(const std::array<double, 9>& matrix);

    const std::array<double, 9>& matrix() const { return m_; }
    double determinant() const;

    /// Homogeneous divide; nullopt when |w| < 1e-9.
    std::optional<Point2> apply(Point2 p) const;

private:
    std::array<double, 9> m_;
};

enum class GazeUnits { pixels, normalized };

/// Discard counters written next to the built attention maps.
struct IngestReport {
    std::size_t accepted = 0;
    std::size_t discarded_out_of_frame = 0;
    std::size_t discarded_invalid = 0;
    std::size_t discarded_degenerate = 0;
    std::size_t discarded_above_crop = 0;

    IngestReport& operator+=(const IngestReport& other);
    bool operator==(const IngestReport&) const = default;
};

enum class ProjectionStatus { accepted, invalid, out_of_frame, degenerate };

struct Projection {
    ProjectionStatus status = ProjectionStatus::invalid;
    Point2 point;
};

/// Parses gaze JSONL ({"t_ns", "x", "y", "valid"} per line). Blank lines are skipped.
/// Throws ParseError naming the line on malformed input or non-increasing timestamps.
std::vector<GazeSample> parse_gaze(std::istream& in);

/// Parses a frame manifest JSONL ({"frame_index", "t_ns", "path", "width", "height"} per line).
/// Frame indices must run 0, 1, 2, ... and timestamps must not decrease.
std::vector<FrameManifestEntry> parse_manifest(std::istream& in);

/// Maps a tracker sample into camera pixels. Normalized samples are scaled by the
/// camera geometry before the homography is applied.
Projection project_gaze(const GazeSample& sample, const CameraTransform& tf, Geometry geometry,
                        GazeUnits units = GazeUnits::pixels);

std::optional<Point2> to_camera_frame(const GazeSample& sample, const CameraTransform& tf, Geometry geometry);
/// As above, counting the reason for each discard in `report`.
std::optional<Point2> to_camera_frame(const GazeSample& sample, const CameraTransform& tf, Geometry geometry,
                                      IngestReport& report, GazeUnits units = GazeUnits::pixels);

struct SyncConfig {
    std::int64_t window_ns = 33'333'333; ///< one camera period at 30 FPS
    std::size_t max_points = kDefaultMaxPoints;
};

/// Associates camera-frame gaze samples with frames: a frame receives every valid,
/// in-frame sample with |t_gaze - t_frame| <= window/2, keeping the max_points most recent
/// (in chronological order). Both inputs must be time-ordered.
std::vector<FocusPointSet> synchronize(std::span<const GazeSample> camera_gaze,
                                       std::span<const FrameManifestEntry> manifest, const SyncConfig& cfg);

/// Rows removed from the top by crop_upper_third.
inline int cropped_rows(int height)
{
    return height / 3;
}

/// Drops floor(H/3) rows from the top and shifts the points up; points above the cut are removed.
std::pair<Frame, FocusPointSet> crop_upper_third(const Frame& frame, const FocusPointSet& points);
Image crop_upper_third(const Image& image);
/// Point-only variant; `discarded` (optional) receives the number of removed points.
FocusPointSet crop_points_upper_third(const FocusPointSet& points, Geometry geometry,
                                      std::size_t* discarded = nullptr);
Geometry cropped_geometry(Geometry geometry);

struct IngestConfig {
    SyncConfig sync;
    CameraTransform transform;
    GazeUnits units = GazeUnits::pixels;
    bool crop_upper_third = true;
};

struct IngestResult {
    Geometry geometry; ///< map geometry after preprocessing
    std::vector<FocusPointSet> point_sets;
    IngestReport report;
};

/// Full recording ingestion: project, filter, synchronize and (optionally) crop.
/// All manifest entries must share one geometry.
IngestResult ingest_recording(std::span<const GazeSample> gaze, std::span<const FrameManifestEntry> manifest,
                              const IngestConfig& cfg);

} // namespace attn
