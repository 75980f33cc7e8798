#include "attn/gaze.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <string>

#include <json.hpp>

#include "attn/errors.hpp"

namespace attn {

using nlohmann::json;

CameraTransform::CameraTransform()
    : m_{1, 0, 0, 0, 1, 0, 0, 0, 1}
{
}

CameraTransform::CameraTransform(const std::array<double, 9>& matrix)
    : m_(matrix)
{
    if (!(std::abs(determinant()) > 1e-12)) {
        throw ValidationError("camera transform is not invertible (|det| <= 1e-12)");
    }
}

double CameraTransform::determinant() const
{
    return m_[0] * (m_[4] * m_[8] - m_[5] * m_[7]) - m_[1] * (m_[3] * m_[8] - m_[5] * m_[6])
            + m_[2] * (m_[3] * m_[7] - m_[4] * m_[6]);
}

std::optional<Point2> CameraTransform::apply(Point2 p) const
{
    const double x = m_[0] * p.x + m_[1] * p.y + m_[2];
    const double y = m_[3] * p.x + m_[4] * p.y + m_[5];
    const double w = m_[6] * p.x + m_[7] * p.y + m_[8];
    if (std::abs(w) < 1e-9) {
        return std::nullopt;
    }
    return Point2{x / w, y / w};
}

IngestReport& IngestReport::operator+=(const IngestReport& other)
{
    accepted += other.accepted;
    discarded_out_of_frame += other.discarded_out_of_frame;
    discarded_invalid += other.discarded_invalid;
    discarded_degenerate += other.discarded_degenerate;
    discarded_above_crop += other.discarded_above_crop;
    return *this;
}

namespace {

bool blank(const std::string& line)
{
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string clip(const std::string& line)
{
    return line.size() > 120 ? line.substr(0, 117) + "..." : line;
}

json parse_object(const std::string& line, std::size_t line_no)
{
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(line_no, "invalid JSON: " + clip(line));
    }
    if (!obj.is_object()) {
        throw ParseError(line_no, "expected a JSON object: " + clip(line));
    }
    return obj;
}

const json& field(const json& obj, const char* key, std::size_t line_no, const std::string& line)
{
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError(line_no, std::string("missing key \"") + key + "\": " + clip(line));
    }
    return *it;
}

std::int64_t integer_field(const json& obj, const char* key, std::size_t line_no, const std::string& line)
{
    const json& v = field(obj, key, line_no, line);
    if (!v.is_number_integer()) {
        throw ParseError(line_no, std::string("\"") + key + "\" must be an integer: " + clip(line));
    }
    return v.get<std::int64_t>();
}

double number_field(const json& obj, const char* key, std::size_t line_no, const std::string& line)
{
    const json& v = field(obj, key, line_no, line);
    if (!v.is_number()) {
        throw ParseError(line_no, std::string("\"") + key + "\" must be a number: " + clip(line));
    }
    return v.get<double>();
}

} // namespace

std::vector<GazeSample> parse_gaze(std::istream& in)
{
    std::vector<GazeSample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) {
            continue;
        }
        const json obj = parse_object(line, line_no);
        GazeSample s;
        s.t_ns = integer_field(obj, "t_ns", line_no, line);
        s.x = number_field(obj, "x", line_no, line);
        s.y = number_field(obj, "y", line_no, line);
        const json& valid = field(obj, "valid", line_no, line);
        if (!valid.is_boolean()) {
            throw ParseError(line_no, "\"valid\" must be a boolean: " + clip(line));
        }
        s.valid = valid.get<bool>();
        if (!out.empty() && s.t_ns <= out.back().t_ns) {
            throw ParseError(line_no, "timestamp " + std::to_string(s.t_ns) + " does not increase (previous "
                                              + std::to_string(out.back().t_ns) + ")");
        }
        out.push_back(s);
    }
    return out;
}

std::vector<FrameManifestEntry> parse_manifest(std::istream& in)
{
    std::vector<FrameManifestEntry> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) {
            continue;
        }
        const json obj = parse_object(line, line_no);
        FrameManifestEntry e;
        const std::int64_t index = integer_field(obj, "frame_index", line_no, line);
        if (index != static_cast<std::int64_t>(out.size())) {
            throw ParseError(line_no, "frame_index " + std::to_string(index) + " breaks the contiguous sequence (expected "
                                              + std::to_string(out.size()) + ")");
        }
        e.frame_index = static_cast<std::size_t>(index);
        e.t_ns = integer_field(obj, "t_ns", line_no, line);
        const json& path = field(obj, "path", line_no, line);
        if (!path.is_string()) {
            throw ParseError(line_no, "\"path\" must be a string: " + clip(line));
        }
        e.path = path.get<std::string>();
        e.width = static_cast<int>(integer_field(obj, "width", line_no, line));
        e.height = static_cast<int>(integer_field(obj, "height", line_no, line));
        if (e.width <= 0 || e.height <= 0) {
            throw ParseError(line_no, "frame dimensions must be positive: " + clip(line));
        }
        if (!out.empty() && e.t_ns < out.back().t_ns) {
            throw ParseError(line_no, "timestamp " + std::to_string(e.t_ns) + " decreases (previous "
                                              + std::to_string(out.back().t_ns) + ")");
        }
        out.push_back(std::move(e));
    }
    return out;
}

Projection project_gaze(const GazeSample& sample, const CameraTransform& tf, Geometry geometry, GazeUnits units)
{
    if (!sample.valid) {
        return {ProjectionStatus::invalid, {}};
    }
    Point2 p{sample.x, sample.y};
    if (units == GazeUnits::normalized) {
        p.x *= geometry.width;
        p.y *= geometry.height;
    }
    const auto mapped = tf.apply(p);
    if (!mapped) {
        return {ProjectionStatus::degenerate, {}};
    }
    if (!geometry.contains(mapped->x, mapped->y)) {
        return {ProjectionStatus::out_of_frame, *mapped};
    }
    return {ProjectionStatus::accepted, *mapped};
}

std::optional<Point2> to_camera_frame(const GazeSample& sample, const CameraTransform& tf, Geometry geometry)
{
    IngestReport ignored;
    return to_camera_frame(sample, tf, geometry, ignored);
}

std::optional<Point2> to_camera_frame(const GazeSample& sample, const CameraTransform& tf, Geometry geometry,
                                      IngestReport& report, GazeUnits units)
{
    const Projection p = project_gaze(sample, tf, geometry, units);
    switch (p.status) {
    case ProjectionStatus::accepted:
        ++report.accepted;
        return p.point;
    case ProjectionStatus::invalid:
        ++report.discarded_invalid;
        break;
    case ProjectionStatus::out_of_frame:
        ++report.discarded_out_of_frame;
        break;
    case ProjectionStatus::degenerate:
        ++report.discarded_degenerate;
        break;
    }
    return std::nullopt;
}

std::vector<FocusPointSet> synchronize(std::span<const GazeSample> camera_gaze,
                                       std::span<const FrameManifestEntry> manifest, const SyncConfig& cfg)
{
    if (cfg.window_ns < 0) {
        throw ValidationError("association window must be non-negative");
    }
    std::vector<FocusPointSet> out;
    out.reserve(manifest.size());
    // Window test in doubled units avoids rounding window/2: 2|dt| <= window.
    std::size_t lo = 0;
    for (const FrameManifestEntry& frame : manifest) {
        while (lo < camera_gaze.size() && 2 * (frame.t_ns - camera_gaze[lo].t_ns) > cfg.window_ns) {
            ++lo;
        }
        FocusPointSet set;
        set.frame_index = frame.frame_index;
        const Geometry g = frame.geometry();
        for (std::size_t i = lo; i < camera_gaze.size() && 2 * (camera_gaze[i].t_ns - frame.t_ns) <= cfg.window_ns;
             ++i) {
            const GazeSample& s = camera_gaze[i];
            if (s.valid && g.contains(s.x, s.y)) {
                set.points.push_back({s.x, s.y});
            }
        }
        if (set.points.size() > cfg.max_points) {
            set.points.erase(set.points.begin(),
                             set.points.end() - static_cast<std::ptrdiff_t>(cfg.max_points));
        }
        out.push_back(std::move(set));
    }
    return out;
}

Geometry cropped_geometry(Geometry geometry)
{
    return {geometry.height - cropped_rows(geometry.height), geometry.width};
}

Image crop_upper_third(const Image& image)
{
    const int cut = cropped_rows(image.height());
    Image out(image.height() - cut, image.width(), image.channels());
    const std::size_t row_bytes = static_cast<std::size_t>(image.width()) * image.channels();
    for (int y = 0; y < out.height(); ++y) {
        std::copy_n(image.row(y + cut), row_bytes, out.row(y));
    }
    return out;
}

FocusPointSet crop_points_upper_third(const FocusPointSet& points, Geometry geometry, std::size_t* discarded)
{
    const double cut = cropped_rows(geometry.height);
    FocusPointSet out;
    out.frame_index = points.frame_index;
    std::size_t dropped = 0;
    for (const Point2& p : points.points) {
        const double y = p.y - cut;
        if (y < 0.0) {
            ++dropped;
            continue;
        }
        out.points.push_back({p.x, y});
    }
    if (discarded) {
        *discarded = dropped;
    }
    return out;
}

std::pair<Frame, FocusPointSet> crop_upper_third(const Frame& frame, const FocusPointSet& points)
{
    Frame cropped;
    cropped.image = crop_upper_third(frame.image);
    cropped.frame_index = frame.frame_index;
    cropped.t_ns = frame.t_ns;
    cropped.sequence = frame.sequence;
    return {std::move(cropped), crop_points_upper_third(points, frame.image.geometry())};
}

IngestResult ingest_recording(std::span<const GazeSample> gaze, std::span<const FrameManifestEntry> manifest,
                              const IngestConfig& cfg)
{
    IngestResult result;
    if (manifest.empty()) {
        return result;
    }
    const Geometry frame_geometry = manifest.front().geometry();
    for (const FrameManifestEntry& e : manifest) {
        if (e.geometry() != frame_geometry) {
            throw ValidationError("frame " + std::to_string(e.frame_index) + " has geometry " + e.geometry().str()
                                  + ", recording uses " + frame_geometry.str());
        }
    }
    std::vector<GazeSample> camera;
    camera.reserve(gaze.size());
    for (const GazeSample& s : gaze) {
        if (auto p = to_camera_frame(s, cfg.transform, frame_geometry, result.report, cfg.units)) {
            camera.push_back({s.t_ns, p->x, p->y, true});
        }
    }
    result.point_sets = synchronize(camera, manifest, cfg.sync);
    result.geometry = frame_geometry;
    if (cfg.crop_upper_third) {
        for (FocusPointSet& set : result.point_sets) {
            std::size_t dropped = 0;
            set = crop_points_upper_third(set, frame_geometry, &dropped);
            result.report.discarded_above_crop += dropped;
        }
        result.geometry = cropped_geometry(frame_geometry);
    }
    return result;
}

} // namespace attn
