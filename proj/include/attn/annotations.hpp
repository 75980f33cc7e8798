#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace attn {

/// Axis-aligned box, top-left origin, pixel units. Pixel (r, c) covers [c, c+1) x [r, r+1).
struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const { return w * h; }
    bool operator==(const Box&) const = default;
};

struct BoxAnnotation {
    std::string image_id;
    int class_id = 0;
    Box box;

    bool operator==(const BoxAnnotation&) const = default;
};

struct Detection {
    std::string image_id;
    int class_id = 0;
    Box box;
    double score = 0.0;

    bool operator==(const Detection&) const = default;
};

/// JSONL {image_id, class_id, x, y, w, h}; image_id may be a string or an integer.
std::vector<BoxAnnotation> parse_boxes(std::istream& in);
void write_boxes(std::ostream& out, const std::vector<BoxAnnotation>& boxes);

/// JSONL {image_id, class_id, x, y, w, h, score}; requires w, h > 0 and score in [0, 1].
std::vector<Detection> parse_detections(std::istream& in);
void write_detections(std::ostream& out, const std::vector<Detection>& dets);

} // namespace attn
