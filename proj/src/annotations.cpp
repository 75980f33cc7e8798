#include "attn/annotations.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "attn/errors.hpp"

namespace attn {

using nlohmann::json;

namespace {

template <typename Fn>
void for_each_object(std::istream& in, Fn&& fn)
{
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
            continue;
        }
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error&) {
            throw ParseError(line_no, "invalid JSON: " + line.substr(0, 120));
        }
        if (!obj.is_object()) {
            throw ParseError(line_no, "expected a JSON object");
        }
        try {
            fn(obj, line_no);
        } catch (const json::exception& e) {
            throw ParseError(line_no, e.what());
        }
    }
}

std::string image_id_of(const json& obj, std::size_t line_no)
{
    const json& v = obj.at("image_id");
    if (v.is_string()) {
        return v.get<std::string>();
    }
    if (v.is_number_integer()) {
        return std::to_string(v.get<std::int64_t>());
    }
    throw ParseError(line_no, "\"image_id\" must be a string or integer");
}

Box box_of(const json& obj, std::size_t line_no)
{
    Box b{obj.at("x").get<double>(), obj.at("y").get<double>(), obj.at("w").get<double>(), obj.at("h").get<double>()};
    if (!(b.w > 0.0 && b.h > 0.0)) {
        throw ParseError(line_no, "box width and height must be positive");
    }
    return b;
}

} // namespace

std::vector<BoxAnnotation> parse_boxes(std::istream& in)
{
    std::vector<BoxAnnotation> out;
    for_each_object(in, [&](const json& obj, std::size_t line_no) {
        out.push_back({image_id_of(obj, line_no), obj.at("class_id").get<int>(), box_of(obj, line_no)});
    });
    return out;
}

void write_boxes(std::ostream& out, const std::vector<BoxAnnotation>& boxes)
{
    for (const BoxAnnotation& b : boxes) {
        out << json{{"image_id", b.image_id}, {"class_id", b.class_id}, {"x", b.box.x}, {"y", b.box.y},
                    {"w", b.box.w}, {"h", b.box.h}}
                        .dump()
            << '\n';
    }
}

std::vector<Detection> parse_detections(std::istream& in)
{
    std::vector<Detection> out;
    for_each_object(in, [&](const json& obj, std::size_t line_no) {
        Detection d{image_id_of(obj, line_no), obj.at("class_id").get<int>(), box_of(obj, line_no),
                    obj.at("score").get<double>()};
        if (!(d.score >= 0.0 && d.score <= 1.0)) {
            throw ParseError(line_no, "score must lie in [0, 1]");
        }
        out.push_back(std::move(d));
    });
    return out;
}

void write_detections(std::ostream& out, const std::vector<Detection>& dets)
{
    for (const Detection& d : dets) {
        out << json{{"image_id", d.image_id}, {"class_id", d.class_id}, {"x", d.box.x}, {"y", d.box.y},
                    {"w", d.box.w}, {"h", d.box.h}, {"score", d.score}}
                        .dump()
            << '\n';
    }
}

} // namespace attn
