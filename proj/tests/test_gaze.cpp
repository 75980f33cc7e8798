#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "attn/errors.hpp"
#include "attn/gaze.hpp"
#include "attn/random.hpp"

using namespace attn;

namespace {

std::vector<FrameManifestEntry> manifest_of(std::size_t n, std::int64_t period, int w = 848, int h = 480)
{
    std::vector<FrameManifestEntry> m;
    for (std::size_t i = 0; i < n; ++i) {
        m.push_back({i, static_cast<std::int64_t>(i) * period, "f.png", w, h});
    }
    return m;
}

} // namespace

TEST_CASE("parse_gaze basics")
{
    std::istringstream empty("");
    CHECK(parse_gaze(empty).empty());

    std::istringstream one("{\"t_ns\":100,\"x\":0.5,\"y\":0.5,\"valid\":true}\n");
    const auto s = parse_gaze(one);
    REQUIRE(s.size() == 1);
    CHECK(s[0].t_ns == 100);
    CHECK(s[0].x == 0.5);
    CHECK(s[0].valid);
}

TEST_CASE("parse_gaze reports the offending line")
{
    std::istringstream order("{\"t_ns\":100,\"x\":1,\"y\":1,\"valid\":true}\n{\"t_ns\":90,\"x\":1,\"y\":1,\"valid\":true}\n");
    try {
        parse_gaze(order);
        FAIL("expected an ordering error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    std::istringstream bad("{\"t_ns\":1,\"x\":1,\"y\":1,\"valid\":true}\n\n{\"t_ns\":5,\"x\":oops}\n");
    try {
        parse_gaze(bad);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("oops") != std::string::npos);
    }
    std::istringstream missing("{\"t_ns\":1,\"x\":1,\"valid\":true}\n");
    CHECK_THROWS_AS(parse_gaze(missing), ParseError);
}

TEST_CASE("parse_manifest checks contiguity and dimensions")
{
    std::istringstream ok("{\"frame_index\":0,\"t_ns\":0,\"path\":\"a.png\",\"width\":4,\"height\":3}\n"
                          "{\"frame_index\":1,\"t_ns\":0,\"path\":\"b.png\",\"width\":4,\"height\":3}\n");
    const auto m = parse_manifest(ok);
    REQUIRE(m.size() == 2);
    CHECK(m[1].path == "b.png");
    CHECK(m[0].geometry() == Geometry{3, 4});

    std::istringstream gap("{\"frame_index\":0,\"t_ns\":0,\"path\":\"a.png\",\"width\":4,\"height\":3}\n"
                           "{\"frame_index\":2,\"t_ns\":5,\"path\":\"b.png\",\"width\":4,\"height\":3}\n");
    CHECK_THROWS_AS(parse_manifest(gap), ParseError);
    std::istringstream back("{\"frame_index\":0,\"t_ns\":9,\"path\":\"a.png\",\"width\":4,\"height\":3}\n"
                            "{\"frame_index\":1,\"t_ns\":5,\"path\":\"b.png\",\"width\":4,\"height\":3}\n");
    CHECK_THROWS_AS(parse_manifest(back), ParseError);
    std::istringstream zero("{\"frame_index\":0,\"t_ns\":0,\"path\":\"a.png\",\"width\":0,\"height\":3}\n");
    CHECK_THROWS_AS(parse_manifest(zero), ParseError);
}

TEST_CASE("to_camera_frame examples")
{
    const Geometry g{480, 848};
    const CameraTransform identity;
    const auto p = to_camera_frame({0, 10, 10, true}, identity, g);
    REQUIRE(p);
    CHECK(*p == Point2{10, 10});
    CHECK_FALSE(to_camera_frame({0, 900, 10, true}, identity, g));
    CHECK_FALSE(to_camera_frame({0, 10, 10, false}, identity, g));

    const CameraTransform scale({2, 0, 0, 0, 2, 0, 0, 0, 1});
    const auto q = to_camera_frame({0, 100, 50, true}, scale, g);
    REQUIRE(q);
    CHECK(*q == Point2{200, 100});
}

TEST_CASE("to_camera_frame counts every discard reason")
{
    const Geometry g{100, 100};
    // Maps (x, y) to (x, y) / (x - 50): w vanishes at x = 50.
    const CameraTransform tf({1, 0, 0, 0, 1, 0, 1, 0, -50});
    IngestReport report;
    CHECK_FALSE(to_camera_frame({0, 50, 10, true}, tf, g, report));
    CHECK(report.discarded_degenerate == 1);
    CHECK_FALSE(to_camera_frame({0, 10, 10, false}, CameraTransform{}, g, report));
    CHECK(report.discarded_invalid == 1);
    CHECK_FALSE(to_camera_frame({0, 100, 10, true}, CameraTransform{}, g, report));
    CHECK(report.discarded_out_of_frame == 1);
    CHECK(to_camera_frame({0, 99.5, 10, true}, CameraTransform{}, g, report));
    CHECK(report.accepted == 1);
}

TEST_CASE("normalized gaze units scale by frame size")
{
    IngestReport report;
    const auto p = to_camera_frame({0, 0.5, 0.25, true}, CameraTransform{}, {480, 848}, report, GazeUnits::normalized);
    REQUIRE(p);
    CHECK(*p == Point2{424, 120});
}

TEST_CASE("singular transforms are rejected")
{
    CHECK_THROWS_AS(CameraTransform({1, 2, 3, 2, 4, 6, 0, 0, 1}), ValidationError);
}

TEST_CASE("synchronize examples")
{
    SyncConfig cfg;
    cfg.window_ns = 33'000'000;
    auto frames = manifest_of(1, 0);
    frames[0].t_ns = 100;
    const std::vector<GazeSample> near{{100, 5, 5, true}};
    const auto a = synchronize(near, frames, cfg);
    REQUIRE(a.size() == 1);
    CHECK(a[0].points.size() == 1);

    frames[0].t_ns = 1'000'000'000;
    const std::vector<GazeSample> far{{0, 5, 5, true}};
    CHECK(synchronize(far, frames, cfg)[0].points.empty());

    frames[0].t_ns = 1000;
    std::vector<GazeSample> five;
    for (int i = 0; i < 5; ++i) {
        five.push_back({1000 + i, static_cast<double>(i), 1.0, true});
    }
    const auto c = synchronize(five, frames, cfg);
    REQUIRE(c[0].points.size() == 4);
    // Oracle: sort by recency, keep four, restore chronological order.
    std::vector<GazeSample> sorted = five;
    std::sort(sorted.begin(), sorted.end(), [](const auto& l, const auto& r) { return l.t_ns > r.t_ns; });
    sorted.resize(4);
    std::reverse(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(c[0].points[i].x == sorted[i].x);
    }
}

TEST_CASE("synchronize window boundary is inclusive")
{
    SyncConfig cfg;
    cfg.window_ns = 20;
    auto frames = manifest_of(1, 0);
    frames[0].t_ns = 100;
    const std::vector<GazeSample> edge{{90, 1, 1, true}, {111, 2, 2, true}};
    const auto out = synchronize(edge, frames, cfg);
    REQUIRE(out[0].points.size() == 1);
    CHECK(out[0].points[0].x == 1);
}

TEST_CASE("property: disjoint windows assign each sample at most once")
{
    Rng rng(4);
    const auto frames = manifest_of(50, 1000, 64, 48);
    std::vector<GazeSample> gaze;
    std::int64_t t = 0;
    for (int i = 0; i < 400; ++i) {
        t += rng.uniform_int(1, 200);
        gaze.push_back({t, rng.uniform(0.0, 63.9), rng.uniform(0.0, 47.9), true});
    }
    SyncConfig cfg;
    cfg.window_ns = 999;
    cfg.max_points = 1000;
    const auto sets = synchronize(gaze, frames, cfg);
    std::size_t assigned = 0;
    std::size_t expected = 0;
    for (const auto& s : sets) {
        assigned += s.points.size();
    }
    for (const auto& g : gaze) {
        for (const auto& f : frames) {
            if (2 * std::abs(g.t_ns - f.t_ns) <= cfg.window_ns) {
                ++expected;
            }
        }
    }
    CHECK(assigned == expected);
    CHECK(assigned <= gaze.size());
}

TEST_CASE("crop_upper_third examples")
{
    CHECK(cropped_geometry({480, 848}).height == 320);
    CHECK(cropped_geometry({481, 848}).height == 321);
    CHECK(cropped_rows(481) == 160);

    Frame f{Image(480, 848, 3), 0, 0, "s"};
    const auto [cf, pts] = crop_upper_third(f, {0, {{10, 200}, {10, 100}}});
    CHECK(cf.image.height() == 320);
    REQUIRE(pts.points.size() == 1);
    CHECK(pts.points[0] == Point2{10, 40});

    std::size_t dropped = 0;
    crop_points_upper_third({0, {{1, 1}, {1, 159.9}, {1, 160}}}, {480, 848}, &dropped);
    CHECK(dropped == 2);
}

TEST_CASE("property: crop keeps the pixel under each point")
{
    Rng rng(8);
    Image img(61, 40, 3);
    for (auto& v : img.samples()) {
        v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    }
    FocusPointSet pts{0, {}};
    for (int i = 0; i < 4; ++i) {
        pts.points.push_back({rng.uniform(0.0, 39.99), rng.uniform(0.0, 60.99)});
    }
    const auto [cf, cp] = crop_upper_third(Frame{img, 0, 0, "s"}, pts);
    std::size_t j = 0;
    for (const Point2& p : pts.points) {
        if (p.y < cropped_rows(61)) {
            continue;
        }
        const Point2& q = cp.points.at(j++);
        for (int c = 0; c < 3; ++c) {
            CHECK(img.at(static_cast<int>(p.y), static_cast<int>(p.x), c)
                  == cf.image.at(static_cast<int>(q.y), static_cast<int>(q.x), c));
        }
    }
    CHECK(j == cp.points.size());
}

TEST_CASE("ingest_recording filters, synchronizes and crops")
{
    const auto frames = manifest_of(3, 33'333'333, 64, 48);
    const std::vector<GazeSample> gaze{
            {0, 10, 30, true},         // kept, y -> 14
            {1, 10, 5, true},          // above the crop line
            {2, 70, 30, true},         // out of frame
            {33'333'333, 5, 40, false}, // invalid
            {66'666'666, 60, 47, true}, // kept
    };
    IngestConfig cfg;
    const IngestResult r = ingest_recording(gaze, frames, cfg);
    CHECK(r.geometry == Geometry{32, 64});
    REQUIRE(r.point_sets.size() == 3);
    CHECK(r.point_sets[0].points == std::vector<Point2>{{10, 14}});
    CHECK(r.point_sets[1].points.empty());
    CHECK(r.point_sets[2].points == std::vector<Point2>{{60, 31}});
    CHECK(r.report.discarded_out_of_frame == 1);
    CHECK(r.report.discarded_invalid == 1);
    CHECK(r.report.discarded_above_crop == 1);
    for (const auto& s : r.point_sets) {
        for (const Point2& p : s.points) {
            CHECK(r.geometry.contains(p.x, p.y));
        }
    }

    auto mixed = frames;
    mixed[1].width = 32;
    CHECK_THROWS_AS(ingest_recording(gaze, mixed, cfg), ValidationError);
}
