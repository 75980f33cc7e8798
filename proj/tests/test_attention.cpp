#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "attn/attention.hpp"
#include "attn/errors.hpp"
#include "attn/io.hpp"
#include "attn/kernels.hpp"
#include "attn/random.hpp"

using namespace attn;

namespace {

// Dense rendering without truncation.
AttentionMap dense_render(const FocusPointSet& set, Geometry g, double sigma)
{
    AttentionMap m(g);
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            double v = 0.0;
            for (const Point2& p : set.points) {
                const double d2 = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
                v = std::max(v, std::exp(-d2 / (2 * sigma * sigma)));
            }
            m.at(y, x) = v;
        }
    }
    return m;
}

FocusPointSet random_set(Rng& rng, Geometry g, std::size_t frame, std::size_t max_points = 4)
{
    FocusPointSet s{frame, {}};
    const auto n = rng.uniform_int(0, static_cast<std::int64_t>(max_points));
    for (std::int64_t i = 0; i < n; ++i) {
        s.points.push_back({rng.uniform(0.0, g.width - 1e-9), rng.uniform(0.0, g.height - 1e-9)});
    }
    return s;
}

} // namespace

TEST_CASE("empty point set renders an all-zero map")
{
    const AttentionMap m = render_heatmap({0, {}}, {6, 9}, {});
    CHECK(m.height() == 6);
    CHECK(m.width() == 9);
    CHECK(m.max_value() == 0.0);
}

TEST_CASE("single point follows the closed-form Gaussian")
{
    const AttentionMap m = render_heatmap({0, {{10, 10}}}, {20, 20}, {});
    CHECK(m.at(10, 10) == 1.0);
    CHECK(m.at(10, 11) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(m.at(10, 11) == doctest::Approx(0.60653).epsilon(1e-5));
    CHECK(m.at(10, 13) == doctest::Approx(std::exp(-4.5)).epsilon(1e-15));
    CHECK(m.at(10, 13) == doctest::Approx(0.01111).epsilon(1e-3));
}

TEST_CASE("two points combine by pixel-wise max")
{
    const FocusPointSet set{0, {{5, 5}, {7, 5}}};
    const AttentionMap m = render_heatmap(set, {12, 12}, {});
    const AttentionMap ref = dense_render(set, {12, 12}, 1.0);
    CHECK(m.at(5, 6) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(m.at(5, 6) == ref.at(5, 6));
}

TEST_CASE("points outside the geometry are rejected")
{
    CHECK_THROWS_AS(render_heatmap({0, {{20, 3}}}, {10, 20}, {}), ValidationError);
    CHECK_THROWS_AS(render_heatmap({0, {{-0.5, 3}}}, {10, 20}, {}), ValidationError);
    CHECK_THROWS_AS(render_heatmap({0, {{3, 10}}}, {10, 20}, {}), ValidationError);
}

TEST_CASE("decay config validation")
{
    CHECK_THROWS_AS((DecayConfig{0.0, 1.0, 4.0}.validate()), ValidationError);
    CHECK_THROWS_AS((DecayConfig{1.0, 1.0, 4.0}.validate()), ValidationError);
    CHECK_THROWS_AS((DecayConfig{0.17, 0.0, 4.0}.validate()), ValidationError);
    CHECK_THROWS_AS((DecayConfig{0.17, 1.0, 2.0}.validate()), ValidationError);
    CHECK_NOTHROW(DecayConfig{}.validate());
}

TEST_CASE("aggregate_step base case and decay")
{
    const DecayConfig cfg;
    const AttentionMap h = render_heatmap({0, {{3, 3}}}, {8, 8}, cfg);
    CHECK(aggregate_step(h, cfg).values() == h.values());

    const AttentionMap zero(Geometry{8, 8});
    const AttentionMap y1 = aggregate_step(zero, h, cfg);
    CHECK(y1.max_value() == doctest::Approx(0.83).epsilon(1e-15));

    AttentionMap y = h;
    for (int i = 0; i < 30; ++i) {
        y = aggregate_step(zero, y, cfg);
    }
    CHECK(y.max_value() == doctest::Approx(std::pow(0.83, 30)).epsilon(1e-12));
    CHECK(std::abs(y.max_value() - 0.003735) < 1e-6);
}

TEST_CASE("aggregate_step geometry mismatch names both shapes")
{
    const AttentionMap a(Geometry{4, 5});
    const AttentionMap b(Geometry{5, 4});
    try {
        aggregate_step(a, b, {});
        FAIL("expected mismatch error");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("4x5") != std::string::npos);
        CHECK(msg.find("5x4") != std::string::npos);
    }
}

TEST_CASE("aggregate_sequence base cases")
{
    const DecayConfig cfg;
    const Geometry g{10, 10};
    const std::vector<FocusPointSet> one{{0, {{4, 4}}}};
    const auto out1 = aggregate_sequence(one, g, cfg);
    REQUIRE(out1.size() == 1);
    CHECK(out1[0].values() == render_heatmap(one[0], g, cfg).values());

    const std::vector<FocusPointSet> two{{0, {{4, 4}}}, {1, {{4, 4}}}};
    const auto out2 = aggregate_sequence(two, g, cfg);
    CHECK(out2[1].values() == render_heatmap(two[1], g, cfg).values());
}

TEST_CASE("aggregate_sequence rejects unordered or duplicate indices")
{
    const Geometry g{4, 4};
    const std::vector<FocusPointSet> dup{{0, {}}, {0, {}}};
    const std::vector<FocusPointSet> back{{2, {}}, {1, {}}};
    CHECK_THROWS_AS(aggregate_sequence(dup, g, {}), ValidationError);
    CHECK_THROWS_AS(aggregate_sequence(back, g, {}), ValidationError);
}

TEST_CASE("gaps decay as empty frames")
{
    const DecayConfig cfg;
    const Geometry g{6, 6};
    const std::vector<FocusPointSet> gapped{{0, {{2, 2}}}, {3, {}}};
    const std::vector<FocusPointSet> filled{{0, {{2, 2}}}, {1, {}}, {2, {}}, {3, {}}};
    const auto a = aggregate_sequence(gapped, g, cfg);
    const auto b = aggregate_sequence(filled, g, cfg);
    REQUIRE(a.size() == 2);
    CHECK(a[1].values() == b[3].values());
}

TEST_CASE("property: recurrence equals the unrolled max formula")
{
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const Geometry g{16, 16};
        const DecayConfig cfg{rng.uniform(0.05, 0.95), rng.uniform(0.5, 3.0), 4.0};
        const auto frames = static_cast<std::size_t>(rng.uniform_int(1, 20));
        std::vector<FocusPointSet> sets;
        for (std::size_t t = 0; t < frames; ++t) {
            sets.push_back(random_set(rng, g, t));
        }
        const auto out = aggregate_sequence(sets, g, cfg);
        REQUIRE(out.size() == frames);
        std::vector<AttentionMap> h;
        for (const auto& s : sets) {
            h.push_back(render_heatmap(s, g, cfg));
        }
        double worst = 0.0;
        for (std::size_t t = 0; t < frames; ++t) {
            for (std::size_t q = 0; q < g.pixel_count(); ++q) {
                double expect = 0.0;
                for (std::size_t kk = 0; kk <= t; ++kk) {
                    expect = std::max(expect, std::pow(1.0 - cfg.rate, static_cast<double>(t - kk)) * h[kk].values()[q]);
                }
                worst = std::max(worst, std::abs(expect - out[t].values()[q]));
            }
        }
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("property: decay floor, fresh fixation and range")
{
    Rng rng(99);
    const Geometry g{20, 24};
    const DecayConfig cfg;
    std::vector<FocusPointSet> sets;
    for (std::size_t t = 0; t < 15; ++t) {
        sets.push_back(random_set(rng, g, t));
    }
    const auto out = aggregate_sequence(sets, g, cfg);
    for (std::size_t t = 0; t < out.size(); ++t) {
        for (double v : out[t].values()) {
            CHECK((v >= 0.0 && v <= 1.0));
        }
        if (t > 0) {
            for (std::size_t q = 0; q < g.pixel_count(); ++q) {
                CHECK(out[t].values()[q] >= (1.0 - cfg.rate) * out[t - 1].values()[q]);
            }
        }
    }
    // Points on pixel centres read back exactly 1.0 in the aggregated map.
    for (std::size_t t = 0; t < 10; ++t) {
        FocusPointSet s{t, {}};
        for (int i = 0; i < 3; ++i) {
            s.points.push_back({static_cast<double>(rng.uniform_int(0, g.width - 1)),
                                static_cast<double>(rng.uniform_int(0, g.height - 1))});
        }
        sets[t] = s;
    }
    const auto fresh = aggregate_sequence(sets, g, cfg);
    for (std::size_t t = 0; t < 10; ++t) {
        for (const Point2& p : sets[t].points) {
            CHECK(fresh[t].at(static_cast<int>(p.y), static_cast<int>(p.x)) == 1.0);
        }
    }
    // Fresh fixation on a pixel centre dominates whatever came before.
    std::vector<FocusPointSet> seq{{0, {{3, 4}}}, {1, {{10, 12}}}, {2, {{3, 4}}}};
    const auto o = aggregate_sequence(seq, g, cfg);
    CHECK(o[1].at(12, 10) == 1.0);
    CHECK(o[2].at(4, 3) == 1.0);
}

TEST_CASE("property: truncation at 4 sigma is invisible after quantization")
{
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Geometry g{32, 32};
        const DecayConfig cfg{0.17, rng.uniform(0.5, 3.0), 4.0};
        const FocusPointSet s = random_set(rng, g, 0);
        CHECK(quantize(render_heatmap(s, g, cfg)) == quantize(dense_render(s, g, cfg.sigma)));
    }
}

TEST_CASE("property: results do not depend on worker count")
{
    Rng rng(77);
    const Geometry g{24, 31};
    std::vector<std::vector<FocusPointSet>> recs(3);
    for (auto& r : recs) {
        for (std::size_t t = 0; t < 12; ++t) {
            r.push_back(random_set(rng, g, t));
        }
    }
    kernels::set_workers(1);
    const auto ref = aggregate_sequences(recs, g, {});
    for (int w : {2, 4, 8}) {
        kernels::set_workers(w);
        const auto out = aggregate_sequences(recs, g, {});
        for (std::size_t r = 0; r < recs.size(); ++r) {
            for (std::size_t t = 0; t < ref[r].size(); ++t) {
                CHECK(out[r][t].values() == ref[r][t].values());
            }
        }
        for (std::size_t t = 0; t < recs[0].size(); ++t) {
            CHECK(render_heatmap(recs[0][t], g, {}).values() == serial::render_heatmap(recs[0][t], g, {}).values());
        }
    }
    kernels::set_workers(1);
}

TEST_CASE("quantize examples")
{
    AttentionMap m(Geometry{1, 4});
    m.values() = {0.0, 1.0, 0.83, std::exp(-0.5)};
    const Image q = quantize(m);
    CHECK(q.at(0, 0) == 0);
    CHECK(q.at(0, 1) == 255);
    CHECK(q.at(0, 2) == 212);
    CHECK(q.at(0, 3) == 155);
    m.values()[0] = 0.5 / 255.0; // exactly half a step rounds up
    CHECK(quantize(m).at(0, 0) == 1);
}

TEST_CASE("quantize rejects out-of-range values")
{
    AttentionMap m(Geometry{1, 2});
    m.values() = {0.5, 1.0000001};
    CHECK_THROWS_AS(quantize(m), ValidationError);
    m.values() = {-1e-9, 0.5};
    CHECK_THROWS_AS(quantize(m), ValidationError);
}

TEST_CASE("property: quantize is monotone and hits both endpoints")
{
    AttentionMap m(Geometry{1, 1001});
    for (int i = 0; i <= 1000; ++i) {
        m.values()[i] = i / 1000.0;
    }
    const Image q = quantize(m);
    for (int i = 1; i <= 1000; ++i) {
        CHECK(q.at(0, i) >= q.at(0, i - 1));
    }
    CHECK(q.at(0, 0) == 0);
    CHECK(q.at(0, 1000) == 255);
    const AttentionMap back = dequantize(q);
    CHECK(quantize(back) == q);
}

TEST_CASE("raw float map round trip")
{
    AttentionMap m(Geometry{3, 5});
    for (std::size_t i = 0; i < m.values().size(); ++i) {
        m.values()[i] = static_cast<float>(i) / 16.0f;
    }
    std::stringstream buf;
    write_attention_raw(buf, m);
    CHECK(buf.str().size() == 16 + 15 * 4);
    CHECK(buf.str().substr(0, 4) == "ATTN");
    const AttentionMap r = read_attention_raw(buf);
    CHECK(r.geometry() == m.geometry());
    CHECK(r.values() == m.values());
}
