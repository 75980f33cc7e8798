#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "attn/errors.hpp"
#include "attn/metrics.hpp"
#include "attn/random.hpp"
#include "oracles.hpp"

using namespace attn;

namespace {

std::vector<BoxAnnotation> random_ground_truth(Rng& rng, int images, int classes)
{
    std::vector<BoxAnnotation> gt;
    for (int i = 0; i < images; ++i) {
        const int n = static_cast<int>(rng.uniform_int(0, 4));
        for (int k = 0; k < n; ++k) {
            gt.push_back({"img" + std::to_string(i), static_cast<int>(rng.uniform_int(0, classes - 1)),
                          {rng.uniform(0, 60), rng.uniform(0, 60), rng.uniform(4, 30), rng.uniform(4, 30)}});
        }
    }
    return gt;
}

// Jittered copies of ground truth plus some false positives. Scores are quantized so ties occur.
std::vector<Detection> noisy_detections(Rng& rng, const std::vector<BoxAnnotation>& gt, int images, int classes)
{
    std::vector<Detection> dets;
    for (const auto& g : gt) {
        if (rng.bernoulli(0.8)) {
            Box b = g.box;
            b.x += rng.uniform(-3, 3);
            b.y += rng.uniform(-3, 3);
            b.w *= rng.uniform(0.8, 1.2);
            b.h *= rng.uniform(0.8, 1.2);
            dets.push_back({g.image_id, g.class_id, b, std::round(rng.uniform() * 10) / 10});
        }
    }
    const int fps = static_cast<int>(rng.uniform_int(0, 6));
    for (int k = 0; k < fps; ++k) {
        dets.push_back({"img" + std::to_string(rng.uniform_int(0, images - 1)),
                        static_cast<int>(rng.uniform_int(0, classes - 1)),
                        {rng.uniform(0, 60), rng.uniform(0, 60), rng.uniform(4, 30), rng.uniform(4, 30)},
                        std::round(rng.uniform() * 10) / 10});
    }
    return dets;
}

std::vector<BoxAnnotation> as_ground_truth(const std::vector<Detection>& dets)
{
    std::vector<BoxAnnotation> gt;
    for (const auto& d : dets) {
        gt.push_back({d.image_id, d.class_id, d.box});
    }
    return gt;
}

} // namespace

TEST_CASE("iou examples")
{
    const Box a{0, 0, 10, 10};
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(a, {10, 0, 10, 10}) == 0.0);
    CHECK(iou(a, {20, 20, 5, 5}) == 0.0);
    CHECK(iou(a, {5, 0, 10, 10}) == doctest::Approx(50.0 / 150.0));
    CHECK(iou(a, {0, 0, 5, 5}) == doctest::Approx(0.25));

    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const Box p{rng.uniform(0, 20), rng.uniform(0, 20), rng.uniform(1, 20), rng.uniform(1, 20)};
        const Box q{rng.uniform(0, 20), rng.uniform(0, 20), rng.uniform(1, 20), rng.uniform(1, 20)};
        const double v = iou(p, q);
        CHECK(v == iou(q, p));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(v == doctest::Approx(oracle::box_iou(p, q)).epsilon(1e-12));
    }
}

TEST_CASE("average precision examples")
{
    const std::vector<BoxAnnotation> gt{{"a", 0, {0, 0, 10, 10}}, {"a", 0, {20, 20, 10, 10}}};

    SUBCASE("perfect detections")
    {
        const std::vector<Detection> d{{"a", 0, {0, 0, 10, 10}, 0.9}, {"a", 0, {20, 20, 10, 10}, 0.8}};
        CHECK(average_precision(d, gt, 0.5) == doctest::Approx(1.0));
    }
    SUBCASE("no detections")
    {
        CHECK(average_precision({}, gt, 0.5) == 0.0);
    }
    SUBCASE("no ground truth")
    {
        const std::vector<Detection> d{{"a", 0, {0, 0, 10, 10}, 0.9}};
        CHECK(average_precision(d, {}, 0.5) == 0.0);
    }
    SUBCASE("false positive ranked between the hits")
    {
        // PR points: (0.5, 1), (0.5, 1/2), (1, 2/3). Interpolated precision is 1 up to recall 0.5
        // (51 levels) and 2/3 above it (50 levels).
        const std::vector<Detection> d{
                {"a", 0, {0, 0, 10, 10}, 0.9}, {"a", 0, {50, 50, 10, 10}, 0.8}, {"a", 0, {20, 20, 10, 10}, 0.7}};
        CHECK(average_precision(d, gt, 0.5) == doctest::Approx((51.0 + 50.0 * 2.0 / 3.0) / 101.0));
    }
    SUBCASE("duplicates count as false positives")
    {
        const std::vector<Detection> d{{"a", 0, {0, 0, 10, 10}, 0.9}, {"a", 0, {0, 0, 10, 10}, 0.8}};
        // Recall stops at 0.5 with precision 1.
        CHECK(average_precision(d, gt, 0.5) == doctest::Approx(51.0 / 101.0));
    }
    SUBCASE("detections on another image do not match")
    {
        const std::vector<Detection> d{{"b", 0, {0, 0, 10, 10}, 0.9}};
        CHECK(average_precision(d, gt, 0.5) == 0.0);
    }
}

TEST_CASE("iou threshold boundary is inclusive")
{
    // IoU exactly 0.5: a 10x10 box against a 10x20 box containing it.
    const std::vector<BoxAnnotation> gt{{"a", 0, {0, 0, 10, 20}}};
    const std::vector<Detection> d{{"a", 0, {0, 0, 10, 10}, 0.9}};
    CHECK(iou(d[0].box, gt[0].box) == 0.5);
    CHECK(average_precision(d, gt, 0.5) == doctest::Approx(1.0));
    CHECK(average_precision(d, gt, 0.55) == 0.0);
    CHECK(map_coco(d, gt) == doctest::Approx(0.1));
}

TEST_CASE("map_coco examples")
{
    const auto t = coco_iou_thresholds();
    CHECK(t.front() == 0.5);
    CHECK(t.back() == 0.95);
    CHECK(t[3] == 0.65);

    const std::vector<BoxAnnotation> gt{{"a", 0, {0, 0, 10, 10}}, {"a", 1, {20, 20, 10, 10}}};
    // Class 0 perfect, class 1 missed entirely.
    const std::vector<Detection> d{{"a", 0, {0, 0, 10, 10}, 0.9}, {"a", 0, {20, 20, 10, 10}, 0.5}};
    CHECK(map_coco(d, gt) == doctest::Approx(0.5));
    CHECK(map_coco(d, {}) == 0.0);
    // Predictions equal to the ground truth score 1.0.
    std::vector<Detection> perfect;
    for (const auto& g : gt) {
        perfect.push_back({g.image_id, g.class_id, g.box, 0.9});
    }
    CHECK(map_coco(perfect, gt) == 1.0);
}

TEST_CASE("map_coco agrees with brute-force enumeration")
{
    Rng rng(17);
    for (int trial = 0; trial < 60; ++trial) {
        const auto gt = random_ground_truth(rng, 5, 3);
        const auto dets = noisy_detections(rng, gt, 5, 3);
        CHECK(map_coco(dets, gt) == doctest::Approx(oracle::map_50_95(dets, gt)).epsilon(1e-12));
    }
}

TEST_CASE("map_coco properties")
{
    Rng rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        const auto gt = random_ground_truth(rng, 4, 2);
        auto dets = noisy_detections(rng, gt, 4, 2);
        const double base = map_coco(dets, gt);
        CHECK(base >= 0.0);
        CHECK(base <= 1.0);

        // Order invariance when scores are distinct.
        for (std::size_t i = 0; i < dets.size(); ++i) {
            dets[i].score = (static_cast<double>(i) + 1.0) / static_cast<double>(dets.size() + 1);
        }
        const double distinct = map_coco(dets, gt);
        auto reversed = dets;
        std::reverse(reversed.begin(), reversed.end());
        CHECK(map_coco(reversed, gt) == distinct);

        // A lower threshold never lowers AP.
        for (int cls = 0; cls < 2; ++cls) {
            std::vector<Detection> cd;
            std::vector<BoxAnnotation> cg;
            std::copy_if(dets.begin(), dets.end(), std::back_inserter(cd), [&](auto& d) { return d.class_id == cls; });
            std::copy_if(gt.begin(), gt.end(), std::back_inserter(cg), [&](auto& g) { return g.class_id == cls; });
            double prev = 1.0;
            for (double th : coco_iou_thresholds()) {
                const double ap = average_precision(cd, cg, th);
                CHECK(ap <= prev + 1e-12);
                prev = ap;
            }
        }
    }
}

TEST_CASE("command_mse examples")
{
    const std::vector<Command> p{{0.0, 0.0}, {1.0, 1.0}};
    const std::vector<Command> t{{0.0, 0.0}, {0.0, 3.0}};
    // Sample 2: ((1)^2 + (2)^2) / 2 = 2.5; mean over samples 1.25.
    CHECK(command_mse(p, t) == 1.25);
    CHECK(command_mse(t, t) == 0.0);
    CHECK_THROWS_AS(command_mse(p, std::vector<Command>{{0, 0}}), ValidationError);
    CHECK_THROWS_AS(command_mse({}, {}), ValidationError);
}

TEST_CASE("factor labels")
{
    CHECK(factor_label(0.75) == "0.75");
    CHECK(factor_label(1.0) == "1.00");
    CHECK(factor_label(1.85) == "1.85");
}

TEST_CASE("brightness sweep")
{
    const std::vector<BoxAnnotation> gt{{"a", 0, {0, 0, 10, 10}}, {"b", 0, {5, 5, 10, 10}}};
    const std::vector<double> factors{0.75, 1.0, 1.85};
    const std::vector<Detection> perfect{{"a", 0, {0, 0, 10, 10}, 0.9}, {"b", 0, {5, 5, 10, 10}, 0.9}};
    const std::vector<Detection> half{{"a", 0, {0, 0, 10, 10}, 0.9}};

    SUBCASE("one row per factor in order")
    {
        const std::map<std::string, std::vector<Detection>> preds{{"0.75", half}, {"1.00", perfect}, {"1.85", {}}};
        const EvalReport r = brightness_sweep(gt, preds, factors);
        REQUIRE(r.rows.size() == 3);
        CHECK(r.rows[0].condition == "0.75");
        CHECK(r.rows[1].condition == "1.00");
        CHECK(r.rows[2].condition == "1.85");
        CHECK(r.row("1.00").value == 1.0);
        CHECK(r.row("0.75").value == doctest::Approx(51.0 / 101.0));
        CHECK(r.row("1.85").value == 0.0);
        CHECK_THROWS_AS(r.row("2.00"), ValidationError);

        const auto j = nlohmann::json::parse(r.to_json());
        CHECK(j["rows"].size() == 3);
        CHECK(r.to_csv().rfind("condition,map_50_95,std\n", 0) == 0);
    }
    SUBCASE("missing conditions are all named")
    {
        const std::map<std::string, std::vector<Detection>> preds{{"1.00", perfect}};
        try {
            brightness_sweep(gt, preds, factors);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("0.75") != std::string::npos);
            CHECK(msg.find("1.85") != std::string::npos);
        }
    }
    SUBCASE("perturbed sets scale colour only")
    {
        Sample s;
        s.id = "a";
        s.image = Image(2, 2, 3, 100);
        s.attention = Image(2, 2, 1, 200);
        s.boxes = {gt[0]};
        const std::vector<Sample> samples{s};
        const auto sets = make_brightness_sets(samples, factors);
        REQUIRE(sets.size() == 3);
        CHECK(sets[0][0].image.at(0, 0, 0) == 75);
        CHECK(sets[1][0] == s);
        CHECK(sets[2][0].image.at(1, 1, 2) == 185);
        CHECK(sets[2][0].attention == s.attention);
        CHECK(sets[2][0].boxes == s.boxes);
    }
}

TEST_CASE("budget sweep")
{
    // Each epoch's error is 1 / (subset size) + epoch noise, so smaller fractions score worse.
    const BudgetTrainFn fn = [](std::span<const std::size_t> idx, int epochs, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<double> errs;
        for (int e = 0; e < epochs; ++e) {
            errs.push_back(1.0 / static_cast<double>(idx.size()) + 0.01 * rng.uniform());
        }
        return errs;
    };
    const std::vector<double> fractions{0.1, 0.25, 0.5, 1.0};
    const EvalReport a = budget_sweep(fn, 200, fractions, 70, 4);
    const EvalReport b = budget_sweep(fn, 200, fractions, 70, 4);
    REQUIRE(a.rows.size() == 4);
    CHECK(a.rows[0].count == 20);
    CHECK(a.rows[1].count == 50);
    CHECK(a.rows[3].count == 200);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a.rows[i].value == b.rows[i].value);
        CHECK(a.rows[i].std == b.rows[i].std);
        CHECK(a.rows[i].std > 0.0);
        if (i > 0) {
            CHECK(a.rows[i].value < a.rows[i - 1].value);
        }
    }

    SUBCASE("statistics cover the last 50 epochs with population std")
    {
        const BudgetTrainFn ramp = [](std::span<const std::size_t>, int epochs, std::uint64_t) {
            std::vector<double> e;
            for (int k = 0; k < epochs; ++k) {
                e.push_back(k < epochs - 50 ? 1000.0 : (k % 2 == 0 ? 1.0 : 3.0));
            }
            return e;
        };
        const EvalReport r = budget_sweep(ramp, 10, std::vector<double>{1.0}, 60, 1);
        CHECK(r.rows[0].value == 2.0);
        CHECK(r.rows[0].std == 1.0);
        const EvalReport short_run = budget_sweep(ramp, 10, std::vector<double>{1.0}, 50, 1);
        CHECK(short_run.rows[0].value == 2.0);
    }
    SUBCASE("subsets are nested prefixes of one shuffle")
    {
        std::map<std::size_t, std::vector<std::size_t>> seen;
        const BudgetTrainFn record = [&](std::span<const std::size_t> idx, int epochs, std::uint64_t) {
#pragma omp critical(budget_test)
            seen[idx.size()] = std::vector<std::size_t>(idx.begin(), idx.end());
            return std::vector<double>(static_cast<std::size_t>(epochs), 0.0);
        };
        budget_sweep(record, 40, fractions, 1, 9);
        REQUIRE(seen.size() == 4);
        const auto& full = seen.at(40);
        for (const auto& [n, idx] : seen) {
            CHECK(std::equal(idx.begin(), idx.end(), full.begin()));
        }
        auto sorted = full;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            CHECK(sorted[i] == i);
        }
    }
    SUBCASE("invalid requests")
    {
        CHECK_THROWS_AS(budget_sweep(fn, 5, std::vector<double>{0.1}, 10, 1), ValidationError);
        CHECK_THROWS_AS(budget_sweep(fn, 100, std::vector<double>{0.0}, 10, 1), ValidationError);
        CHECK_THROWS_AS(budget_sweep(fn, 100, std::vector<double>{1.5}, 10, 1), ValidationError);
        CHECK_THROWS_AS(budget_sweep(fn, 100, std::vector<double>{}, 10, 1), ValidationError);
        CHECK_THROWS_AS(budget_sweep(fn, 100, std::vector<double>{0.5}, 0, 1), ValidationError);
    }
}

TEST_CASE("threshold counting")
{
    // IoU 0.72 matches at 0.50..0.70 and at none of the five higher thresholds.
    const std::vector<BoxAnnotation> gt{{"a", 0, {0, 0, 25, 4}}};
    const std::vector<Detection> d{{"a", 0, {0, 0, 18, 4}, 0.9}};
    CHECK(map_coco(d, gt) == 0.5);
    // IoU 0.3 never reaches the 0.5 threshold.
    const std::vector<Detection> low{{"a", 0, {0, 0, 7.5, 4}, 0.9}};
    CHECK(iou(low[0].box, gt[0].box) == doctest::Approx(0.3));
    CHECK(average_precision(low, gt, 0.5) == 0.0);
}
