#include "attn/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "attn/errors.hpp"
#include "attn/random.hpp"

namespace attn {

MarkStyle synthetic_mark_style()
{
    return MarkStyle{2, {255, 0, 0}, 1.0};
}

namespace {

void add_blob(std::vector<double>& canvas, Geometry g, Point2 center, double amplitude, double sigma)
{
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            const double dx = x - center.x;
            const double dy = y - center.y;
            canvas[static_cast<std::size_t>(y) * g.width + x] += amplitude * std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
        }
    }
}

Point2 random_center(Rng& rng, Geometry g, int margin)
{
    return {static_cast<double>(rng.uniform_int(margin, g.width - 1 - margin)),
            static_cast<double>(rng.uniform_int(margin, g.height - 1 - margin))};
}

} // namespace

SyntheticTask make_synthetic_task(std::size_t n, Geometry geometry, std::uint64_t seed, bool marked)
{
    if (n < 1) {
        throw ValidationError("synthetic task needs n >= 1");
    }
    if (geometry.width < 8 || geometry.height < 8) {
        throw ValidationError("synthetic task geometry must be at least 8x8");
    }
    SyntheticTask task;
    task.data.images = nn::Tensor(static_cast<int>(n), 3, geometry.height, geometry.width);
    // The scene draws come from one stream and the marks are deterministic, so the marked and
    // unmarked variants of a seed share the same scenes and targets.
    Rng rng(seed);
    const MarkStyle style = synthetic_mark_style();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 target = random_center(rng, geometry, 2);
        const Point2 distractor = random_center(rng, geometry, 2);
        std::vector<double> canvas(geometry.pixel_count());
        for (double& v : canvas) {
            v = rng.uniform(0.0, 40.0);
        }
        add_blob(canvas, geometry, target, 200.0, 1.5);
        add_blob(canvas, geometry, distractor, 140.0, 1.5);
        Image img(geometry.height, geometry.width, 3);
        for (std::size_t p = 0; p < canvas.size(); ++p) {
            const auto v = static_cast<std::uint8_t>(std::clamp(std::lround(canvas[p]), 0L, 255L));
            img.samples()[3 * p] = v;
            img.samples()[3 * p + 1] = v;
            img.samples()[3 * p + 2] = v;
        }
        if (marked) {
            img = mark_points(img, FocusPointSet{i, {target}}, style).pixels;
        }
        for (int c = 0; c < 3; ++c) {
            for (int y = 0; y < geometry.height; ++y) {
                for (int x = 0; x < geometry.width; ++x) {
                    task.data.images.at(static_cast<int>(i), c, y, x) = img.at(y, x, c) / 255.0;
                }
            }
        }
        task.data.targets.push_back({2.0 * target.x / (geometry.width - 1) - 1.0,
                                     2.0 * target.y / (geometry.height - 1) - 1.0});
        task.images.push_back(std::move(img));
        task.blob_centers.push_back(target);
    }
    return task;
}

RestorationDataset make_synthetic_restoration(std::size_t n, Geometry geometry, std::uint64_t seed,
                                              const DecayConfig& render, int channels)
{
    if (n < 1) {
        throw ValidationError("synthetic restoration set needs n >= 1");
    }
    RestorationDataset ds;
    ds.images = nn::Tensor(static_cast<int>(n), channels, geometry.height, geometry.width);
    ds.targets = nn::Tensor(static_cast<int>(n), 1, geometry.height, geometry.width);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        FocusPointSet points{i, {}};
        const int blobs = static_cast<int>(rng.uniform_int(1, 2));
        for (int b = 0; b < blobs; ++b) {
            points.points.push_back(random_center(rng, geometry, 1));
        }
        std::vector<double> canvas(geometry.pixel_count());
        for (double& v : canvas) {
            v = rng.uniform(0.0, 0.1);
        }
        for (const Point2& p : points.points) {
            add_blob(canvas, geometry, p, 0.8, 1.5);
        }
        const AttentionMap target = render_heatmap(points, geometry, render);
        for (int y = 0; y < geometry.height; ++y) {
            for (int x = 0; x < geometry.width; ++x) {
                const double v = std::min(1.0, canvas[static_cast<std::size_t>(y) * geometry.width + x]);
                for (int c = 0; c < channels; ++c) {
                    ds.images.at(static_cast<int>(i), c, y, x) = v;
                }
                ds.targets.at(static_cast<int>(i), 0, y, x) = target.at(y, x);
            }
        }
    }
    return ds;
}

void BudgetExperiment::validate() const
{
    if (samples < 1 || validation_samples < 1) {
        throw ValidationError("budget experiment needs at least one training and one validation sample");
    }
    if (geometry.height != train.net.image_height || geometry.width != train.net.image_width) {
        throw ValidationError("budget experiment geometry " + geometry.str() + " does not match the command net input "
                              + Geometry{train.net.image_height, train.net.image_width}.str());
    }
    train.net.validate();
    train.optim.validate();
    if (train.batch_size < 1) {
        throw ValidationError("batch size must be positive");
    }
}

EvalReport synthetic_budget_sweep(const BudgetExperiment& experiment, bool marked, std::uint64_t seed)
{
    experiment.validate();
    const SyntheticTask task = make_synthetic_task(experiment.samples, experiment.geometry,
                                                   derive_seed(seed, "budget-data"), marked);
    const SyntheticTask held_out = make_synthetic_task(experiment.validation_samples, experiment.geometry,
                                                       derive_seed(seed, "budget-validation"), marked);
    const BudgetTrainFn fn = [&](std::span<const std::size_t> indices, int epochs, std::uint64_t train_seed) {
        return train_commands(task.data.subset(indices), held_out.data, experiment.train, epochs, train_seed);
    };
    return budget_sweep(fn, experiment.samples, experiment.fractions, experiment.epochs, seed);
}

} // namespace attn
