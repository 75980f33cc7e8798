#pragma once

#include <cstdint>
#include <vector>

#include "attn/attention.hpp"
#include "attn/fusion.hpp"
#include "attn/image.hpp"
#include "attn/train.hpp"

namespace attn {

/// Desk-scale stand-in for the imitation experiment: each RGB image holds a bright target blob
/// at an integer pixel (bx, by) and a dimmer distractor blob over low-level noise. The target
/// command is the blob position normalised to [-1, 1]: (2 bx / (W-1) - 1, 2 by / (H-1) - 1).
/// With `marked`, a point mark (MarkStyle{radius 2}) is drawn at the target blob.
struct SyntheticTask {
    CommandDataset data;
    std::vector<Image> images;       ///< 8-bit source images (after marking)
    std::vector<Point2> blob_centers;
};

SyntheticTask make_synthetic_task(std::size_t n, Geometry geometry, std::uint64_t seed, bool marked);

/// Single-channel blob images paired with their rendered Gaussian heatmaps, for restoration training.
RestorationDataset make_synthetic_restoration(std::size_t n, Geometry geometry, std::uint64_t seed,
                                              const DecayConfig& render, int channels = 1);

/// Marker used by make_synthetic_task.
MarkStyle synthetic_mark_style();

struct BudgetExperiment {
    std::size_t samples = 1000;
    std::size_t validation_samples = 200;
    Geometry geometry{32, 32};
    std::vector<double> fractions{0.1, 0.25, 0.5, 1.0};
    int epochs = 60;
    CommandTrainConfig train;

    void validate() const;
};

/// Budget sweep of CommandNet on make_synthetic_task data, scored on a separate validation set
/// drawn with the same `marked` setting.
EvalReport synthetic_budget_sweep(const BudgetExperiment& experiment, bool marked, std::uint64_t seed);

} // namespace attn
