#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "attn/annotations.hpp"
#include "attn/augment.hpp"

namespace attn {

/// Intersection over union of two boxes with positive area.
double iou(const Box& a, const Box& b);

/// COCO-style AP at one IoU threshold. Detections are ranked by descending score (stable);
/// each takes the highest-IoU unmatched ground truth of the same image and class with
/// IoU >= threshold. Precision is made monotone and sampled at recall k/100, k = 0..100.
/// Returns 0 when there is no ground truth.
double average_precision(std::span<const Detection> detections, std::span<const BoxAnnotation> ground_truth,
                         double iou_threshold);

/// IoU thresholds 0.50, 0.55, ..., 0.95 (computed as (50 + 5k) / 100).
std::array<double, 10> coco_iou_thresholds();

/// mAP@.5:.95: per class, mean AP over the 10 thresholds; then mean over classes with ground truth
/// (ascending class id). Returns 0 when no class has ground truth.
double map_coco(std::span<const Detection> detections, std::span<const BoxAnnotation> ground_truth);

struct Command {
    double steering = 0.0;
    double velocity = 0.0;

    bool operator==(const Command&) const = default;
};

/// Mean over samples of the mean squared error of the two components.
double command_mse(std::span<const Command> predicted, std::span<const Command> target);

struct ReportRow {
    std::string condition;
    double value = 0.0;
    double std = 0.0;
    std::size_t count = 0;
};

/// One row per evaluated condition, in configuration order.
struct EvalReport {
    std::string metric;
    std::vector<ReportRow> rows;
    std::string config_hash;
    std::map<std::string, std::size_t> counts;

    const ReportRow& row(const std::string& condition) const;
    std::string to_json() const;
    /// Header "condition,metric,std" then one line per row.
    std::string to_csv() const;
};

/// Condition label of a brightness factor, e.g. 0.75 -> "0.75", 1 -> "1.00".
std::string factor_label(double factor);

/// Builds one perturbed evaluation set per factor; result[i] holds `samples` at factors[i].
std::vector<std::vector<Sample>> make_brightness_sets(std::span<const Sample> samples, std::span<const double> factors);

/// Scores predictions made on each perturbed set against the unchanged ground truth. Keys of
/// `predictions` are factor labels. Throws ValidationError listing every missing condition.
EvalReport brightness_sweep(std::span<const BoxAnnotation> ground_truth,
                            const std::map<std::string, std::vector<Detection>>& predictions,
                            std::span<const double> factors);

/// Trains on the given dataset indices and returns one evaluation error per epoch.
using BudgetTrainFn = std::function<std::vector<double>(std::span<const std::size_t> train_indices, int epochs,
                                                        std::uint64_t seed)>;

/// For each fraction f, trains on the first floor(f * N) entries of one seeded shuffle of [0, N)
/// and reports the mean and population std of the last min(50, epochs) per-epoch errors.
EvalReport budget_sweep(const BudgetTrainFn& train_fn, std::size_t dataset_size, std::span<const double> fractions,
                        int epochs, std::uint64_t seed);

/// Seeded Fisher-Yates permutation of [0, n).
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

} // namespace attn
