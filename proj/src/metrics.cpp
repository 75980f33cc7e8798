#include "attn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "attn/errors.hpp"
#include "attn/kernels.hpp"
#include "attn/random.hpp"

namespace attn {

double iou(const Box& a, const Box& b)
{
    const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    if (iw <= 0.0 || ih <= 0.0) {
        return 0.0;
    }
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

double average_precision(std::span<const Detection> detections, std::span<const BoxAnnotation> ground_truth,
                         double iou_threshold)
{
    if (ground_truth.empty()) {
        return 0.0;
    }
    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return detections[a].score > detections[b].score; });

    std::vector<bool> matched(ground_truth.size(), false);
    std::vector<double> precision;
    std::vector<double> recall;
    precision.reserve(order.size());
    recall.reserve(order.size());
    std::size_t tp = 0;
    std::size_t fp = 0;
    const double n_gt = static_cast<double>(ground_truth.size());
    for (std::size_t idx : order) {
        const Detection& d = detections[idx];
        std::ptrdiff_t best = -1;
        double best_iou = 0.0;
        for (std::size_t g = 0; g < ground_truth.size(); ++g) {
            if (matched[g] || ground_truth[g].image_id != d.image_id || ground_truth[g].class_id != d.class_id) {
                continue;
            }
            const double v = iou(d.box, ground_truth[g].box);
            if (v >= iou_threshold && (best < 0 || v > best_iou)) {
                best = static_cast<std::ptrdiff_t>(g);
                best_iou = v;
            }
        }
        if (best >= 0) {
            matched[static_cast<std::size_t>(best)] = true;
            ++tp;
        } else {
            ++fp;
        }
        precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        recall.push_back(static_cast<double>(tp) / n_gt);
    }
    for (std::size_t i = precision.size(); i-- > 1;) {
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    double sum = 0.0;
    for (int k = 0; k <= 100; ++k) {
        const double r = k / 100.0;
        const auto it = std::lower_bound(recall.begin(), recall.end(), r);
        if (it != recall.end()) {
            sum += precision[static_cast<std::size_t>(it - recall.begin())];
        }
    }
    return sum / 101.0;
}

std::array<double, 10> coco_iou_thresholds()
{
    std::array<double, 10> t{};
    for (int k = 0; k < 10; ++k) {
        t[k] = (50 + 5 * k) / 100.0;
    }
    return t;
}

double map_coco(std::span<const Detection> detections, std::span<const BoxAnnotation> ground_truth)
{
    std::set<int> classes;
    for (const BoxAnnotation& g : ground_truth) {
        classes.insert(g.class_id);
    }
    if (classes.empty()) {
        return 0.0;
    }
    const auto thresholds = coco_iou_thresholds();
    double total = 0.0;
    for (int cls : classes) {
        std::vector<Detection> dets;
        std::vector<BoxAnnotation> gts;
        std::copy_if(detections.begin(), detections.end(), std::back_inserter(dets),
                     [cls](const Detection& d) { return d.class_id == cls; });
        std::copy_if(ground_truth.begin(), ground_truth.end(), std::back_inserter(gts),
                     [cls](const BoxAnnotation& g) { return g.class_id == cls; });
        double per_class = 0.0;
        for (double t : thresholds) {
            per_class += average_precision(dets, gts, t);
        }
        total += per_class / static_cast<double>(thresholds.size());
    }
    return total / static_cast<double>(classes.size());
}

double command_mse(std::span<const Command> predicted, std::span<const Command> target)
{
    if (predicted.size() != target.size()) {
        throw ValidationError("command_mse: " + std::to_string(predicted.size()) + " predictions vs "
                              + std::to_string(target.size()) + " targets");
    }
    if (predicted.empty()) {
        throw ValidationError("command_mse of an empty set");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double ds = predicted[i].steering - target[i].steering;
        const double dv = predicted[i].velocity - target[i].velocity;
        sum += 0.5 * (ds * ds + dv * dv);
    }
    return sum / static_cast<double>(predicted.size());
}

const ReportRow& EvalReport::row(const std::string& condition) const
{
    for (const ReportRow& r : rows) {
        if (r.condition == condition) {
            return r;
        }
    }
    throw ValidationError("report has no condition \"" + condition + "\"");
}

std::string EvalReport::to_json() const
{
    nlohmann::ordered_json j;
    j["metric"] = metric;
    j["rows"] = nlohmann::ordered_json::array();
    for (const ReportRow& r : rows) {
        j["rows"].push_back({{"condition", r.condition}, {"value", r.value}, {"std", r.std}, {"count", r.count}});
    }
    j["metadata"]["config_hash"] = config_hash;
    j["metadata"]["counts"] = counts;
    return j.dump(2);
}

std::string EvalReport::to_csv() const
{
    std::ostringstream out;
    out.precision(17);
    out << "condition," << metric << ",std\n";
    for (const ReportRow& r : rows) {
        out << r.condition << ',' << r.value << ',' << r.std << '\n';
    }
    return out.str();
}

std::string factor_label(double factor)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", factor);
    return buf;
}

std::vector<std::vector<Sample>> make_brightness_sets(std::span<const Sample> samples, std::span<const double> factors)
{
    std::vector<std::vector<Sample>> out(factors.size());
    kernels::parallel_for(static_cast<std::ptrdiff_t>(factors.size()), [&](std::ptrdiff_t f) {
        out[f].reserve(samples.size());
        for (const Sample& s : samples) {
            out[f].push_back(brightness(s, factors[f]));
        }
    });
    return out;
}

EvalReport brightness_sweep(std::span<const BoxAnnotation> ground_truth,
                            const std::map<std::string, std::vector<Detection>>& predictions,
                            std::span<const double> factors)
{
    if (factors.empty()) {
        throw ValidationError("brightness sweep needs at least one factor");
    }
    std::vector<std::string> labels;
    std::string missing;
    for (double f : factors) {
        labels.push_back(factor_label(f));
        if (!predictions.contains(labels.back())) {
            missing += (missing.empty() ? "" : ", ") + labels.back();
        }
    }
    if (std::set<std::string>(labels.begin(), labels.end()).size() != labels.size()) {
        throw ValidationError("brightness factors must be distinct at two decimals");
    }
    if (!missing.empty()) {
        throw ValidationError("missing predictions for brightness factor(s): " + missing);
    }
    EvalReport report;
    report.metric = "map_50_95";
    report.rows.resize(labels.size());
    kernels::parallel_for(static_cast<std::ptrdiff_t>(labels.size()), [&](std::ptrdiff_t i) {
        const auto& dets = predictions.at(labels[i]);
        report.rows[i] = {labels[i], map_coco(dets, ground_truth), 0.0, dets.size()};
    });
    report.counts["ground_truth"] = ground_truth.size();
    report.counts["conditions"] = labels.size();
    return report;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

EvalReport budget_sweep(const BudgetTrainFn& train_fn, std::size_t dataset_size, std::span<const double> fractions,
                        int epochs, std::uint64_t seed)
{
    if (fractions.empty()) {
        throw ValidationError("budget sweep needs at least one fraction");
    }
    if (epochs < 1) {
        throw ValidationError("budget sweep needs at least one epoch");
    }
    std::vector<std::size_t> sizes;
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) {
            throw ValidationError("training fraction must lie in (0, 1], got " + std::to_string(f));
        }
        const auto n = static_cast<std::size_t>(std::floor(f * static_cast<double>(dataset_size)));
        if (n < 1) {
            throw ValidationError("fraction " + factor_label(f) + " of " + std::to_string(dataset_size)
                                  + " samples yields no training data");
        }
        sizes.push_back(n);
    }
    const std::vector<std::size_t> order = shuffled_indices(dataset_size, derive_seed(seed, "budget-shuffle"));
    EvalReport report;
    report.metric = "mse";
    report.rows.resize(fractions.size());
    kernels::parallel_for(static_cast<std::ptrdiff_t>(fractions.size()), [&](std::ptrdiff_t i) {
        const std::span<const std::size_t> subset(order.data(), sizes[i]);
        const std::vector<double> errors = train_fn(subset, epochs, derive_seed(seed, "budget-train"));
        if (errors.size() != static_cast<std::size_t>(epochs)) {
            throw ValidationError("budget train function returned " + std::to_string(errors.size())
                                  + " epoch errors, expected " + std::to_string(epochs));
        }
        const std::size_t window = std::min<std::size_t>(50, errors.size());
        const auto tail = std::span<const double>(errors).last(window);
        const double mean = std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(window);
        double var = 0.0;
        for (double e : tail) {
            var += (e - mean) * (e - mean);
        }
        report.rows[i] = {factor_label(fractions[i]), mean, std::sqrt(var / static_cast<double>(window)), sizes[i]};
    });
    report.counts["dataset_size"] = dataset_size;
    report.counts["epochs"] = static_cast<std::size_t>(epochs);
    return report;
}

} // namespace attn
