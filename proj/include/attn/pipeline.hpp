#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "attn/augment.hpp"
#include "attn/config.hpp"
#include "attn/gaze.hpp"
#include "attn/metrics.hpp"

namespace attn {

namespace fs = std::filesystem;

/// One line of a sample index (index.jsonl). Paths are stored relative to the index file and
/// resolved on read. `crop_rows` rows are removed from the top of `image` when it is loaded.
struct IndexEntry {
    std::string id;
    fs::path image;
    int crop_rows = 0;
    fs::path attention;
    std::optional<std::size_t> frame_index;
    std::optional<std::int64_t> t_ns;
    std::vector<Point2> points;
};

std::vector<IndexEntry> read_index(const fs::path& path);
void write_index(const fs::path& path, const std::vector<IndexEntry>& entries);

/// Loads an entry as an augmentation sample (RGB image, attention map, points, boxes for its id).
Sample load_sample(const IndexEntry& entry, const std::vector<BoxAnnotation>& boxes);

/// Throws ValidationError naming `path` when it does not exist.
void require_input(const fs::path& path, const std::string& what);

struct Recording {
    std::string name;
    fs::path gaze;
    fs::path manifest;
};

struct BuildSummary {
    IngestReport total;
    std::map<std::string, IngestReport> sequences;
    std::size_t frames = 0;
};

/// Writes <out>/<seq>/<frame:06d>.png, <out>/index.jsonl and <out>/report.json.
BuildSummary cmd_build(const PipelineConfig& cfg, const std::vector<Recording>& recordings, const fs::path& out);

/// Augments every sample of an index; writes images, attention maps, index.jsonl and boxes.jsonl to `out`.
void cmd_augment(const PipelineConfig& cfg, const fs::path& index, const std::optional<fs::path>& boxes,
                 const fs::path& out);

/// Fuses every sample of an index per cfg.fusion and writes <out>/dataset.jsonl. `commands` holds
/// {id, steering, velocity} lines; `boxes` is referenced from each dataset line.
void cmd_fuse(const PipelineConfig& cfg, const fs::path& index, const std::optional<fs::path>& commands,
              const std::optional<fs::path>& boxes, const fs::path& out);

/// Trains the attention predictor on (image, attention) pairs; writes checkpoint.tnet and train_log.csv.
TrainResult cmd_train(const PipelineConfig& cfg, const fs::path& index, const fs::path& out);

double cmd_eval_map(const fs::path& detections, const fs::path& ground_truth);

struct AttentionScore {
    double smooth_l1 = 0.0;
    double mse = 0.0;
    std::size_t count = 0;
};

AttentionScore cmd_eval_att(const PipelineConfig& cfg, const fs::path& checkpoint, const fs::path& index);

/// Both files hold {steering, velocity} lines in matching order.
double cmd_eval_mse(const fs::path& predicted, const fs::path& target);

/// Scores <preds>/<factor label>.jsonl against `ground_truth` for every configured factor. With an
/// index, the perturbed evaluation images are written under <out>/sets/<label>/ first.
EvalReport cmd_sweep_brightness(const PipelineConfig& cfg, const fs::path& ground_truth, const fs::path& preds,
                                const std::optional<fs::path>& index, const fs::path& out);

/// Synthetic budget sweep, marked vs unmarked; rows are labelled "marked@0.10", "unmarked@0.10", ...
EvalReport cmd_sweep_budget(const PipelineConfig& cfg, const fs::path& out);

/// Shortest decimal that reads back to `v`, always with a fractional part ("1.0", "0.5").
std::string format_double(double v);

} // namespace attn
