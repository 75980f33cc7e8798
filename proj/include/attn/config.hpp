#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "attn/attention.hpp"
#include "attn/augment.hpp"
#include "attn/fusion.hpp"
#include "attn/gaze.hpp"
#include "attn/synthetic.hpp"
#include "attn/train.hpp"

namespace attn {

struct FusionConfig {
    FusionMode mode = FusionMode::channel;
    MarkStyle mark;
};

struct EvalConfig {
    std::vector<double> factors{0.75, 1.0, 1.85};
    std::vector<double> fractions{0.1, 0.25, 0.5, 1.0};
    std::size_t budget_samples = 1000;
    std::size_t budget_validation_samples = 200;
    int budget_epochs = 60;
    Geometry budget_geometry{32, 32};
    int budget_width = 8;
};

struct IoConfig {
    std::string out_dir = "attn_out";
};

/// Everything a run depends on. The augment seed is not configured separately: every stage
/// derives its own seed from `seed` and the stage name.
struct PipelineConfig {
    std::uint64_t seed = 0;
    int workers = 0; ///< 0 keeps the OpenMP default
    DecayConfig decay;
    IngestConfig ingest;
    std::vector<AugmentStep> augment = default_augment_steps();
    FusionConfig fusion;
    TrainConfig train;
    EvalConfig eval;
    IoConfig io;

    static std::vector<AugmentStep> default_augment_steps();

    void validate() const;
    BudgetExperiment budget_experiment() const;
};

/// Strict parse: unknown keys and wrong types are rejected with the offending key path.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& cfg);

/// FNV-1a of the serialized configuration, as 16 hex digits.
std::string config_hash(const PipelineConfig& cfg);

/// Applies "a.b.c" = value overrides on top of `base_json` (a serialized config). Values are read
/// as JSON when they parse, otherwise as plain strings.
std::string apply_overrides(const std::string& base_json,
                            const std::vector<std::pair<std::string, std::string>>& overrides);

} // namespace attn
