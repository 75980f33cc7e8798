#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "attn/metrics.hpp"
#include "attn/nn.hpp"
#include "attn/optim.hpp"
#include "attn/tinynet.hpp"

namespace attn {

struct LossConfig {
    double beta = 1.0; ///< smooth-L1 transition point

    void validate() const;
    bool operator==(const LossConfig&) const = default;
};

struct TrainConfig {
    TinyNetConfig net;
    OptimConfig optim;
    LossConfig loss;
    int epochs = 60;
    int batch_size = 16;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

/// Images N x C x H x W (scaled to [0, 1]) with target maps N x 1 x H x W in [0, 1].
struct RestorationDataset {
    nn::Tensor images;
    nn::Tensor targets;

    std::size_t size() const { return static_cast<std::size_t>(images.n); }
};

struct EpochRecord {
    int epoch = 0; ///< 1-based
    double loss = 0.0;
    double lr = 0.0;

    bool operator==(const EpochRecord&) const = default;
};

struct TrainResult {
    std::vector<EpochRecord> log;
    AttentionNet net;
};

/// Restoration training with smooth-L1 loss, AdamW and per-epoch cosine annealing. The logged loss
/// of an epoch is the sample-weighted mean of its mini-batch losses, measured before each update.
/// Batches follow a seeded shuffle, so the run is a pure function of (dataset, cfg, seed).
TrainResult train(const RestorationDataset& dataset, const TrainConfig& cfg, std::uint64_t seed);

/// CSV "epoch,loss,lr".
void write_training_log(std::ostream& out, std::span<const EpochRecord> log);

/// Little-endian binary: "TNET", u32 version, u32 input_channels, u32 base_width, u32 depth,
/// f64 leaky_slope, u64 parameter count, then f64 parameters in declaration order.
void save_checkpoint(std::ostream& out, const AttentionNet& net);
AttentionNet load_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const AttentionNet& net);
AttentionNet load_checkpoint(const std::filesystem::path& path);

/// Images with regression targets (steering, velocity) for the imitation stand-in.
struct CommandDataset {
    nn::Tensor images;
    std::vector<Command> targets;

    std::size_t size() const { return targets.size(); }
    CommandDataset subset(std::span<const std::size_t> indices) const;
};

struct CommandTrainConfig {
    CommandNetConfig net;
    OptimConfig optim;
    int batch_size = 16;
};

/// Trains a CommandNet with MSE loss; returns command_mse on `validation` after every epoch.
std::vector<double> train_commands(const CommandDataset& train_set, const CommandDataset& validation,
                                   const CommandTrainConfig& cfg, int epochs, std::uint64_t seed);

} // namespace attn
