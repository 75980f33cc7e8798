#include "attn/train.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <ostream>

#include "attn/errors.hpp"
#include "attn/random.hpp"

namespace attn {

using nn::Tensor;

void LossConfig::validate() const
{
    if (!(beta > 0.0)) {
        throw ValidationError("smooth-L1 beta must be positive");
    }
}

void TrainConfig::validate() const
{
    net.validate();
    optim.validate();
    loss.validate();
    if (epochs < 0) {
        throw ValidationError("epochs must be non-negative");
    }
    if (batch_size < 1) {
        throw ValidationError("batch_size must be >= 1");
    }
}

namespace {

/// Mini-batch loop shared by both models. `step` runs forward, loss and backward on one batch
/// and returns (loss, gradients); `end_epoch` sees the epoch's mean training loss.
template <typename Step, typename EndEpoch>
void run_epochs(std::size_t n, int epochs, int batch_size, const OptimConfig& optim, std::uint64_t seed,
                std::vector<double>& params, Step&& step, EndEpoch&& end_epoch)
{
    AdamWState state;
    std::int64_t step_index = 0;
    for (int e = 0; e < epochs; ++e) {
        OptimConfig scheduled = optim;
        scheduled.learning_rate = cosine_lr(optim.learning_rate, e, epochs);
        const std::vector<std::size_t> order = shuffled_indices(n, seed + static_cast<std::uint64_t>(e));
        double weighted = 0.0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
            const std::size_t count = std::min(n - start, static_cast<std::size_t>(batch_size));
            const std::span<const std::size_t> batch(order.data() + start, count);
            auto [loss, grads] = step(batch);
            weighted += loss * static_cast<double>(count);
            adamw_step(params, grads, state, scheduled, ++step_index);
        }
        end_epoch(e, weighted / static_cast<double>(n), scheduled.learning_rate);
    }
}

} // namespace

TrainResult train(const RestorationDataset& dataset, const TrainConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    if (dataset.size() == 0) {
        throw ValidationError("training dataset is empty");
    }
    if (dataset.targets.n != dataset.images.n || dataset.targets.c != 1 || dataset.targets.h != dataset.images.h
        || dataset.targets.w != dataset.images.w) {
        throw ValidationError("targets " + dataset.targets.shape_str() + " do not match images "
                              + dataset.images.shape_str());
    }
    TrainResult result{{}, AttentionNet(cfg.net, derive_seed(seed, "init"))};
    AttentionNet& net = result.net;
    net.check_input(dataset.images);
    run_epochs(
            dataset.size(), cfg.epochs, cfg.batch_size, cfg.optim, derive_seed(seed, "shuffle"), net.parameters(),
            [&](std::span<const std::size_t> batch) {
                const Tensor x = nn::gather(dataset.images, batch);
                const Tensor y = nn::gather(dataset.targets, batch);
                AttentionNet::Trace trace;
                const Tensor pred = net.forward(x, trace);
                const double loss = nn::smooth_l1(pred, y, cfg.loss.beta);
                return std::make_pair(loss, net.backward(trace, nn::smooth_l1_grad(pred, y, cfg.loss.beta)));
            },
            [&](int e, double loss, double lr) { result.log.push_back({e + 1, loss, lr}); });
    return result;
}

void write_training_log(std::ostream& out, std::span<const EpochRecord> log)
{
    const auto old_precision = out.precision(17);
    out << "epoch,loss,lr\n";
    for (const EpochRecord& r : log) {
        out << r.epoch << ',' << r.loss << ',' << r.lr << '\n';
    }
    out.precision(old_precision);
}

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v)
{
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v)
{
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v)
{
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint64_t get_bytes(std::istream& in, int n)
{
    unsigned char b[8] = {};
    if (!in.read(reinterpret_cast<char*>(b), n)) {
        throw ValidationError("checkpoint truncated");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    }
    return v;
}

} // namespace

void save_checkpoint(std::ostream& out, const AttentionNet& net)
{
    const TinyNetConfig& cfg = net.config();
    out.write("TNET", 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(cfg.input_channels));
    put_u32(out, static_cast<std::uint32_t>(cfg.base_width));
    put_u32(out, static_cast<std::uint32_t>(cfg.depth));
    put_f64(out, cfg.leaky_slope);
    put_u64(out, net.parameter_count());
    for (double p : net.parameters()) {
        put_f64(out, p);
    }
    if (!out) {
        throw IoError("failed writing checkpoint");
    }
}

AttentionNet load_checkpoint(std::istream& in)
{
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "TNET", 4) != 0) {
        throw ValidationError("not a TNET checkpoint");
    }
    const auto version = static_cast<std::uint32_t>(get_bytes(in, 4));
    if (version != kCheckpointVersion) {
        throw ValidationError("unsupported checkpoint version " + std::to_string(version));
    }
    TinyNetConfig cfg;
    cfg.input_channels = static_cast<int>(get_bytes(in, 4));
    cfg.base_width = static_cast<int>(get_bytes(in, 4));
    cfg.depth = static_cast<int>(get_bytes(in, 4));
    cfg.leaky_slope = std::bit_cast<double>(get_bytes(in, 8));
    AttentionNet net(cfg);
    const std::uint64_t count = get_bytes(in, 8);
    if (count != net.parameter_count()) {
        throw ValidationError("checkpoint holds " + std::to_string(count) + " parameters, architecture needs "
                              + std::to_string(net.parameter_count()));
    }
    for (double& p : net.parameters()) {
        p = std::bit_cast<double>(get_bytes(in, 8));
    }
    return net;
}

void save_checkpoint(const std::filesystem::path& path, const AttentionNet& net)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    save_checkpoint(out, net);
}

AttentionNet load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return load_checkpoint(in);
}

CommandDataset CommandDataset::subset(std::span<const std::size_t> indices) const
{
    CommandDataset out;
    out.images = nn::gather(images, indices);
    for (std::size_t i : indices) {
        out.targets.push_back(targets.at(i));
    }
    return out;
}

namespace {

Tensor command_tensor(std::span<const Command> commands)
{
    Tensor t(static_cast<int>(commands.size()), 2, 1, 1);
    for (std::size_t i = 0; i < commands.size(); ++i) {
        t.data[2 * i] = commands[i].steering;
        t.data[2 * i + 1] = commands[i].velocity;
    }
    return t;
}

std::vector<Command> to_commands(const Tensor& t)
{
    std::vector<Command> out(static_cast<std::size_t>(t.n));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = {t.data[2 * i], t.data[2 * i + 1]};
    }
    return out;
}

} // namespace

std::vector<double> train_commands(const CommandDataset& train_set, const CommandDataset& validation,
                                   const CommandTrainConfig& cfg, int epochs, std::uint64_t seed)
{
    cfg.optim.validate();
    if (train_set.size() == 0 || validation.size() == 0) {
        throw ValidationError("command training needs non-empty training and validation sets");
    }
    if (cfg.batch_size < 1) {
        throw ValidationError("batch_size must be >= 1");
    }
    CommandNet net(cfg.net, derive_seed(seed, "init"));
    const Tensor targets = command_tensor(train_set.targets);
    std::vector<double> errors;
    run_epochs(
            train_set.size(), epochs, cfg.batch_size, cfg.optim, derive_seed(seed, "shuffle"), net.parameters(),
            [&](std::span<const std::size_t> batch) {
                const Tensor x = nn::gather(train_set.images, batch);
                const Tensor y = nn::gather(targets, batch);
                CommandNet::Trace trace;
                const Tensor pred = net.forward(x, trace);
                return std::make_pair(nn::mse(pred, y), net.backward(trace, nn::mse_grad(pred, y)));
            },
            [&](int, double, double) {
                errors.push_back(command_mse(to_commands(net.forward(validation.images)), validation.targets));
            });
    return errors;
}

} // namespace attn
