#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace attn {

struct OptimConfig {
    double learning_rate = 3e-4;
    double weight_decay = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
    bool operator==(const OptimConfig&) const = default;
};

struct AdamWState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
};

/// One AdamW update with decoupled weight decay:
///   p <- p (1 - lr wd) - lr m_hat / (sqrt(v_hat) + eps)
/// `step_index` starts at 1 and drives the bias correction.
void adamw_step(std::span<double> params, std::span<const double> grads, AdamWState& state, const OptimConfig& cfg,
                std::int64_t step_index);

/// Cosine annealing from base_lr at epoch 0 to 0 at the last epoch (total_epochs - 1).
double cosine_lr(double base_lr, int epoch, int total_epochs);

} // namespace attn
