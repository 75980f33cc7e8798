#include "attn/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "attn/errors.hpp"

namespace attn {

void OptimConfig::validate() const
{
    if (!(learning_rate >= 0.0)) {
        throw ValidationError("learning_rate must be non-negative");
    }
    if (!(weight_decay >= 0.0)) {
        throw ValidationError("weight_decay must be non-negative");
    }
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
        throw ValidationError("beta1 and beta2 must lie in (0, 1)");
    }
    if (!(epsilon > 0.0)) {
        throw ValidationError("epsilon must be positive");
    }
}

void adamw_step(std::span<double> params, std::span<const double> grads, AdamWState& state, const OptimConfig& cfg,
                std::int64_t step_index)
{
    if (params.size() != grads.size()) {
        throw ValidationError("adamw: " + std::to_string(params.size()) + " parameters but "
                              + std::to_string(grads.size()) + " gradients");
    }
    if (step_index < 1) {
        throw ValidationError("adamw step_index must be >= 1");
    }
    if (state.first_moment.size() != params.size()) {
        state.first_moment.assign(params.size(), 0.0);
        state.second_moment.assign(params.size(), 0.0);
    }
    const double lr = cfg.learning_rate;
    const double correction1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_index));
    const double correction2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_index));
    const double shrink = 1.0 - lr * cfg.weight_decay;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        params[i] = params[i] * shrink - lr * (m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
}

double cosine_lr(double base_lr, int epoch, int total_epochs)
{
    if (total_epochs <= 1) {
        return base_lr;
    }
    const double progress = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
    return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * progress));
}

} // namespace attn
