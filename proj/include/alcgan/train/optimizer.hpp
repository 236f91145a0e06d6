#pragma once

#include <cstdint>
#include <vector>

#include "alcgan/nn/layers.hpp"

namespace alcgan::train {

/// Adam with bias correction. Moments are matched to parameters by position
/// in the list passed to step(), so the list order must be stable.
class Adam {
public:
    Adam() = default;
    Adam(double learning_rate, double beta1, double beta2, double epsilon = 1e-8)
        : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

    /// Updates every parameter that has a gradient; buffers are skipped.
    void step(const nn::ParamList<float>& params);

    std::int64_t steps() const noexcept { return t_; }
    double learning_rate() const noexcept { return lr_; }

    // Exposed for checkpointing.
    std::vector<Tensor<float>> first_moment, second_moment;
    std::int64_t t_ = 0;

private:
    double lr_ = 2e-4, beta1_ = 0.5, beta2_ = 0.999, eps_ = 1e-8;
};

} // namespace alcgan::train
