#include "alcgan/train/optimizer.hpp"

#include <cmath>

#include "alcgan/error.hpp"

namespace alcgan::train {

void Adam::step(const nn::ParamList<float>& params) {
    std::size_t slot = 0;
    const bool fresh = first_moment.empty();
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const float step = static_cast<float>(lr_ / c1);
    const float b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
    const float inv_c2 = static_cast<float>(1.0 / c2);
    const float eps = static_cast<float>(eps_);
    for (const auto& p : params) {
        if (!p.grad) continue;
        if (fresh) {
            first_moment.emplace_back(p.value->n(), p.value->c(), p.value->h(), p.value->w());
            second_moment.emplace_back(p.value->n(), p.value->c(), p.value->h(), p.value->w());
        }
        if (slot >= first_moment.size() || !first_moment[slot].same_shape(*p.value)) {
            throw ValidationError("optimizer", "moment state does not match parameter '" + p.name + "'");
        }
        float* w = p.value->data();
        const float* g = p.grad->data();
        float* m = first_moment[slot].data();
        float* v = second_moment[slot].data();
        for (std::size_t i = 0, n = p.value->size(); i < n; ++i) {
            m[i] = b1 * m[i] + (1.0f - b1) * g[i];
            v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
            w[i] -= step * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
        }
        ++slot;
    }
    if (slot != first_moment.size()) throw ValidationError("optimizer", "parameter count changed between steps");
}

} // namespace alcgan::train
