#include "alcgan/train/losses.hpp"

#include <algorithm>
#include <cmath>

#include "alcgan/error.hpp"

namespace alcgan::train {

namespace {

double clamp_prob(double p) { return std::clamp(p, kLogEpsilon, 1.0 - kLogEpsilon); }
bool inside(double p) { return p > kLogEpsilon && p < 1.0 - kLogEpsilon; }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double mean_log(std::span<const double> p, bool complement) {
    if (p.empty()) throw ValidationError("batch", "empty score batch");
    double s = 0.0;
    for (double v : p) s += std::log(clamp_prob(complement ? 1.0 - v : v));
    return s / static_cast<double>(p.size());
}

// Per-logit loss term: -log p (positive) or -log(1 - p) (negative), with the
// gradient through the clamp.
template <typename T>
LogitLoss<T> logit_term(const Tensor<T>& logits, bool positive, double sign) {
    const int n = logits.n();
    if (n == 0) throw ValidationError("batch", "empty logit batch");
    LogitLoss<T> out;
    out.grad = Tensor<T>(n, 1, 1, 1);
    for (int i = 0; i < n; ++i) {
        const double p = sigmoid(static_cast<double>(logits[i]));
        out.mean_score += p;
        if (positive) {
            // d/dz -log p = -(1 - p)
            out.value += -std::log(clamp_prob(p));
            out.grad[i] = static_cast<T>(inside(p) ? sign * -(1.0 - p) / n : 0.0);
        } else {
            // d/dz -log(1 - p) = p
            out.value += -std::log(clamp_prob(1.0 - p));
            out.grad[i] = static_cast<T>(inside(1.0 - p) ? sign * p / n : 0.0);
        }
    }
    out.value = sign * out.value / n;
    out.mean_score /= n;
    return out;
}

} // namespace

std::string to_string(GeneratorLossMode mode) {
    return mode == GeneratorLossMode::Minimax ? "minimax" : "non_saturating";
}

GeneratorLossMode parse_generator_loss_mode(std::string_view text) {
    if (text == "minimax") return GeneratorLossMode::Minimax;
    if (text == "non_saturating") return GeneratorLossMode::NonSaturating;
    throw ValidationError("generator_loss_mode", "expected 'minimax' or 'non_saturating'");
}

double d_loss(std::span<const double> real_scores, std::span<const double> fake_scores) {
    if (real_scores.size() != fake_scores.size()) throw ValidationError("batch", "real and fake batch sizes differ");
    return -mean_log(real_scores, false) - mean_log(fake_scores, true);
}

double g_loss(std::span<const double> fake_scores, GeneratorLossMode mode) {
    return mode == GeneratorLossMode::Minimax ? mean_log(fake_scores, true) : -mean_log(fake_scores, false);
}

template <typename T>
LogitLoss<T> d_loss_real(const Tensor<T>& real_logits) {
    return logit_term(real_logits, true, 1.0);
}

template <typename T>
LogitLoss<T> d_loss_fake(const Tensor<T>& fake_logits) {
    return logit_term(fake_logits, false, 1.0);
}

template <typename T>
LogitLoss<T> g_loss(const Tensor<T>& fake_logits, GeneratorLossMode mode) {
    // minimax: mean log(1 - p) = -(mean -log(1 - p))
    return mode == GeneratorLossMode::Minimax ? logit_term(fake_logits, false, -1.0)
                                              : logit_term(fake_logits, true, 1.0);
}

template LogitLoss<float> d_loss_real<float>(const Tensor<float>&);
template LogitLoss<double> d_loss_real<double>(const Tensor<double>&);
template LogitLoss<float> d_loss_fake<float>(const Tensor<float>&);
template LogitLoss<double> d_loss_fake<double>(const Tensor<double>&);
template LogitLoss<float> g_loss<float>(const Tensor<float>&, GeneratorLossMode);
template LogitLoss<double> g_loss<double>(const Tensor<double>&, GeneratorLossMode);

} // namespace alcgan::train
