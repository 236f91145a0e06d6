#pragma once

#include <span>
#include <string>
#include <string_view>

#include "alcgan/tensor.hpp"

namespace alcgan::train {

/// Probabilities are clamped to [eps, 1 - eps] inside every log.
inline constexpr double kLogEpsilon = 1e-7;

enum class GeneratorLossMode { Minimax, NonSaturating };

std::string to_string(GeneratorLossMode mode);
GeneratorLossMode parse_generator_loss_mode(std::string_view text);

/// -mean log D(real) - mean log(1 - D(fake)), from discriminator probabilities.
double d_loss(std::span<const double> real_scores, std::span<const double> fake_scores);
/// Minimax: mean log(1 - D(fake)). Non-saturating: -mean log D(fake).
double g_loss(std::span<const double> fake_scores, GeneratorLossMode mode);

/// Loss value plus its gradient with respect to the discriminator logits.
template <typename T>
struct LogitLoss {
    double value = 0.0;
    double mean_score = 0.0; // mean sigmoid(logit) of the batch
    Tensor<T> grad;
};

/// The real and fake halves of d_loss; value(real) + value(fake) = d_loss.
template <typename T>
LogitLoss<T> d_loss_real(const Tensor<T>& real_logits);
template <typename T>
LogitLoss<T> d_loss_fake(const Tensor<T>& fake_logits);
template <typename T>
LogitLoss<T> g_loss(const Tensor<T>& fake_logits, GeneratorLossMode mode);

} // namespace alcgan::train
