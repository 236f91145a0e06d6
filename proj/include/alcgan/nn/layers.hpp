#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alcgan/tensor.hpp"

namespace alcgan::nn {

/// A named parameter. `grad` is null for non-trainable buffers (BN running stats).
template <typename T>
struct ParamRef {
    std::string name;
    Tensor<T>* value;
    Tensor<T>* grad;
};

template <typename T>
using ParamList = std::vector<ParamRef<T>>;

/// Unrolls (C,H,W) patches of a k x k convolution into a (C*k*k) x (Ho*Wo) matrix.
template <typename T>
void im2col(const T* x, int channels, int height, int width, int kernel, int stride, int pad, int out_h, int out_w,
            T* col);

/// Adjoint of im2col: scatters columns back, accumulating into x.
template <typename T>
void col2im(const T* col, int channels, int height, int width, int kernel, int stride, int pad, int out_h, int out_w,
            T* x);

/// 2-D convolution, weight [out][in][k][k], zero padding.
template <typename T>
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, bool with_bias);

    int out_size(int in_size) const noexcept { return (in_size + 2 * pad_ - kernel_) / stride_ + 1; }
    int in_channels() const noexcept { return in_channels_; }
    int out_channels() const noexcept { return out_channels_; }

    Tensor<T> forward(const Tensor<T>& x) const;
    Tensor<T> forward_train(const Tensor<T>& x);
    /// Accumulates parameter gradients; returns dL/dx (empty if !need_input_grad).
    Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true);

    void collect(ParamList<T>& params, const std::string& prefix);

    Tensor<T> weight, grad_weight;
    Tensor<T> bias, grad_bias; // empty when constructed without bias

private:
    int in_channels_ = 0, out_channels_ = 0, kernel_ = 0, stride_ = 1, pad_ = 0;
    Tensor<T> cached_input_;
};

/// Transposed convolution (the adjoint of Conv2d's data path), weight [in][out][k][k].
/// Output size (in - 1) * stride - 2 * pad + kernel + output_padding.
template <typename T>
class ConvTranspose2d {
public:
    ConvTranspose2d() = default;
    ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride, int pad, int output_padding,
                    bool with_bias);

    int out_size(int in_size) const noexcept {
        return (in_size - 1) * stride_ - 2 * pad_ + kernel_ + output_padding_;
    }
    int in_channels() const noexcept { return in_channels_; }
    int out_channels() const noexcept { return out_channels_; }

    Tensor<T> forward(const Tensor<T>& x) const;
    Tensor<T> forward_train(const Tensor<T>& x);
    Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true);

    void collect(ParamList<T>& params, const std::string& prefix);

    Tensor<T> weight, grad_weight;
    Tensor<T> bias, grad_bias;

private:
    int in_channels_ = 0, out_channels_ = 0, kernel_ = 0, stride_ = 2, pad_ = 0, output_padding_ = 0;
    Tensor<T> cached_input_;
};

/// Per-channel batch normalization over (N, H, W).
template <typename T>
class BatchNorm2d {
public:
    BatchNorm2d() = default;
    explicit BatchNorm2d(int channels, double eps = 1e-5, double momentum = 0.1);

    /// Inference: normalizes with running statistics.
    Tensor<T> forward(const Tensor<T>& x) const;
    /// Training: normalizes with batch statistics and updates the running ones.
    Tensor<T> forward_train(const Tensor<T>& x);
    Tensor<T> backward(const Tensor<T>& grad_out);

    void collect(ParamList<T>& params, const std::string& prefix);

    Tensor<T> gamma, beta, grad_gamma, grad_beta;
    Tensor<T> running_mean, running_var;

private:
    double eps_ = 1e-5, momentum_ = 0.1;
    Tensor<T> cached_xhat_;
    AlignedVector<T> cached_invstd_;
};

/// Fully connected layer on flattened samples, weight [out][in]. Output is {N, out, 1, 1}.
template <typename T>
class Linear {
public:
    Linear() = default;
    Linear(int in_features, int out_features);

    int in_features() const noexcept { return in_features_; }
    int out_features() const noexcept { return out_features_; }

    Tensor<T> forward(const Tensor<T>& x) const;
    Tensor<T> forward_train(const Tensor<T>& x);
    Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true);

    void collect(ParamList<T>& params, const std::string& prefix);

    Tensor<T> weight, grad_weight, bias, grad_bias;

private:
    int in_features_ = 0, out_features_ = 0;
    Tensor<T> cached_input_;
};

enum class ActivationKind { Identity, ReLU, LeakyReLU, Tanh, Sigmoid };

/// Elementwise nonlinearity; caches its output for the backward pass.
template <typename T>
class Activation {
public:
    Activation() = default;
    explicit Activation(ActivationKind kind, double negative_slope = 0.2) : kind_(kind), slope_(negative_slope) {}

    ActivationKind kind() const noexcept { return kind_; }

    Tensor<T> forward(const Tensor<T>& x) const;
    Tensor<T> forward_train(const Tensor<T>& x);
    Tensor<T> backward(const Tensor<T>& grad_out) const;

private:
    ActivationKind kind_ = ActivationKind::Identity;
    double slope_ = 0.2;
    Tensor<T> cached_output_;
};

/// Conditioning input kept in factored form: an optional per-pixel one-hot
/// layout (stored as its hot channel index) followed by channels that are
/// spatially constant per sample (tiled vectors).
template <typename T>
struct StructuredInput {
    int batch = 0;
    int resolution = 0;
    int layout_channels = 0;          // S'; 0 when no layout is wired in
    std::vector<std::uint8_t> labels; // batch * R * R, each < layout_channels
    Tensor<T> constants;              // {batch, K, 1, 1}

    int constant_channels() const noexcept { return constants.empty() ? 0 : constants.c(); }
    int channels() const noexcept { return layout_channels + constant_channels(); }
    const std::uint8_t* sample_labels(int i) const {
        return labels.data() + static_cast<std::size_t>(i) * resolution * resolution;
    }

    /// Dense {batch, S'+K, R, R} volume: one-hot maps, then tiled constants.
    Tensor<T> dense() const;
};

/// Stride-1 "same" convolution over a StructuredInput. Equal up to rounding to
/// Conv2d on input.dense() with the same weights, at O(R^2 * k^2 * out)
/// cost instead of O(R^2 * k^2 * out * in). Weight [out][S'+K][k][k], no bias.
template <typename T>
class ConditioningConv {
public:
    ConditioningConv() = default;
    ConditioningConv(int layout_channels, int constant_channels, int out_channels, int kernel);

    int in_channels() const noexcept { return layout_channels_ + constant_channels_; }
    int out_channels() const noexcept { return out_channels_; }

    Tensor<T> forward(const StructuredInput<T>& input) const;
    Tensor<T> forward_train(const StructuredInput<T>& input);
    /// Weight gradients only; the conditioning input is data.
    void backward(const Tensor<T>& grad_out);

    void collect(ParamList<T>& params, const std::string& prefix);

    /// Reference path: a dense convolution sharing this layer's weights.
    Tensor<T> forward_dense(const Tensor<T>& volume) const;

    Tensor<T> weight, grad_weight;

private:
    void check_input(const StructuredInput<T>& input) const;

    int layout_channels_ = 0, constant_channels_ = 0, out_channels_ = 0, kernel_ = 0;
    StructuredInput<T> cached_input_;
};

} // namespace alcgan::nn
