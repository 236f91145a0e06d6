#pragma once

#include <vector>

#include "alcgan/model/config.hpp"
#include "alcgan/nn/layers.hpp"

namespace alcgan::model {

/// Encoder-decoder generator: stride-1 conv over the conditioning volume, a
/// stack of stride-2 convs to the bottleneck, then stride-2 transposed convs
/// back to R x R x 3. BN + ReLU on every hidden layer, tanh at the output.
template <typename T>
class Generator {
public:
    explicit Generator(const GeneratorConfig& config);

    const GeneratorConfig& config() const noexcept { return config_; }

    /// Inference (BN running statistics). Throws NonFiniteError naming the layer.
    Tensor<T> forward(const nn::StructuredInput<T>& input) const;
    /// Same network fed a materialized volume; the first layer runs as a dense conv.
    Tensor<T> forward_dense(const Tensor<T>& volume) const;
    /// Training mode (batch statistics, caches activations).
    Tensor<T> forward_train(const nn::StructuredInput<T>& input);
    /// Accumulates parameter gradients from dL/d(images).
    void backward(const Tensor<T>& grad_images);

    /// Trainable parameters and BN buffers (buffers have a null grad).
    nn::ParamList<T> parameters();
    void zero_grad();

private:
    Tensor<T> tail(Tensor<T> h) const;

    GeneratorConfig config_;
    nn::ConditioningConv<T> conv1_;
    nn::BatchNorm2d<T> bn1_;
    std::vector<nn::Conv2d<T>> convs_;
    std::vector<nn::BatchNorm2d<T>> conv_bns_;
    std::vector<nn::ConvTranspose2d<T>> deconvs_;
    std::vector<nn::BatchNorm2d<T>> deconv_bns_; // one fewer than deconvs_
    std::vector<nn::Activation<T>> acts_;         // one per block
};

/// Siamese discriminator. One branch reads the attribute-layout maps, the
/// other the image; the branches share no weights. Their outputs are
/// concatenated, fused by a 1x1 conv and flattened into a linear head that
/// produces a logit.
template <typename T>
class Discriminator {
public:
    explicit Discriminator(const DiscriminatorConfig& config);

    const DiscriminatorConfig& config() const noexcept { return config_; }

    /// Logits {N,1,1,1}. Inference mode.
    Tensor<T> forward(const Tensor<T>& images, const nn::StructuredInput<T>& condition) const;
    Tensor<T> forward_train(const Tensor<T>& images, const nn::StructuredInput<T>& condition);
    /// Accumulates parameter gradients; returns dL/d(images) if requested.
    Tensor<T> backward(const Tensor<T>& grad_logits, bool need_image_grad);

    /// Split training interface for several image batches under one conditioning batch:
    /// set_condition runs the attribute-layout branch once, each forward_image /
    /// backward_image pair reuses it and accumulates its gradient, and
    /// backward_condition pushes the sum through the branch. Skipping
    /// backward_condition leaves that branch's gradients untouched.
    void set_condition(const nn::StructuredInput<T>& condition);
    Tensor<T> forward_image(const Tensor<T>& images);
    Tensor<T> backward_image(const Tensor<T>& grad_logits, bool need_image_grad);
    void backward_condition();

    nn::ParamList<T> parameters();
    void zero_grad();

private:
    struct Branch {
        std::vector<nn::Conv2d<T>> convs;
        std::vector<nn::BatchNorm2d<T>> bns;
        std::vector<nn::Activation<T>> acts; // conv1 + strided convs
    };
    void check_images(const Tensor<T>& images) const;
    template <bool Train>
    Tensor<T> condition_branch(const nn::StructuredInput<T>& condition);
    template <bool Train>
    Tensor<T> trunk(const Tensor<T>& images, const Tensor<T>& al);

    DiscriminatorConfig config_;
    nn::ConditioningConv<T> al_conv1_;
    nn::BatchNorm2d<T> al_bn1_;
    nn::Conv2d<T> img_conv1_;
    Branch al_, img_;
    nn::Conv2d<T> fuse_;
    nn::BatchNorm2d<T> fuse_bn_;
    nn::Activation<T> fuse_act_;
    nn::Linear<T> hidden_;
    nn::Activation<T> hidden_act_;
    nn::Linear<T> head_;
    int al_out_channels_ = 0;
    int fused_channels_ = 0;
    Tensor<T> al_features_, al_grad_;
};

/// sigmoid(logit) per sample.
template <typename T>
std::vector<T> scores_from_logits(const Tensor<T>& logits);

} // namespace alcgan::model
