#include "alcgan/model/networks.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "alcgan/error.hpp"

namespace alcgan::model {

using nn::ActivationKind;

namespace {

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    Tensor<T> out(a.n(), a.c() + b.c(), a.h(), a.w());
    for (int i = 0; i < a.n(); ++i) {
        std::copy(a.sample(i), a.sample(i) + a.sample_size(), out.sample(i));
        std::copy(b.sample(i), b.sample(i) + b.sample_size(), out.sample(i) + a.sample_size());
    }
    return out;
}

template <typename T>
void split_channels(const Tensor<T>& g, int first, Tensor<T>& a, Tensor<T>& b) {
    a = Tensor<T>(g.n(), first, g.h(), g.w());
    b = Tensor<T>(g.n(), g.c() - first, g.h(), g.w());
    for (int i = 0; i < g.n(); ++i) {
        std::copy(g.sample(i), g.sample(i) + a.sample_size(), a.sample(i));
        std::copy(g.sample(i) + a.sample_size(), g.sample(i) + g.sample_size(), b.sample(i));
    }
}

template <typename T>
Tensor<T> reshaped(const Tensor<T>& t, int c, int h, int w) {
    Tensor<T> r(t.n(), c, h, w);
    std::copy(t.data(), t.data() + t.size(), r.data());
    return r;
}

template <typename T>
void zero_all(nn::ParamList<T> params) {
    for (auto& p : params) {
        if (p.grad) p.grad->zero();
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Generator

template <typename T>
Generator<T>::Generator(const GeneratorConfig& config) : config_(config) {
    config_.validate();
    const int k = config_.kernel_size;
    const int pad = k / 2;
    const int in = config_.input_channels();
    conv1_ = nn::ConditioningConv<T>(config_.layout_channels, config_.attribute_channels + config_.noise_dim, in, k);
    bn1_ = nn::BatchNorm2d<T>(in);
    acts_.emplace_back(ActivationKind::ReLU);
    int channels = in;
    for (int nominal : config_.conv_channels) {
        const int out = config_.width(nominal);
        convs_.emplace_back(channels, out, k, 2, pad, false);
        conv_bns_.emplace_back(out);
        acts_.emplace_back(ActivationKind::ReLU);
        channels = out;
    }
    for (std::size_t j = 0; j < config_.deconv_channels.size(); ++j) {
        const bool last = j + 1 == config_.deconv_channels.size();
        const int out = last ? config_.deconv_channels[j] : config_.width(config_.deconv_channels[j]);
        deconvs_.emplace_back(channels, out, k, 2, pad, 1, last);
        if (!last) deconv_bns_.emplace_back(out);
        acts_.emplace_back(last ? ActivationKind::Tanh : ActivationKind::ReLU);
        channels = out;
    }
}

template <typename T>
Tensor<T> Generator<T>::tail(Tensor<T> h) const {
    h = acts_[0].forward(bn1_.forward(h));
    check_finite(h, "conv1");
    std::size_t a = 1;
    for (std::size_t i = 0; i < convs_.size(); ++i, ++a) {
        h = acts_[a].forward(conv_bns_[i].forward(convs_[i].forward(h)));
        check_finite(h, "conv" + std::to_string(i + 2));
    }
    for (std::size_t j = 0; j < deconvs_.size(); ++j, ++a) {
        h = deconvs_[j].forward(h);
        if (j < deconv_bns_.size()) h = deconv_bns_[j].forward(h);
        h = acts_[a].forward(h);
        check_finite(h, "deconv" + std::to_string(j + 1));
    }
    return h;
}

template <typename T>
Tensor<T> Generator<T>::forward(const nn::StructuredInput<T>& input) const {
    if (input.resolution != config_.resolution) {
        throw ValidationError("conditioning", "resolution " + std::to_string(input.resolution) + " does not match " +
                                                  std::to_string(config_.resolution));
    }
    return tail(conv1_.forward(input));
}

template <typename T>
Tensor<T> Generator<T>::forward_dense(const Tensor<T>& volume) const {
    if (volume.c() != config_.input_channels() || volume.h() != config_.resolution ||
        volume.w() != config_.resolution) {
        throw ValidationError("conditioning", "volume shape " + volume.shape_string() + " does not match the generator");
    }
    return tail(conv1_.forward_dense(volume));
}

template <typename T>
Tensor<T> Generator<T>::forward_train(const nn::StructuredInput<T>& input) {
    if (input.resolution != config_.resolution) {
        throw ValidationError("conditioning", "resolution does not match the generator");
    }
    Tensor<T> h = acts_[0].forward_train(bn1_.forward_train(conv1_.forward_train(input)));
    check_finite(h, "conv1");
    std::size_t a = 1;
    for (std::size_t i = 0; i < convs_.size(); ++i, ++a) {
        h = acts_[a].forward_train(conv_bns_[i].forward_train(convs_[i].forward_train(h)));
        check_finite(h, "conv" + std::to_string(i + 2));
    }
    for (std::size_t j = 0; j < deconvs_.size(); ++j, ++a) {
        h = deconvs_[j].forward_train(h);
        if (j < deconv_bns_.size()) h = deconv_bns_[j].forward_train(h);
        h = acts_[a].forward_train(h);
        check_finite(h, "deconv" + std::to_string(j + 1));
    }
    return h;
}

template <typename T>
void Generator<T>::backward(const Tensor<T>& grad_images) {
    Tensor<T> g = grad_images;
    std::size_t a = acts_.size() - 1;
    for (std::size_t j = deconvs_.size(); j-- > 0; --a) {
        g = acts_[a].backward(g);
        if (j < deconv_bns_.size()) g = deconv_bns_[j].backward(g);
        g = deconvs_[j].backward(g, true);
    }
    for (std::size_t i = convs_.size(); i-- > 0; --a) {
        g = conv_bns_[i].backward(acts_[a].backward(g));
        g = convs_[i].backward(g, true);
    }
    g = bn1_.backward(acts_[0].backward(g));
    conv1_.backward(g);
}

template <typename T>
nn::ParamList<T> Generator<T>::parameters() {
    nn::ParamList<T> p;
    conv1_.collect(p, "conv1");
    bn1_.collect(p, "conv1.bn");
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        const std::string name = "conv" + std::to_string(i + 2);
        convs_[i].collect(p, name);
        conv_bns_[i].collect(p, name + ".bn");
    }
    for (std::size_t j = 0; j < deconvs_.size(); ++j) {
        const std::string name = "deconv" + std::to_string(j + 1);
        deconvs_[j].collect(p, name);
        if (j < deconv_bns_.size()) deconv_bns_[j].collect(p, name + ".bn");
    }
    return p;
}

template <typename T>
void Generator<T>::zero_grad() {
    zero_all(parameters());
}

// ---------------------------------------------------------------------------
// Discriminator

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& config) : config_(config) {
    config_.validate();
    const int k = config_.kernel_size;
    const int pad = k / 2;
    const double slope = config_.leaky_slope;
    const int cond = config_.condition_channels();

    al_conv1_ = nn::ConditioningConv<T>(config_.layout_channels, config_.attribute_channels, cond, k);
    al_bn1_ = nn::BatchNorm2d<T>(cond);
    img_conv1_ = nn::Conv2d<T>(config_.image_channels, config_.image_channels, k, 1, pad, true);

    auto build = [&](Branch& b, int channels) {
        b.acts.emplace_back(ActivationKind::LeakyReLU, slope);
        for (int nominal : config_.branch_channels) {
            const int out = config_.width(nominal);
            b.convs.emplace_back(channels, out, k, 2, pad, false);
            b.bns.emplace_back(out);
            b.acts.emplace_back(ActivationKind::LeakyReLU, slope);
            channels = out;
        }
        return channels;
    };
    al_out_channels_ = build(al_, cond);
    const int img_out = build(img_, config_.image_channels);

    fused_channels_ = config_.width(config_.fusion_channels);
    fuse_ = nn::Conv2d<T>(al_out_channels_ + img_out, fused_channels_, 1, 1, 0, false);
    fuse_bn_ = nn::BatchNorm2d<T>(fused_channels_);
    fuse_act_ = nn::Activation<T>(ActivationKind::LeakyReLU, slope);
    const int b = config_.bottleneck_size();
    int features = fused_channels_ * b * b;
    if (config_.fc_hidden > 0) {
        hidden_ = nn::Linear<T>(features, config_.width(config_.fc_hidden));
        hidden_act_ = nn::Activation<T>(ActivationKind::LeakyReLU, slope);
        features = config_.width(config_.fc_hidden);
    }
    head_ = nn::Linear<T>(features, 1);
}

template <typename T>
void Discriminator<T>::check_images(const Tensor<T>& images) const {
    if (images.c() != config_.image_channels || images.h() != config_.resolution ||
        images.w() != config_.resolution) {
        throw ValidationError("image", "shape " + images.shape_string() + " does not match the discriminator");
    }
}

namespace {

template <bool Train, typename L, typename T>
Tensor<T> apply(L& layer, const Tensor<T>& x) {
    if constexpr (Train) return layer.forward_train(x);
    else return layer.forward(x);
}

} // namespace

template <typename T>
template <bool Train>
Tensor<T> Discriminator<T>::condition_branch(const nn::StructuredInput<T>& condition) {
    if (condition.resolution != config_.resolution) {
        throw ValidationError("conditioning", "resolution does not match the discriminator");
    }
    Tensor<T> al;
    if constexpr (Train) al = al_conv1_.forward_train(condition);
    else al = al_conv1_.forward(condition);
    al = apply<Train>(al_.acts[0], apply<Train>(al_bn1_, al));
    check_finite(al, "al.conv1");
    for (std::size_t i = 0; i < al_.convs.size(); ++i) {
        al = apply<Train>(al_.acts[i + 1], apply<Train>(al_.bns[i], apply<Train>(al_.convs[i], al)));
        check_finite(al, "al.conv" + std::to_string(i + 2));
    }
    return al;
}

template <typename T>
template <bool Train>
Tensor<T> Discriminator<T>::trunk(const Tensor<T>& images, const Tensor<T>& al) {
    check_images(images);
    if (al.n() != images.n()) throw ValidationError("conditioning", "batch does not match the images");
    Tensor<T> im = apply<Train>(img_.acts[0], apply<Train>(img_conv1_, images));
    check_finite(im, "img.conv1");
    for (std::size_t i = 0; i < img_.convs.size(); ++i) {
        im = apply<Train>(img_.acts[i + 1], apply<Train>(img_.bns[i], apply<Train>(img_.convs[i], im)));
        check_finite(im, "img.conv" + std::to_string(i + 2));
    }

    Tensor<T> h = apply<Train>(fuse_act_, apply<Train>(fuse_bn_, apply<Train>(fuse_, concat_channels(al, im))));
    check_finite(h, "conv6");
    if (config_.fc_hidden > 0) {
        h = apply<Train>(hidden_act_, apply<Train>(hidden_, h));
        check_finite(h, "fc_hidden");
    }
    h = apply<Train>(head_, h);
    check_finite(h, "fc");
    return h;
}

template <typename T>
Tensor<T> Discriminator<T>::forward(const Tensor<T>& images, const nn::StructuredInput<T>& condition) const {
    // The <false> paths only call the const forward of each layer.
    auto* self = const_cast<Discriminator*>(this);
    return self->template trunk<false>(images, self->template condition_branch<false>(condition));
}

template <typename T>
Tensor<T> Discriminator<T>::forward_train(const Tensor<T>& images, const nn::StructuredInput<T>& condition) {
    set_condition(condition);
    return forward_image(images);
}

template <typename T>
Tensor<T> Discriminator<T>::backward(const Tensor<T>& grad_logits, bool need_image_grad) {
    Tensor<T> g = backward_image(grad_logits, need_image_grad);
    backward_condition();
    return g;
}

template <typename T>
void Discriminator<T>::set_condition(const nn::StructuredInput<T>& condition) {
    al_features_ = condition_branch<true>(condition);
    al_grad_ = Tensor<T>();
}

template <typename T>
Tensor<T> Discriminator<T>::forward_image(const Tensor<T>& images) {
    if (al_features_.empty()) throw ValidationError("conditioning", "set_condition was not called");
    return trunk<true>(images, al_features_);
}

template <typename T>
Tensor<T> Discriminator<T>::backward_image(const Tensor<T>& grad_logits, bool need_image_grad) {
    Tensor<T> g = head_.backward(grad_logits, true);
    if (config_.fc_hidden > 0) g = hidden_.backward(hidden_act_.backward(g), true);
    const int b = config_.bottleneck_size();
    g = reshaped(g, fused_channels_, b, b);
    g = fuse_.backward(fuse_bn_.backward(fuse_act_.backward(g)), true);
    Tensor<T> g_al, g_im;
    split_channels(g, al_out_channels_, g_al, g_im);
    if (al_grad_.empty()) {
        al_grad_ = std::move(g_al);
    } else {
        for (std::size_t k = 0; k < al_grad_.size(); ++k) al_grad_[k] += g_al[k];
    }

    for (std::size_t i = img_.convs.size(); i-- > 0;) {
        g_im = img_.bns[i].backward(img_.acts[i + 1].backward(g_im));
        g_im = img_.convs[i].backward(g_im, true);
    }
    return img_conv1_.backward(img_.acts[0].backward(g_im), need_image_grad);
}

template <typename T>
void Discriminator<T>::backward_condition() {
    if (al_grad_.empty()) return;
    Tensor<T> g = std::move(al_grad_);
    al_grad_ = Tensor<T>();
    for (std::size_t i = al_.convs.size(); i-- > 0;) {
        g = al_.bns[i].backward(al_.acts[i + 1].backward(g));
        g = al_.convs[i].backward(g, true);
    }
    al_conv1_.backward(al_bn1_.backward(al_.acts[0].backward(g)));
}

template <typename T>
nn::ParamList<T> Discriminator<T>::parameters() {
    nn::ParamList<T> p;
    al_conv1_.collect(p, "al.conv1");
    al_bn1_.collect(p, "al.conv1.bn");
    for (std::size_t i = 0; i < al_.convs.size(); ++i) {
        const std::string name = "al.conv" + std::to_string(i + 2);
        al_.convs[i].collect(p, name);
        al_.bns[i].collect(p, name + ".bn");
    }
    img_conv1_.collect(p, "img.conv1");
    for (std::size_t i = 0; i < img_.convs.size(); ++i) {
        const std::string name = "img.conv" + std::to_string(i + 2);
        img_.convs[i].collect(p, name);
        img_.bns[i].collect(p, name + ".bn");
    }
    fuse_.collect(p, "conv6");
    fuse_bn_.collect(p, "conv6.bn");
    if (config_.fc_hidden > 0) hidden_.collect(p, "fc_hidden");
    head_.collect(p, "fc");
    return p;
}

template <typename T>
void Discriminator<T>::zero_grad() {
    zero_all(parameters());
}

template <typename T>
std::vector<T> scores_from_logits(const Tensor<T>& logits) {
    std::vector<T> s(logits.n());
    for (int i = 0; i < logits.n(); ++i) s[i] = T(1) / (T(1) + std::exp(-logits[i]));
    return s;
}

template class Generator<float>;
template class Generator<double>;
template class Discriminator<float>;
template class Discriminator<double>;
template std::vector<float> scores_from_logits<float>(const Tensor<float>&);
template std::vector<double> scores_from_logits<double>(const Tensor<double>&);

} // namespace alcgan::model
