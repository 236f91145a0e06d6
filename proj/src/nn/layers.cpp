#include "alcgan/nn/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

namespace alcgan::nn {

namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Map = Eigen::Map<MatRM<T>>;
template <typename T>
using ConstMap = Eigen::Map<const MatRM<T>>;
template <typename T>
using Vec = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>;
template <typename T>
using ConstVec = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>;

template <typename T>
void require_channels(const Tensor<T>& x, int channels, const char* layer) {
    if (x.c() != channels) {
        throw ValidationError(layer, "expected " + std::to_string(channels) + " input channels, got " +
                                         std::to_string(x.c()));
    }
}

} // namespace

namespace {

// Output columns [lo, hi) whose input column ox * stride - pad + k lies inside [0, width).
inline void valid_range(int out_w, int width, int stride, int pad, int k, int& lo, int& hi) {
    const int off = k - pad;
    lo = off >= 0 ? 0 : (-off + stride - 1) / stride;
    hi = width - 1 - off < 0 ? 0 : (width - 1 - off) / stride + 1;
    lo = std::min(lo, out_w);
    hi = std::clamp(hi, lo, out_w);
}

} // namespace

namespace {

// Column matrices with row stride `ld` so several samples can share one buffer.
// For stride > 1 each channel is first split into column phases
// (phase p holds input columns p, p + s, ...) so every patch row is a contiguous copy.
template <typename T>
void im2col_ld(const T* x, int channels, int height, int width, int kernel, int stride, int pad, int out_h, int out_w,
               T* col, std::size_t ld) {
    const int pw = (width + stride - 1) / stride;
    AlignedVector<T> phases(stride > 1 ? static_cast<std::size_t>(stride) * height * pw : 0);
    for (int c = 0; c < channels; ++c) {
        const T* plane = x + static_cast<std::size_t>(c) * height * width;
        if (stride > 1) {
            for (int iy = 0; iy < height; ++iy)
                for (int ix = 0; ix < width; ++ix)
                    phases[(static_cast<std::size_t>(ix % stride) * height + iy) * pw + ix / stride] =
                        plane[static_cast<std::size_t>(iy) * width + ix];
        }
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                T* row = col + ((static_cast<std::size_t>(c) * kernel + ky) * kernel + kx) * ld;
                int lo, hi;
                valid_range(out_w, width, stride, pad, kx, lo, hi);
                const int off = kx - pad;
                const int q = off >= 0 ? off / stride : -((-off + stride - 1) / stride);
                const int phase = off - q * stride;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    T* dst = row + static_cast<std::size_t>(oy) * out_w;
                    if (iy < 0 || iy >= height) {
                        std::fill(dst, dst + out_w, T(0));
                        continue;
                    }
                    const T* src = stride == 1 ? plane + static_cast<std::size_t>(iy) * width + off
                                               : phases.data() + (static_cast<std::size_t>(phase) * height + iy) * pw + q;
                    std::fill(dst, dst + lo, T(0));
                    std::copy(src + lo, src + hi, dst + lo);
                    std::fill(dst + hi, dst + out_w, T(0));
                }
            }
        }
    }
}

template <typename T>
void col2im_ld(const T* col, int channels, int height, int width, int kernel, int stride, int pad, int out_h,
               int out_w, T* x, std::size_t ld) {
    const int pw = (width + stride - 1) / stride;
    AlignedVector<T> phases(stride > 1 ? static_cast<std::size_t>(stride) * height * pw : 0);
    for (int c = 0; c < channels; ++c) {
        T* plane = x + static_cast<std::size_t>(c) * height * width;
        std::fill(phases.begin(), phases.end(), T(0));
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                const T* row = col + ((static_cast<std::size_t>(c) * kernel + ky) * kernel + kx) * ld;
                int lo, hi;
                valid_range(out_w, width, stride, pad, kx, lo, hi);
                const int off = kx - pad;
                const int q = off >= 0 ? off / stride : -((-off + stride - 1) / stride);
                const int phase = off - q * stride;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= height) continue;
                    const T* src = row + static_cast<std::size_t>(oy) * out_w;
                    T* dst = stride == 1 ? plane + static_cast<std::size_t>(iy) * width + off
                                         : phases.data() + (static_cast<std::size_t>(phase) * height + iy) * pw + q;
                    for (int ox = lo; ox < hi; ++ox) dst[ox] += src[ox];
                }
            }
        }
        if (stride > 1) {
            for (int iy = 0; iy < height; ++iy)
                for (int ix = 0; ix < width; ++ix)
                    plane[static_cast<std::size_t>(iy) * width + ix] +=
                        phases[(static_cast<std::size_t>(ix % stride) * height + iy) * pw + ix / stride];
        }
    }
}

// Samples per GEMM: enough columns to keep the kernel busy, bounded scratch.
int chunk_samples(int batch, int cols) { return std::clamp(256 / std::max(cols, 1), 1, std::max(batch, 1)); }

// Input channels per im2col slab so the slab stays cache resident.
template <typename T>
int channel_block(int channels, int taps, int cols) {
    const std::size_t per_channel = static_cast<std::size_t>(taps) * cols * sizeof(T);
    return std::clamp(static_cast<int>((256u << 10) / std::max<std::size_t>(per_channel, 1)), 1, channels);
}

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

// Convolution without im2col. Each input channel is split into stride x stride
// phase planes with a zero border, so kernel tap t reads a plain strided window
// and contributes one GEMM: out += W_t * window_t. Outputs are computed on rows
// of width `pw` and the columns past out_w are discarded.
struct PhaseGeometry {
    int stride, kernel, pad, height, width, out_h, out_w, qmin, span, ph, pw;

    PhaseGeometry(int s, int k, int p, int h, int w, int oh, int ow)
        : stride(s), kernel(k), pad(p), height(h), width(w), out_h(oh), out_w(ow) {
        qmin = floor_div(-p, s);
        span = floor_div(k - 1 - p, s) - qmin;
        ph = oh + span;
        pw = ow + span;
    }
    std::size_t plane() const { return static_cast<std::size_t>(ph) * pw; }
    std::size_t buffer(int channels) const {
        return static_cast<std::size_t>(stride) * stride * channels * plane() + span;
    }
    Eigen::Index ext_cols() const { return static_cast<Eigen::Index>(out_h) * pw; }
    // Offset of the window read by tap (ky, kx).
    std::size_t window(int ky, int kx, int channels) const {
        const int qy = floor_div(ky - pad, stride), qx = floor_div(kx - pad, stride);
        const int py = ky - pad - qy * stride, px = kx - pad - qx * stride;
        return (static_cast<std::size_t>(py * stride + px) * channels) * plane() +
               static_cast<std::size_t>(qy - qmin) * pw + (qx - qmin);
    }
    // Visits (phase buffer index, input index) for every input pixel.
    template <typename F>
    void for_each(int channels, F&& f) const {
        // Phase row a maps to input row (a + qmin) * stride + py; keep the in-range part.
        auto range = [&](int phase, int extent, int count, int& lo, int& hi) {
            lo = std::max(0, floor_div(-phase + stride - 1, stride) - qmin);
            hi = std::min(count, floor_div(extent - 1 - phase, stride) - qmin + 1);
            hi = std::max(hi, lo);
        };
        for (int py = 0; py < stride; ++py) {
            int alo, ahi;
            range(py, height, ph, alo, ahi);
            for (int px = 0; px < stride; ++px) {
                int blo, bhi;
                range(px, width, pw, blo, bhi);
                for (int c = 0; c < channels; ++c) {
                    const std::size_t base = (static_cast<std::size_t>(py * stride + px) * channels + c) * plane();
                    for (int a = alo; a < ahi; ++a) {
                        const std::size_t row = base + static_cast<std::size_t>(a) * pw;
                        const std::size_t in_row = (static_cast<std::size_t>(c) * height + (a + qmin) * stride + py) *
                                                       width + px + static_cast<std::size_t>(qmin) * stride;
                        for (int b = blo; b < bhi; ++b) f(row + b, in_row + static_cast<std::size_t>(b) * stride);
                    }
                }
            }
        }
    }
};

template <typename T>
using Window = Eigen::Map<MatRM<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstWindow = Eigen::Map<const MatRM<T>, 0, Eigen::OuterStride<>>;

// Worth it once the per-tap GEMMs have a reasonable depth.
bool use_phase_path(int in_channels) { return in_channels >= 16; }

// weight [out][in][t] -> [t][out][in]
template <typename T>
AlignedVector<T> tap_major(const T* w, int out, int in, int taps) {
    AlignedVector<T> r(static_cast<std::size_t>(taps) * out * in);
    for (int o = 0; o < out; ++o)
        for (int c = 0; c < in; ++c)
            for (int t = 0; t < taps; ++t)
                r[(static_cast<std::size_t>(t) * out + o) * in + c] = w[(static_cast<std::size_t>(o) * in + c) * taps + t];
    return r;
}

} // namespace

template <typename T>
void im2col(const T* x, int channels, int height, int width, int kernel, int stride, int pad, int out_h, int out_w,
            T* col) {
    im2col_ld(x, channels, height, width, kernel, stride, pad, out_h, out_w, col,
              static_cast<std::size_t>(out_h) * out_w);
}

template <typename T>
void col2im(const T* col, int channels, int height, int width, int kernel, int stride, int pad, int out_h, int out_w,
            T* x) {
    col2im_ld(col, channels, height, width, kernel, stride, pad, out_h, out_w, x,
              static_cast<std::size_t>(out_h) * out_w);
}

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
Conv2d<T>::Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, bool with_bias)
    : weight(out_channels, in_channels, kernel, kernel),
      grad_weight(out_channels, in_channels, kernel, kernel),
      in_channels_(in_channels), out_channels_(out_channels), kernel_(kernel), stride_(stride), pad_(pad) {
    if (with_bias) {
        bias = Tensor<T>(out_channels, 1, 1, 1);
        grad_bias = Tensor<T>(out_channels, 1, 1, 1);
    }
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) const {
    require_channels(x, in_channels_, "conv2d");
    const int oh = out_size(x.h()), ow = out_size(x.w());
    const int taps = kernel_ * kernel_;
    if (use_phase_path(in_channels_)) {
        const PhaseGeometry geo(stride_, kernel_, pad_, x.h(), x.w(), oh, ow);
        const AlignedVector<T> wt = tap_major(weight.data(), out_channels_, in_channels_, taps);
        AlignedVector<T> buf(geo.buffer(in_channels_), T(0));
        MatRM<T> out(out_channels_, geo.ext_cols());
        Tensor<T> y(x.n(), out_channels_, oh, ow);
        for (int i = 0; i < x.n(); ++i) {
            const T* xs = x.sample(i);
            geo.for_each(in_channels_, [&](std::size_t b, std::size_t k) { buf[b] = xs[k]; });
            out.setZero();
            for (int t = 0; t < taps; ++t) {
                out.noalias() +=
                    ConstMap<T>(wt.data() + static_cast<std::size_t>(t) * out_channels_ * in_channels_, out_channels_,
                                in_channels_) *
                    ConstWindow<T>(buf.data() + geo.window(t / kernel_, t % kernel_, in_channels_), in_channels_,
                                   geo.ext_cols(), Eigen::OuterStride<>(static_cast<Eigen::Index>(geo.plane())));
            }
            for (int o = 0; o < out_channels_; ++o) {
                const T b = bias.empty() ? T(0) : bias[o];
                for (int r = 0; r < oh; ++r) {
                    T* dst = y.plane(i, o) + static_cast<std::size_t>(r) * ow;
                    const T* src = out.data() + static_cast<std::size_t>(o) * geo.ext_cols() + static_cast<std::size_t>(r) * geo.pw;
                    for (int c = 0; c < ow; ++c) dst[c] = src[c] + b;
                }
            }
        }
        return y;
    }
    const int patch = in_channels_ * taps;
    const int cols = oh * ow;
    const int chunk = chunk_samples(x.n(), cols);
    const int cblock = channel_block<T>(in_channels_, taps, cols * chunk);
    const std::size_t in_plane = static_cast<std::size_t>(x.h()) * x.w();
    Tensor<T> y(x.n(), out_channels_, oh, ow);
    AlignedVector<T> col(static_cast<std::size_t>(cblock) * taps * cols * chunk);
    MatRM<T> out(out_channels_, static_cast<Eigen::Index>(cols) * chunk);
    ConstMap<T> w(weight.data(), out_channels_, patch);
    for (int i0 = 0; i0 < x.n(); i0 += chunk) {
        const int m = std::min(chunk, x.n() - i0);
        const std::size_t ld = static_cast<std::size_t>(cols) * m;
        Map<T> o(out.data(), out_channels_, static_cast<Eigen::Index>(ld));
        o.setZero();
        for (int c0 = 0; c0 < in_channels_; c0 += cblock) {
            const int cb = std::min(cblock, in_channels_ - c0);
            for (int j = 0; j < m; ++j) {
                im2col_ld(x.sample(i0 + j) + c0 * in_plane, cb, x.h(), x.w(), kernel_, stride_, pad_, oh, ow,
                          col.data() + static_cast<std::size_t>(j) * cols, ld);
            }
            o.noalias() += w.middleCols(static_cast<Eigen::Index>(c0) * taps, static_cast<Eigen::Index>(cb) * taps) *
                           ConstMap<T>(col.data(), static_cast<Eigen::Index>(cb) * taps, static_cast<Eigen::Index>(ld));
        }
        for (int j = 0; j < m; ++j) {
            Map<T> yj(y.sample(i0 + j), out_channels_, cols);
            yj = o.middleCols(static_cast<Eigen::Index>(j) * cols, cols);
            if (!bias.empty()) {
                for (int c = 0; c < out_channels_; ++c) yj.row(c).array() += bias[c];
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> Conv2d<T>::forward_train(const Tensor<T>& x) {
    cached_input_ = x;
    return forward(x);
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
    const Tensor<T>& x = cached_input_;
    const int oh = grad_out.h(), ow = grad_out.w();
    const int taps = kernel_ * kernel_;
    if (use_phase_path(in_channels_)) {
        const PhaseGeometry geo(stride_, kernel_, pad_, x.h(), x.w(), oh, ow);
        const AlignedVector<T> wt = tap_major(weight.data(), out_channels_, in_channels_, taps);
        AlignedVector<T> gwt(wt.size(), T(0));
        AlignedVector<T> buf(geo.buffer(in_channels_), T(0));
        AlignedVector<T> dbuf(need_input_grad ? buf.size() : 0);
        MatRM<T> dy = MatRM<T>::Zero(out_channels_, geo.ext_cols());
        const Eigen::OuterStride<> stride(static_cast<Eigen::Index>(geo.plane()));
        Tensor<T> dx;
        if (need_input_grad) dx = Tensor<T>(x.n(), x.c(), x.h(), x.w());
        for (int i = 0; i < x.n(); ++i) {
            const T* xs = x.sample(i);
            geo.for_each(in_channels_, [&](std::size_t b, std::size_t k) { buf[b] = xs[k]; });
            for (int o = 0; o < out_channels_; ++o) {
                T sum = 0;
                for (int r = 0; r < oh; ++r) {
                    const T* src = grad_out.plane(i, o) + static_cast<std::size_t>(r) * ow;
                    T* dst = dy.data() + static_cast<std::size_t>(o) * geo.ext_cols() + static_cast<std::size_t>(r) * geo.pw;
                    for (int c = 0; c < ow; ++c) sum += (dst[c] = src[c]);
                }
                if (!grad_bias.empty()) grad_bias[o] += sum;
            }
            if (need_input_grad) std::fill(dbuf.begin(), dbuf.end(), T(0));
            for (int t = 0; t < taps; ++t) {
                const std::size_t off = geo.window(t / kernel_, t % kernel_, in_channels_);
                const std::size_t wo = static_cast<std::size_t>(t) * out_channels_ * in_channels_;
                Map<T>(gwt.data() + wo, out_channels_, in_channels_).noalias() +=
                    dy * ConstWindow<T>(buf.data() + off, in_channels_, geo.ext_cols(), stride).transpose();
                if (need_input_grad) {
                    Window<T>(dbuf.data() + off, in_channels_, geo.ext_cols(), stride).noalias() +=
                        ConstMap<T>(wt.data() + wo, out_channels_, in_channels_).transpose() * dy;
                }
            }
            if (need_input_grad) {
                T* ds = dx.sample(i);
                geo.for_each(in_channels_, [&](std::size_t b, std::size_t k) { ds[k] = dbuf[b]; });
            }
        }
        for (int o = 0; o < out_channels_; ++o)
            for (int c = 0; c < in_channels_; ++c)
                for (int t = 0; t < taps; ++t)
                    grad_weight.data()[(static_cast<std::size_t>(o) * in_channels_ + c) * taps + t] +=
                        gwt[(static_cast<std::size_t>(t) * out_channels_ + o) * in_channels_ + c];
        return dx;
    }
    const int patch = in_channels_ * taps;
    const int cols = oh * ow;
    const int chunk = chunk_samples(x.n(), cols);
    const int cblock = channel_block<T>(in_channels_, taps, cols * chunk);
    const std::size_t in_plane = static_cast<std::size_t>(x.h()) * x.w();
    AlignedVector<T> col(static_cast<std::size_t>(cblock) * taps * cols * chunk);
    MatRM<T> dy(out_channels_, static_cast<Eigen::Index>(cols) * chunk);
    Map<T> gw(grad_weight.data(), out_channels_, patch);
    ConstMap<T> w(weight.data(), out_channels_, patch);
    Tensor<T> dx;
    if (need_input_grad) dx = Tensor<T>(x.n(), x.c(), x.h(), x.w());
    for (int i0 = 0; i0 < x.n(); i0 += chunk) {
        const int m = std::min(chunk, x.n() - i0);
        const std::size_t ld = static_cast<std::size_t>(cols) * m;
        Map<T> g(dy.data(), out_channels_, static_cast<Eigen::Index>(ld));
        for (int j = 0; j < m; ++j) {
            g.middleCols(static_cast<Eigen::Index>(j) * cols, cols) =
                ConstMap<T>(grad_out.sample(i0 + j), out_channels_, cols);
        }
        if (!grad_bias.empty()) {
            for (int o = 0; o < out_channels_; ++o) grad_bias[o] += g.row(o).sum();
        }
        for (int c0 = 0; c0 < in_channels_; c0 += cblock) {
            const int cb = std::min(cblock, in_channels_ - c0);
            const Eigen::Index rows = static_cast<Eigen::Index>(cb) * taps;
            Map<T> cm(col.data(), rows, static_cast<Eigen::Index>(ld));
            for (int j = 0; j < m; ++j) {
                im2col_ld(x.sample(i0 + j) + c0 * in_plane, cb, x.h(), x.w(), kernel_, stride_, pad_, oh, ow,
                          col.data() + static_cast<std::size_t>(j) * cols, ld);
            }
            gw.middleCols(static_cast<Eigen::Index>(c0) * taps, rows).noalias() += g * cm.transpose();
            if (need_input_grad) {
                cm.noalias() = w.middleCols(static_cast<Eigen::Index>(c0) * taps, rows).transpose() * g;
                for (int j = 0; j < m; ++j) {
                    col2im_ld(col.data() + static_cast<std::size_t>(j) * cols, cb, x.h(), x.w(), kernel_, stride_,
                              pad_, oh, ow, dx.sample(i0 + j) + c0 * in_plane, ld);
                }
            }
        }
    }
    return dx;
}

template <typename T>
void Conv2d<T>::collect(ParamList<T>& params, const std::string& prefix) {
    params.push_back({prefix + ".weight", &weight, &grad_weight});
    if (!bias.empty()) params.push_back({prefix + ".bias", &bias, &grad_bias});
}

// ---------------------------------------------------------------------------
// ConvTranspose2d

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride, int pad,
                                    int output_padding, bool with_bias)
    : weight(in_channels, out_channels, kernel, kernel),
      grad_weight(in_channels, out_channels, kernel, kernel),
      in_channels_(in_channels), out_channels_(out_channels), kernel_(kernel), stride_(stride), pad_(pad),
      output_padding_(output_padding) {
    if (with_bias) {
        bias = Tensor<T>(out_channels, 1, 1, 1);
        grad_bias = Tensor<T>(out_channels, 1, 1, 1);
    }
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::forward(const Tensor<T>& x) const {
    require_channels(x, in_channels_, "conv_transpose2d");
    const int oh = out_size(x.h()), ow = out_size(x.w());
    const int patch = out_channels_ * kernel_ * kernel_;
    const int cols = x.h() * x.w();
    const int chunk = chunk_samples(x.n(), cols);
    Tensor<T> y(x.n(), out_channels_, oh, ow);
    AlignedVector<T> col(static_cast<std::size_t>(patch) * cols * chunk);
    MatRM<T> in(in_channels_, static_cast<Eigen::Index>(cols) * chunk);
    ConstMap<T> w(weight.data(), in_channels_, patch);
    for (int i0 = 0; i0 < x.n(); i0 += chunk) {
        const int m = std::min(chunk, x.n() - i0);
        const std::size_t ld = static_cast<std::size_t>(cols) * m;
        Map<T> xi(in.data(), in_channels_, static_cast<Eigen::Index>(ld));
        for (int j = 0; j < m; ++j) {
            xi.middleCols(static_cast<Eigen::Index>(j) * cols, cols) = ConstMap<T>(x.sample(i0 + j), in_channels_, cols);
        }
        Map<T>(col.data(), patch, static_cast<Eigen::Index>(ld)).noalias() = w.transpose() * xi;
        for (int j = 0; j < m; ++j) {
            const int i = i0 + j;
            col2im_ld(col.data() + static_cast<std::size_t>(j) * cols, out_channels_, oh, ow, kernel_, stride_, pad_,
                      x.h(), x.w(), y.sample(i), ld);
            if (!bias.empty()) {
                for (int o = 0; o < out_channels_; ++o) Vec<T>(y.plane(i, o), y.plane_size()) += bias[o];
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::forward_train(const Tensor<T>& x) {
    cached_input_ = x;
    return forward(x);
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
    const Tensor<T>& x = cached_input_;
    const int patch = out_channels_ * kernel_ * kernel_;
    const int cols = x.h() * x.w();
    const int chunk = chunk_samples(x.n(), cols);
    AlignedVector<T> col(static_cast<std::size_t>(patch) * cols * chunk);
    MatRM<T> in(in_channels_, static_cast<Eigen::Index>(cols) * chunk);
    MatRM<T> din(in_channels_, static_cast<Eigen::Index>(cols) * chunk);
    Map<T> gw(grad_weight.data(), in_channels_, patch);
    ConstMap<T> w(weight.data(), in_channels_, patch);
    Tensor<T> dx;
    if (need_input_grad) dx = Tensor<T>(x.n(), x.c(), x.h(), x.w());
    for (int i0 = 0; i0 < x.n(); i0 += chunk) {
        const int m = std::min(chunk, x.n() - i0);
        const std::size_t ld = static_cast<std::size_t>(cols) * m;
        Map<T> xi(in.data(), in_channels_, static_cast<Eigen::Index>(ld));
        for (int j = 0; j < m; ++j) {
            im2col_ld(grad_out.sample(i0 + j), out_channels_, grad_out.h(), grad_out.w(), kernel_, stride_, pad_,
                      x.h(), x.w(), col.data() + static_cast<std::size_t>(j) * cols, ld);
            xi.middleCols(static_cast<Eigen::Index>(j) * cols, cols) = ConstMap<T>(x.sample(i0 + j), in_channels_, cols);
        }
        ConstMap<T> dcol(col.data(), patch, static_cast<Eigen::Index>(ld));
        gw.noalias() += xi * dcol.transpose();
        if (need_input_grad) {
            Map<T> d(din.data(), in_channels_, static_cast<Eigen::Index>(ld));
            d.noalias() = w * dcol;
            for (int j = 0; j < m; ++j) {
                Map<T>(dx.sample(i0 + j), in_channels_, cols) = d.middleCols(static_cast<Eigen::Index>(j) * cols, cols);
            }
        }
    }
    if (!grad_bias.empty()) {
        for (int i = 0; i < grad_out.n(); ++i)
            for (int o = 0; o < out_channels_; ++o)
                grad_bias[o] += ConstVec<T>(grad_out.plane(i, o), grad_out.plane_size()).sum();
    }
    return dx;
}

template <typename T>
void ConvTranspose2d<T>::collect(ParamList<T>& params, const std::string& prefix) {
    params.push_back({prefix + ".weight", &weight, &grad_weight});
    if (!bias.empty()) params.push_back({prefix + ".bias", &bias, &grad_bias});
}

// ---------------------------------------------------------------------------
// BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(int channels, double eps, double momentum)
    : gamma(channels, 1, 1, 1, T(1)), beta(channels, 1, 1, 1), grad_gamma(channels, 1, 1, 1),
      grad_beta(channels, 1, 1, 1), running_mean(channels, 1, 1, 1), running_var(channels, 1, 1, 1, T(1)),
      eps_(eps), momentum_(momentum) {}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x) const {
    require_channels(x, gamma.n(), "batchnorm");
    Tensor<T> y(x.n(), x.c(), x.h(), x.w());
    for (int c = 0; c < x.c(); ++c) {
        const T scale = gamma[c] / static_cast<T>(std::sqrt(static_cast<double>(running_var[c]) + eps_));
        const T shift = beta[c] - running_mean[c] * scale;
        for (int i = 0; i < x.n(); ++i) {
            const T* src = x.plane(i, c);
            T* dst = y.plane(i, c);
            for (std::size_t k = 0; k < x.plane_size(); ++k) dst[k] = src[k] * scale + shift;
        }
    }
    return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward_train(const Tensor<T>& x) {
    require_channels(x, gamma.n(), "batchnorm");
    const Eigen::Index plane = static_cast<Eigen::Index>(x.plane_size());
    const double count = static_cast<double>(x.n()) * plane;
    if (count < 2) throw ValidationError("batchnorm", "training-mode batch normalization needs more than one value");
    Tensor<T> y(x.n(), x.c(), x.h(), x.w());
    cached_xhat_ = Tensor<T>(x.n(), x.c(), x.h(), x.w());
    cached_invstd_.assign(x.c(), T(0));
    for (int c = 0; c < x.c(); ++c) {
        // Per-plane vectorized sums, accumulated across planes in double.
        double sum = 0.0;
        for (int i = 0; i < x.n(); ++i) sum += static_cast<double>(ConstVec<T>(x.plane(i, c), plane).sum());
        const double mean = sum / count;
        const T m = static_cast<T>(mean);
        double sq = 0.0;
        for (int i = 0; i < x.n(); ++i) {
            sq += static_cast<double>((ConstVec<T>(x.plane(i, c), plane) - m).square().sum());
        }
        const double var = sq / count;
        const double invstd = 1.0 / std::sqrt(var + eps_);
        const T is = static_cast<T>(invstd);
        cached_invstd_[c] = is;
        for (int i = 0; i < x.n(); ++i) {
            Vec<T> xhat(cached_xhat_.plane(i, c), plane);
            xhat = (ConstVec<T>(x.plane(i, c), plane) - m) * is;
            Vec<T>(y.plane(i, c), plane) = xhat * gamma[c] + beta[c];
        }
        running_mean[c] = static_cast<T>((1.0 - momentum_) * running_mean[c] + momentum_ * mean);
        running_var[c] = static_cast<T>((1.0 - momentum_) * running_var[c] + momentum_ * var * count / (count - 1.0));
    }
    return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& grad_out) {
    const Tensor<T>& xhat = cached_xhat_;
    const Eigen::Index plane = static_cast<Eigen::Index>(xhat.plane_size());
    const double count = static_cast<double>(xhat.n()) * plane;
    Tensor<T> dx(xhat.n(), xhat.c(), xhat.h(), xhat.w());
    for (int c = 0; c < xhat.c(); ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int i = 0; i < xhat.n(); ++i) {
            ConstVec<T> dy(grad_out.plane(i, c), plane);
            sum_dy += static_cast<double>(dy.sum());
            sum_dy_xhat += static_cast<double>((dy * ConstVec<T>(xhat.plane(i, c), plane)).sum());
        }
        grad_gamma[c] += static_cast<T>(sum_dy_xhat);
        grad_beta[c] += static_cast<T>(sum_dy);
        const double scale = static_cast<double>(gamma[c]) * cached_invstd_[c] / count;
        const T a = static_cast<T>(scale * count);
        const T b = static_cast<T>(scale * sum_dy);
        const T g = static_cast<T>(scale * sum_dy_xhat);
        for (int i = 0; i < xhat.n(); ++i) {
            Vec<T>(dx.plane(i, c), plane) =
                ConstVec<T>(grad_out.plane(i, c), plane) * a - b - ConstVec<T>(xhat.plane(i, c), plane) * g;
        }
    }
    return dx;
}

template <typename T>
void BatchNorm2d<T>::collect(ParamList<T>& params, const std::string& prefix) {
    params.push_back({prefix + ".gamma", &gamma, &grad_gamma});
    params.push_back({prefix + ".beta", &beta, &grad_beta});
    params.push_back({prefix + ".running_mean", &running_mean, nullptr});
    params.push_back({prefix + ".running_var", &running_var, nullptr});
}

// ---------------------------------------------------------------------------
// Linear

template <typename T>
Linear<T>::Linear(int in_features, int out_features)
    : weight(out_features, in_features, 1, 1), grad_weight(out_features, in_features, 1, 1),
      bias(out_features, 1, 1, 1), grad_bias(out_features, 1, 1, 1), in_features_(in_features),
      out_features_(out_features) {}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x) const {
    if (static_cast<int>(x.sample_size()) != in_features_) {
        throw ValidationError("linear", "expected " + std::to_string(in_features_) + " features per sample, got " +
                                            std::to_string(x.sample_size()));
    }
    Tensor<T> y(x.n(), out_features_, 1, 1);
    Map<T> out(y.data(), x.n(), out_features_);
    out.noalias() = ConstMap<T>(x.data(), x.n(), in_features_) *
                    ConstMap<T>(weight.data(), out_features_, in_features_).transpose();
    for (int i = 0; i < x.n(); ++i) {
        for (int o = 0; o < out_features_; ++o) out(i, o) += bias[o];
    }
    return y;
}

template <typename T>
Tensor<T> Linear<T>::forward_train(const Tensor<T>& x) {
    cached_input_ = x;
    return forward(x);
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
    const Tensor<T>& x = cached_input_;
    ConstMap<T> dy(grad_out.data(), x.n(), out_features_);
    ConstMap<T> xin(x.data(), x.n(), in_features_);
    Map<T>(grad_weight.data(), out_features_, in_features_).noalias() += dy.transpose() * xin;
    for (int o = 0; o < out_features_; ++o) grad_bias[o] += dy.col(o).sum();
    Tensor<T> dx;
    if (need_input_grad) {
        dx = Tensor<T>(x.n(), x.c(), x.h(), x.w());
        Map<T>(dx.data(), x.n(), in_features_).noalias() =
            dy * ConstMap<T>(weight.data(), out_features_, in_features_);
    }
    return dx;
}

template <typename T>
void Linear<T>::collect(ParamList<T>& params, const std::string& prefix) {
    params.push_back({prefix + ".weight", &weight, &grad_weight});
    params.push_back({prefix + ".bias", &bias, &grad_bias});
}

// ---------------------------------------------------------------------------
// Activation

template <typename T>
Tensor<T> Activation<T>::forward(const Tensor<T>& x) const {
    Tensor<T> y = x;
    const T slope = static_cast<T>(slope_);
    switch (kind_) {
    case ActivationKind::Identity:
        break;
    case ActivationKind::ReLU:
        for (auto& v : y.storage()) v = v < T(0) ? T(0) : v; // NaN passes through
        break;
    case ActivationKind::LeakyReLU:
        for (auto& v : y.storage()) v = v < T(0) ? v * slope : v;
        break;
    case ActivationKind::Tanh:
        for (auto& v : y.storage()) v = std::tanh(v);
        break;
    case ActivationKind::Sigmoid:
        for (auto& v : y.storage()) v = T(1) / (T(1) + std::exp(-v));
        break;
    }
    return y;
}

template <typename T>
Tensor<T> Activation<T>::forward_train(const Tensor<T>& x) {
    cached_output_ = forward(x);
    return cached_output_;
}

template <typename T>
Tensor<T> Activation<T>::backward(const Tensor<T>& grad_out) const {
    Tensor<T> dx = grad_out;
    const auto& y = cached_output_.storage();
    auto& d = dx.storage();
    const T slope = static_cast<T>(slope_);
    switch (kind_) {
    case ActivationKind::Identity:
        break;
    case ActivationKind::ReLU:
        for (std::size_t k = 0; k < d.size(); ++k) d[k] = y[k] > T(0) ? d[k] : T(0);
        break;
    case ActivationKind::LeakyReLU:
        for (std::size_t k = 0; k < d.size(); ++k) d[k] = y[k] > T(0) ? d[k] : d[k] * slope;
        break;
    case ActivationKind::Tanh:
        for (std::size_t k = 0; k < d.size(); ++k) d[k] *= (T(1) - y[k] * y[k]);
        break;
    case ActivationKind::Sigmoid:
        for (std::size_t k = 0; k < d.size(); ++k) d[k] *= y[k] * (T(1) - y[k]);
        break;
    }
    return dx;
}

// ---------------------------------------------------------------------------
// StructuredInput / ConditioningConv

template <typename T>
Tensor<T> StructuredInput<T>::dense() const {
    const int k = constant_channels();
    Tensor<T> v(batch, layout_channels + k, resolution, resolution);
    const std::size_t plane = static_cast<std::size_t>(resolution) * resolution;
    for (int i = 0; i < batch; ++i) {
        if (layout_channels > 0) {
            const std::uint8_t* lab = sample_labels(i);
            for (std::size_t p = 0; p < plane; ++p) v.plane(i, lab[p])[p] = T(1);
        }
        for (int c = 0; c < k; ++c) {
            T* dst = v.plane(i, layout_channels + c);
            std::fill(dst, dst + plane, constants(i, c, 0, 0));
        }
    }
    return v;
}

template <typename T>
ConditioningConv<T>::ConditioningConv(int layout_channels, int constant_channels, int out_channels, int kernel)
    : weight(out_channels, layout_channels + constant_channels, kernel, kernel),
      grad_weight(out_channels, layout_channels + constant_channels, kernel, kernel),
      layout_channels_(layout_channels), constant_channels_(constant_channels), out_channels_(out_channels),
      kernel_(kernel) {}

template <typename T>
void ConditioningConv<T>::check_input(const StructuredInput<T>& input) const {
    if (input.layout_channels != layout_channels_) {
        throw ValidationError("layout", "expected " + std::to_string(layout_channels_) + " layout channels, got " +
                                            std::to_string(input.layout_channels));
    }
    if (input.constant_channels() != constant_channels_) {
        throw ValidationError("conditioning", "expected " + std::to_string(constant_channels_) +
                                                  " tiled channels, got " +
                                                  std::to_string(input.constant_channels()));
    }
    const std::size_t plane = static_cast<std::size_t>(input.resolution) * input.resolution;
    if (layout_channels_ > 0 && input.labels.size() != plane * input.batch) {
        throw ValidationError("layout", "label buffer does not match batch and resolution");
    }
    if (constant_channels_ > 0 && input.constants.n() != input.batch) {
        throw ValidationError("conditioning", "constant block does not match batch size");
    }
}

namespace {

// Pixels of a stride-1 "same" conv grouped by which kernel rows (or columns) land
// inside the image; interior pixels share one class.
struct TapClasses {
    std::vector<int> of;                     // class per row/column index
    std::vector<std::pair<int, int>> ranges; // valid taps [lo, hi) per class
};

TapClasses tap_classes(int size, int kernel) {
    const int pad = kernel / 2;
    TapClasses tc;
    tc.of.resize(size);
    for (int y = 0; y < size; ++y) {
        const std::pair<int, int> range{std::max(0, pad - y), std::min(kernel, size + pad - y)};
        auto it = std::find(tc.ranges.begin(), tc.ranges.end(), range);
        tc.of[y] = static_cast<int>(it - tc.ranges.begin());
        if (it == tc.ranges.end()) tc.ranges.push_back(range);
    }
    return tc;
}

} // namespace

template <typename T>
Tensor<T> ConditioningConv<T>::forward(const StructuredInput<T>& input) const {
    check_input(input);
    const int r = input.resolution;
    const int pad = kernel_ / 2;
    const int taps = kernel_ * kernel_;
    const int outc = out_channels_;
    const int cin = in_channels();
    const int nk = constant_channels_;
    const std::size_t plane = static_cast<std::size_t>(r) * r;
    const TapClasses tc = tap_classes(r, kernel_);
    const int nc = static_cast<int>(tc.ranges.size());

    // own[t][c][o] = W[o][c][t]
    AlignedVector<T> own(static_cast<std::size_t>(taps) * layout_channels_ * outc);
    for (int o = 0; o < outc; ++o)
        for (int c = 0; c < layout_channels_; ++c)
            for (int t = 0; t < taps; ++t)
                own[(static_cast<std::size_t>(t) * layout_channels_ + c) * outc + o] =
                    weight.data()[(static_cast<std::size_t>(o) * cin + c) * taps + t];

    // tiled[i][t][o] = sum_k v[i][k] W[o][S'+k][t], one GEMM for the batch.
    MatRM<T> tiled;
    if (nk > 0) {
        MatRM<T> wc(nk, static_cast<Eigen::Index>(taps) * outc);
        for (int o = 0; o < outc; ++o)
            for (int k = 0; k < nk; ++k)
                for (int t = 0; t < taps; ++t)
                    wc(k, static_cast<Eigen::Index>(t) * outc + o) =
                        weight.data()[(static_cast<std::size_t>(o) * cin + layout_channels_ + k) * taps + t];
        tiled.noalias() = ConstMap<T>(input.constants.data(), input.batch, nk) * wc;
    }

    Tensor<T> y(input.batch, outc, r, r);
    AlignedVector<T> window(static_cast<std::size_t>(nc) * nc * outc);
    AlignedVector<T> pixel_major(plane * outc);
    for (int i = 0; i < input.batch; ++i) {
        std::fill(window.begin(), window.end(), T(0));
        if (nk > 0) {
            const T* ti = tiled.data() + static_cast<std::size_t>(i) * taps * outc;
            for (int cy = 0; cy < nc; ++cy)
                for (int cx = 0; cx < nc; ++cx) {
                    Vec<T> acc(window.data() + (static_cast<std::size_t>(cy) * nc + cx) * outc, outc);
                    for (int ky = tc.ranges[cy].first; ky < tc.ranges[cy].second; ++ky)
                        for (int kx = tc.ranges[cx].first; kx < tc.ranges[cx].second; ++kx)
                            acc += ConstVec<T>(ti + static_cast<std::size_t>(ky * kernel_ + kx) * outc, outc);
                }
        }
        const std::uint8_t* lab = layout_channels_ > 0 ? input.sample_labels(i) : nullptr;
        for (int yy = 0; yy < r; ++yy) {
            const auto [kylo, kyhi] = tc.ranges[tc.of[yy]];
            for (int xx = 0; xx < r; ++xx) {
                const auto [kxlo, kxhi] = tc.ranges[tc.of[xx]];
                Vec<T> acc(pixel_major.data() + (static_cast<std::size_t>(yy) * r + xx) * outc, outc);
                acc = ConstVec<T>(window.data() + (static_cast<std::size_t>(tc.of[yy]) * nc + tc.of[xx]) * outc, outc);
                if (!lab) continue;
                for (int ky = kylo; ky < kyhi; ++ky) {
                    const std::uint8_t* row = lab + static_cast<std::size_t>(yy + ky - pad) * r + (xx - pad);
                    for (int kx = kxlo; kx < kxhi; ++kx) {
                        acc += ConstVec<T>(
                            own.data() + (static_cast<std::size_t>(ky * kernel_ + kx) * layout_channels_ + row[kx]) * outc,
                            outc);
                    }
                }
            }
        }
        Map<T>(y.sample(i), outc, static_cast<Eigen::Index>(plane)) =
            ConstMap<T>(pixel_major.data(), static_cast<Eigen::Index>(plane), outc).transpose();
    }
    return y;
}

template <typename T>
Tensor<T> ConditioningConv<T>::forward_train(const StructuredInput<T>& input) {
    cached_input_ = input;
    return forward(input);
}

template <typename T>
void ConditioningConv<T>::backward(const Tensor<T>& grad_out) {
    const StructuredInput<T>& input = cached_input_;
    const int r = input.resolution;
    const int pad = kernel_ / 2;
    const int taps = kernel_ * kernel_;
    const int outc = out_channels_;
    const int cin = in_channels();
    const int nk = constant_channels_;
    const std::size_t plane = static_cast<std::size_t>(r) * r;
    const TapClasses tc = tap_classes(r, kernel_);
    const int nc = static_cast<int>(tc.ranges.size());

    // binned[t][c][o]: output gradient summed over pixels whose tap t reads label c.
    AlignedVector<T> binned(static_cast<std::size_t>(taps) * layout_channels_ * outc, T(0));
    // per_tap[i][t][o]: output gradient summed over pixels where tap t is inside the image.
    MatRM<T> per_tap = MatRM<T>::Zero(input.batch, static_cast<Eigen::Index>(taps) * outc);
    AlignedVector<T> pixel_major(plane * outc);
    AlignedVector<T> class_sum(static_cast<std::size_t>(nc) * nc * outc);
    for (int i = 0; i < input.batch; ++i) {
        Map<T>(pixel_major.data(), static_cast<Eigen::Index>(plane), outc) =
            ConstMap<T>(grad_out.sample(i), outc, static_cast<Eigen::Index>(plane)).transpose();
        const std::uint8_t* lab = layout_channels_ > 0 ? input.sample_labels(i) : nullptr;
        std::fill(class_sum.begin(), class_sum.end(), T(0));
        for (int yy = 0; yy < r; ++yy) {
            const auto [kylo, kyhi] = tc.ranges[tc.of[yy]];
            for (int xx = 0; xx < r; ++xx) {
                const auto [kxlo, kxhi] = tc.ranges[tc.of[xx]];
                ConstVec<T> g(pixel_major.data() + (static_cast<std::size_t>(yy) * r + xx) * outc, outc);
                Vec<T>(class_sum.data() + (static_cast<std::size_t>(tc.of[yy]) * nc + tc.of[xx]) * outc, outc) += g;
                if (!lab) continue;
                for (int ky = kylo; ky < kyhi; ++ky) {
                    const std::uint8_t* row = lab + static_cast<std::size_t>(yy + ky - pad) * r + (xx - pad);
                    for (int kx = kxlo; kx < kxhi; ++kx) {
                        Vec<T>(binned.data() +
                                   (static_cast<std::size_t>(ky * kernel_ + kx) * layout_channels_ + row[kx]) * outc,
                               outc) += g;
                    }
                }
            }
        }
        if (nk == 0) continue;
        T* pt = per_tap.data() + static_cast<std::size_t>(i) * taps * outc;
        for (int cy = 0; cy < nc; ++cy)
            for (int cx = 0; cx < nc; ++cx) {
                ConstVec<T> cs(class_sum.data() + (static_cast<std::size_t>(cy) * nc + cx) * outc, outc);
                for (int ky = tc.ranges[cy].first; ky < tc.ranges[cy].second; ++ky)
                    for (int kx = tc.ranges[cx].first; kx < tc.ranges[cx].second; ++kx)
                        Vec<T>(pt + static_cast<std::size_t>(ky * kernel_ + kx) * outc, outc) += cs;
            }
    }

    for (int o = 0; o < outc; ++o)
        for (int c = 0; c < layout_channels_; ++c)
            for (int t = 0; t < taps; ++t)
                grad_weight.data()[(static_cast<std::size_t>(o) * cin + c) * taps + t] +=
                    binned[(static_cast<std::size_t>(t) * layout_channels_ + c) * outc + o];
    if (nk > 0) {
        const MatRM<T> gc = ConstMap<T>(input.constants.data(), input.batch, nk).transpose() * per_tap;
        for (int o = 0; o < outc; ++o)
            for (int k = 0; k < nk; ++k)
                for (int t = 0; t < taps; ++t)
                    grad_weight.data()[(static_cast<std::size_t>(o) * cin + layout_channels_ + k) * taps + t] +=
                        gc(k, static_cast<Eigen::Index>(t) * outc + o);
    }
}

template <typename T>
void ConditioningConv<T>::collect(ParamList<T>& params, const std::string& prefix) {
    params.push_back({prefix + ".weight", &weight, &grad_weight});
}

template <typename T>
Tensor<T> ConditioningConv<T>::forward_dense(const Tensor<T>& volume) const {
    Conv2d<T> dense(in_channels(), out_channels_, kernel_, 1, kernel_ / 2, false);
    dense.weight = weight;
    return dense.forward(volume);
}

#define ALCGAN_INSTANTIATE(T)                                                                                   \
    template void im2col<T>(const T*, int, int, int, int, int, int, int, int, T*);                            \
    template void col2im<T>(const T*, int, int, int, int, int, int, int, int, T*);                            \
    template class Conv2d<T>;                                                                                  \
    template class ConvTranspose2d<T>;                                                                         \
    template class BatchNorm2d<T>;                                                                             \
    template class Linear<T>;                                                                                  \
    template class Activation<T>;                                                                              \
    template struct StructuredInput<T>;                                                                        \
    template class ConditioningConv<T>;

ALCGAN_INSTANTIATE(float)
ALCGAN_INSTANTIATE(double)

#undef ALCGAN_INSTANTIATE

} // namespace alcgan::nn
