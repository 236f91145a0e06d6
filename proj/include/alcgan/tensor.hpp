#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <new>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "alcgan/error.hpp"

namespace alcgan {

/// Cache-line aligned storage. Vectorized reductions peel by address, so a
/// fixed base alignment keeps float results independent of where malloc lands.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t alignment{64};

    AlignedAllocator() noexcept = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Dense NCHW tensor. Lower-rank data uses trailing 1s (a bias of length C is {C,1,1,1}).
template <typename T>
class Tensor {
public:
    Tensor() = default;
    Tensor(int n, int c, int h, int w, T fill = T(0))
        : shape_{n, c, h, w}, data_(static_cast<std::size_t>(n) * c * h * w, fill) {}

    int n() const noexcept { return shape_[0]; }
    int c() const noexcept { return shape_[1]; }
    int h() const noexcept { return shape_[2]; }
    int w() const noexcept { return shape_[3]; }
    const std::array<int, 4>& shape() const noexcept { return shape_; }

    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    /// Elements per sample (C*H*W).
    std::size_t sample_size() const noexcept {
        return static_cast<std::size_t>(shape_[1]) * shape_[2] * shape_[3];
    }
    std::size_t plane_size() const noexcept { return static_cast<std::size_t>(shape_[2]) * shape_[3]; }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::span<T> span() noexcept { return data_; }
    std::span<const T> span() const noexcept { return data_; }
    AlignedVector<T>& storage() noexcept { return data_; }
    const AlignedVector<T>& storage() const noexcept { return data_; }

    T* sample(int i) noexcept { return data_.data() + i * sample_size(); }
    const T* sample(int i) const noexcept { return data_.data() + i * sample_size(); }
    T* plane(int i, int ch) noexcept { return sample(i) + ch * plane_size(); }
    const T* plane(int i, int ch) const noexcept { return sample(i) + ch * plane_size(); }

    T& operator()(int i, int ch, int y, int x) noexcept {
        return data_[((static_cast<std::size_t>(i) * shape_[1] + ch) * shape_[2] + y) * shape_[3] + x];
    }
    const T& operator()(int i, int ch, int y, int x) const noexcept {
        return data_[((static_cast<std::size_t>(i) * shape_[1] + ch) * shape_[2] + y) * shape_[3] + x];
    }
    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
    void zero() { fill(T(0)); }

    bool same_shape(const Tensor& o) const noexcept { return shape_ == o.shape_; }

    bool all_finite() const noexcept {
        // Largest exponent field; all-ones means inf or NaN. Branch-free so it vectorizes.
        using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
        constexpr Bits exponent = sizeof(T) == 4 ? Bits(0x7f800000u) : Bits(0x7ff0000000000000ull);
        Bits worst = 0;
        for (T v : data_) worst = std::max(worst, static_cast<Bits>(std::bit_cast<Bits>(v) & exponent));
        return worst != exponent;
    }

    std::string shape_string() const {
        return std::to_string(shape_[0]) + "x" + std::to_string(shape_[1]) + "x" +
               std::to_string(shape_[2]) + "x" + std::to_string(shape_[3]);
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape_[0], shape_[1], shape_[2], shape_[3]);
        std::transform(data_.begin(), data_.end(), out.data(), [](T v) { return static_cast<U>(v); });
        return out;
    }

    bool operator==(const Tensor& o) const = default;

private:
    std::array<int, 4> shape_{0, 0, 0, 0};
    AlignedVector<T> data_;
};

template <typename T>
void check_finite(const Tensor<T>& t, const std::string& layer) {
    if (!t.all_finite()) throw NonFiniteError(layer);
}

} // namespace alcgan
