#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace metmorph {

/// Dense row-major image with interleaved channels.
template <class T, int Channels = 1>
class Image {
public:
    static constexpr int channels = Channels;

    Image() = default;
    Image(int height, int width, T fill = T{})
        : height_(height), width_(width),
          data_(static_cast<std::size_t>(height) * width * Channels, fill)
    {
        if (height < 0 || width < 0) throw std::invalid_argument("negative image size");
    }

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    bool empty() const noexcept { return data_.empty(); }
    bool contains(int row, int col) const noexcept
    {
        return row >= 0 && col >= 0 && row < height_ && col < width_;
    }

    T& at(int row, int col, int ch = 0) noexcept { return data_[index(row, col, ch)]; }
    const T& at(int row, int col, int ch = 0) const noexcept { return data_[index(row, col, ch)]; }

    std::vector<T>& data() noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t index(int row, int col, int ch) const noexcept
    {
        return (static_cast<std::size_t>(row) * width_ + col) * Channels + ch;
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<T> data_;
};

using RgbImage = Image<std::uint8_t, 3>;
using LabelImage = Image<std::uint16_t, 1>;
using GrayImage = Image<double, 1>;
using LevelImage = Image<std::uint8_t, 1>;

} // namespace metmorph
