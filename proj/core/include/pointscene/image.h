#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pointscene {

// Dense row-major image with interleaved channels.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels = 1, T fill = T{})
      : width_(width),
        height_(height),
        channels_(channels),
        data_(static_cast<size_t>(width) * height * channels, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  size_t num_pixels() const { return static_cast<size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  bool InBounds(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  bool SameShape(int width, int height) const {
    return width_ == width && height_ == height;
  }
  template <typename U>
  bool SameShape(const Image<U>& other) const {
    return SameShape(other.width(), other.height());
  }

  size_t Offset(int x, int y, int c = 0) const {
    return (static_cast<size_t>(y) * width_ + x) * channels_ + c;
  }
  T& at(int x, int y, int c = 0) { return data_[Offset(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data_[Offset(x, y, c)]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& raw() { return data_; }
  const std::vector<T>& raw() const { return data_; }

  void Fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const Image& a, const Image& b) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

using RgbImage = Image<uint8_t>;     // 3 channels
using BoolMask = Image<uint8_t>;     // 1 channel, 0 or 1
using DepthImage = Image<float>;     // 1 channel, meters, 0 = invalid
using LabelImage = Image<int32_t>;   // 1 channel

inline RgbImage MakeRgb(int width, int height) {
  return RgbImage(width, height, 3, 0);
}
inline BoolMask MakeMask(int width, int height, bool fill = false) {
  return BoolMask(width, height, 1, fill ? 1 : 0);
}

inline size_t CountTrue(const BoolMask& mask) {
  size_t n = 0;
  for (uint8_t v : mask.data()) n += v != 0;
  return n;
}

}  // namespace pointscene
