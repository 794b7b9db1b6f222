#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace edgewatch {

inline constexpr std::size_t kDescriptorDim = 128;

class AppearanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 128-d appearance embedding with unit Euclidean norm.
class Descriptor {
 public:
  using Values = std::array<double, kDescriptorDim>;

  /// Scales `values` to unit length. Throws on zero or non-finite input.
  static Descriptor normalized(std::span<const double> values);
  /// Accepts values already at unit norm (within 1e-6), throws otherwise.
  static Descriptor from_unit(std::span<const double> values);
  /// Standard basis vector e_i.
  static Descriptor basis(std::size_t i);

  const Values& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double dot(const Descriptor& other) const;

  bool operator==(const Descriptor&) const = default;

 private:
  Descriptor() = default;
  Values values_{};
};

/// 1 - a.b for unit vectors, in [0, 2].
double cosine_distance(const Descriptor& a, const Descriptor& b);

/// Bounded FIFO set of recent descriptors for one track.
class Gallery {
 public:
  static constexpr std::size_t kDefaultCapacity = 100;

  explicit Gallery(std::size_t capacity = kDefaultCapacity);

  /// Appends, evicting the oldest entry once capacity is reached.
  void push(const Descriptor& d);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const std::deque<Descriptor>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<Descriptor> entries_;
};

/// Minimum cosine distance between `query` and any gallery entry.
/// Throws AppearanceError on an empty gallery.
double min_cosine_to_gallery(const Gallery& g, const Descriptor& query);

// Interleaved 8-bit RGB, row-major.
struct ImagePatch {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  std::array<std::uint8_t, 3> pixel(int x, int y) const {
    const auto i = static_cast<std::size_t>((y * width + x) * 3);
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
};

struct EncoderSpec {
  std::string name = "histogram";
  int input_height = 64;
  int input_width = 32;
};

/// Parses "HxW", e.g. "64x32".
EncoderSpec parse_encoder_size(const std::string& text, std::string name = "histogram");

class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual Descriptor encode(const ImagePatch& patch) const = 0;
};

/// Colour-histogram encoder. The patch is resampled (nearest neighbour) to
/// the configured input size and split into a 4x2 grid of cells. Each cell
/// contributes an 8-bin hue histogram and an 8-bin intensity histogram:
///   hue bin       = floor(hue_degrees / 45), achromatic pixels go to bin 0
///   intensity bin = floor(((r + g + b) / 3) / 32)
/// Layout is cell-major (row, then column), hue bins before intensity bins.
/// The concatenated 128 counts are L2-normalised.
class HistogramEncoder final : public Encoder {
 public:
  static constexpr int kGridRows = 4;
  static constexpr int kGridCols = 2;
  static constexpr int kBins = 8;

  HistogramEncoder(int input_height, int input_width);
  Descriptor encode(const ImagePatch& patch) const override;

 private:
  int input_height_;
  int input_width_;
};

/// Looks up a registered encoder by name. Throws AppearanceError for unknown
/// names or non-positive input sizes.
std::unique_ptr<Encoder> make_encoder(const EncoderSpec& spec);

}  // namespace edgewatch
