#include "edgewatch/appearance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace edgewatch {

Descriptor Descriptor::normalized(std::span<const double> values) {
  if (values.size() != kDescriptorDim) {
    throw AppearanceError("descriptor must have 128 values, got " + std::to_string(values.size()));
  }
  double sq = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw AppearanceError("descriptor contains a non-finite value");
    sq += v * v;
  }
  if (sq <= 0.0) throw AppearanceError("descriptor has zero norm");
  const double inv = 1.0 / std::sqrt(sq);
  Descriptor d;
  for (std::size_t i = 0; i < kDescriptorDim; ++i) d.values_[i] = values[i] * inv;
  return d;
}

Descriptor Descriptor::from_unit(std::span<const double> values) {
  if (values.size() != kDescriptorDim) {
    throw AppearanceError("descriptor must have 128 values, got " + std::to_string(values.size()));
  }
  double sq = 0.0;
  for (double v : values) sq += v * v;
  if (!std::isfinite(sq) || std::abs(std::sqrt(sq) - 1.0) > 1e-6) {
    throw AppearanceError("descriptor is not unit norm");
  }
  Descriptor d;
  std::copy(values.begin(), values.end(), d.values_.begin());
  return d;
}

Descriptor Descriptor::basis(std::size_t i) {
  Descriptor d;
  d.values_.at(i) = 1.0;
  return d;
}

double Descriptor::dot(const Descriptor& other) const {
  double s = 0.0;
  for (std::size_t i = 0; i < kDescriptorDim; ++i) s += values_[i] * other.values_[i];
  return s;
}

double cosine_distance(const Descriptor& a, const Descriptor& b) {
  return std::clamp(1.0 - a.dot(b), 0.0, 2.0);
}

Gallery::Gallery(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw AppearanceError("gallery capacity must be positive");
}

void Gallery::push(const Descriptor& d) {
  if (entries_.size() == capacity_) entries_.pop_front();
  entries_.push_back(d);
}

double min_cosine_to_gallery(const Gallery& g, const Descriptor& query) {
  if (g.empty()) throw AppearanceError("min_cosine_to_gallery on an empty gallery");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : g.entries()) best = std::min(best, cosine_distance(r, query));
  return best;
}

EncoderSpec parse_encoder_size(const std::string& text, std::string name) {
  const auto sep = text.find_first_of("xX");
  if (sep == std::string::npos) throw AppearanceError("encoder size must look like HxW: " + text);
  EncoderSpec spec;
  spec.name = std::move(name);
  try {
    std::size_t used_h = 0;
    std::size_t used_w = 0;
    spec.input_height = std::stoi(text.substr(0, sep), &used_h);
    spec.input_width = std::stoi(text.substr(sep + 1), &used_w);
    if (used_h != sep || used_w != text.size() - sep - 1) throw std::invalid_argument(text);
  } catch (const std::logic_error&) {
    throw AppearanceError("encoder size must look like HxW: " + text);
  }
  if (spec.input_height <= 0 || spec.input_width <= 0) {
    throw AppearanceError("encoder size must be positive: " + text);
  }
  return spec;
}

namespace {

int hue_bin(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const int mx = std::max({r, g, b});
  const int mn = std::min({r, g, b});
  if (mx == mn) return 0;
  const double c = mx - mn;
  double hue = 0.0;
  if (mx == r) {
    hue = 60.0 * std::fmod((g - b) / c + 6.0, 6.0);
  } else if (mx == g) {
    hue = 60.0 * ((b - r) / c + 2.0);
  } else {
    hue = 60.0 * ((r - g) / c + 4.0);
  }
  return std::clamp(static_cast<int>(hue / 45.0), 0, 7);
}

int intensity_bin(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return std::clamp((static_cast<int>(r) + g + b) / 3 / 32, 0, 7);
}

}  // namespace

HistogramEncoder::HistogramEncoder(int input_height, int input_width)
    : input_height_(input_height), input_width_(input_width) {
  if (input_height_ < kGridRows || input_width_ < kGridCols) {
    throw AppearanceError("encoder input size too small for the 4x2 grid");
  }
}

Descriptor HistogramEncoder::encode(const ImagePatch& patch) const {
  if (patch.width <= 0 || patch.height <= 0 ||
      patch.rgb.size() != static_cast<std::size_t>(patch.width) * patch.height * 3) {
    throw AppearanceError("degenerate image patch");
  }
  std::array<double, kDescriptorDim> hist{};
  for (int y = 0; y < input_height_; ++y) {
    const int sy = y * patch.height / input_height_;
    const int row = y * kGridRows / input_height_;
    for (int x = 0; x < input_width_; ++x) {
      const int sx = x * patch.width / input_width_;
      const int col = x * kGridCols / input_width_;
      const auto [r, g, b] = patch.pixel(sx, sy);
      const std::size_t base = static_cast<std::size_t>(row * kGridCols + col) * 2 * kBins;
      hist[base + hue_bin(r, g, b)] += 1.0;
      hist[base + kBins + intensity_bin(r, g, b)] += 1.0;
    }
  }
  return Descriptor::normalized(hist);
}

std::unique_ptr<Encoder> make_encoder(const EncoderSpec& spec) {
  if (spec.name == "histogram") {
    return std::make_unique<HistogramEncoder>(spec.input_height, spec.input_width);
  }
  throw AppearanceError("unknown encoder: " + spec.name);
}

}  // namespace edgewatch
