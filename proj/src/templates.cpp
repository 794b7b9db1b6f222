#include "edgewatch/templates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace edgewatch {

namespace {

double norm(const FeatureVector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

FeatureVector unit(const FeatureVector& v) {
  const double n = norm(v);
  FeatureVector out{};
  if (n > 0.0) {
    for (std::size_t i = 0; i < kFeatureDim; ++i) out[i] = v[i] / n;
  }
  return out;
}

}  // namespace

FeatureVector feature_vector(const MotionFeatures& f, const FeatureScale& scale) {
  const double straightness = f.path_length > 0.0 ? f.net_displacement / f.path_length : 0.0;
  return unit({f.mean_speed / scale.speed_ref, f.speed_std / scale.speed_ref, straightness,
               std::abs(f.winding) / (2.0 * std::numbers::pi),
               f.vertical_amplitude / scale.vertical_ref,
               std::max(0.0, 1.0 - f.confinement_radius / scale.still_radius)});
}

double positive_cosine(const FeatureVector& a, const FeatureVector& b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < kFeatureDim; ++i) dot += a[i] * b[i];
  return std::max(0.0, dot / (na * nb));
}

AnomalyTemplate AnomalyTemplate::make(AnomalyCode code, const FeatureVector& profile) {
  if (norm(profile) == 0.0) throw AnomalyError("template profile must be non-zero");
  return {code, unit(profile)};
}

std::vector<AnomalyTemplate> builtin_templates() {
  return {
      AnomalyTemplate::make(AnomalyCode::kLoiter, {0.0, 0.0, 0.0, 0.0, 0.0, 1.0}),
      AnomalyTemplate::make(AnomalyCode::kFast, {4.0, 0.2, 1.0, 0.0, 0.0, 0.0}),
      AnomalyTemplate::make(AnomalyCode::kCircular, {1.0, 0.0, 0.1, 1.5, 0.0, 0.0}),
      AnomalyTemplate::make(AnomalyCode::kJump, {1.0, 1.0, 0.5, 0.0, 3.0, 0.0}),
  };
}

TemplateMatch match_templates(std::span<const FeatureVector> sequence,
                              std::span<const AnomalyTemplate> pattern,
                              std::span<const std::size_t> shifts) {
  if (pattern.empty()) throw AnomalyError("empty template sequence");
  if (sequence.size() < pattern.size()) {
    throw AnomalyError("feature sequence shorter than the template sequence");
  }
  std::optional<TemplateMatch> best;
  for (std::size_t w : shifts) {
    if (w + pattern.size() > sequence.size()) continue;
    double theta = 0.0;
    for (std::size_t j = 0; j < pattern.size(); ++j) {
      theta += positive_cosine(pattern[j].profile, sequence[w + j]);
    }
    if (!best || theta > best->theta || (theta == best->theta && w < best->shift)) {
      best = TemplateMatch{w, theta};
    }
  }
  if (!best) throw AnomalyError("no admissible template shift");
  return *best;
}

TemplateMatch match_templates(std::span<const FeatureVector> sequence,
                              std::span<const AnomalyTemplate> pattern) {
  if (sequence.size() < pattern.size()) {
    throw AnomalyError("feature sequence shorter than the template sequence");
  }
  std::vector<std::size_t> shifts(sequence.size() - pattern.size() + 1);
  for (std::size_t w = 0; w < shifts.size(); ++w) shifts[w] = w;
  return match_templates(sequence, pattern, shifts);
}

IncrementalTemplateMatcher::IncrementalTemplateMatcher(std::vector<AnomalyTemplate> pattern)
    : pattern_(std::move(pattern)) {
  if (pattern_.empty()) throw AnomalyError("empty template sequence");
}

std::optional<TemplateMatch> IncrementalTemplateMatcher::push(const FeatureVector& v) {
  const std::size_t n = pushed_++;
  open_.push_back({n, 0.0});
  std::optional<TemplateMatch> completed;
  for (auto& s : open_) s.sum += positive_cosine(pattern_[n - s.shift].profile, v);
  if (n + 1 - open_.front().shift == pattern_.size()) {
    completed = TemplateMatch{open_.front().shift, open_.front().sum};
    open_.pop_front();
    if (!best_ || completed->theta > best_->theta) best_ = completed;
  }
  return completed;
}

}  // namespace edgewatch
