#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "edgewatch/anomaly.hpp"

namespace edgewatch {

inline constexpr std::size_t kFeatureDim = 6;
using FeatureVector = std::array<double, kFeatureDim>;

/// Reference magnitudes that make MotionFeatures comparable across scenes.
struct FeatureScale {
  double speed_ref = 2.0;
  double still_radius = 10.0;
  double vertical_ref = 12.0;
};

/// Unit-length vector of
///   [speed / speed_ref, speed_std / speed_ref, net / path, |winding| / 2pi,
///    vertical_amplitude / vertical_ref, max(0, 1 - confinement / still_radius)]
/// or all zeros when every component vanishes.
FeatureVector feature_vector(const MotionFeatures& f, const FeatureScale& scale);

/// max(0, cos(a, b)); zero when either vector is zero.
double positive_cosine(const FeatureVector& a, const FeatureVector& b);

struct AnomalyTemplate {
  AnomalyCode code = AnomalyCode::kLoiter;
  FeatureVector profile{};

  /// Normalises `profile`; throws AnomalyError on a zero profile.
  static AnomalyTemplate make(AnomalyCode code, const FeatureVector& profile);
};

/// Profiles for the single-track classes (loiter, fast, circular, jump).
std::vector<AnomalyTemplate> builtin_templates();

struct TemplateMatch {
  std::size_t shift = 0;
  double theta = 0.0;
};

/// Aligns the template sequence A(0..N-1) with T(w..w+N-1) for every shift w
/// in `shifts` and returns the shift maximising
///   theta(w) = sum_j positive_cosine(A(j), T(w + j)).
/// Shifts that run past the sequence end are ignored; ties keep the earliest
/// shift. Throws AnomalyError when the sequence is shorter than the template
/// sequence or no shift fits.
TemplateMatch match_templates(std::span<const FeatureVector> sequence,
                              std::span<const AnomalyTemplate> pattern,
                              std::span<const std::size_t> shifts);
/// All shifts 0 .. |T| - N.
TemplateMatch match_templates(std::span<const FeatureVector> sequence,
                              std::span<const AnomalyTemplate> pattern);

/// Streaming form of match_templates: every pushed vector opens a new shift
/// and extends the partial sums of the open ones, so a push costs O(N).
class IncrementalTemplateMatcher {
 public:
  explicit IncrementalTemplateMatcher(std::vector<AnomalyTemplate> pattern);

  /// Returns the match of the shift completed by this push, if any.
  std::optional<TemplateMatch> push(const FeatureVector& v);

  std::optional<TemplateMatch> best() const { return best_; }
  std::size_t pushed() const { return pushed_; }
  std::size_t pattern_length() const { return pattern_.size(); }

 private:
  struct OpenShift {
    std::size_t shift;
    double sum;
  };
  std::vector<AnomalyTemplate> pattern_;
  std::deque<OpenShift> open_;
  std::size_t pushed_ = 0;
  std::optional<TemplateMatch> best_;
};

}  // namespace edgewatch
