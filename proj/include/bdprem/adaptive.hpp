#pragma once

// Auto-optimising proposal scale:
//
//   kappa_{m+1} = kappa_m + (theta_m - pi) / (t(m) + 1)
//
// where theta_m is the cumulative acceptance frequency and t(m) is m or sqrt(m).
// kappa multiplies the proposal variance and is kept inside [1e-8, 1e4].

namespace bdprem {

enum class TTransform { Linear, Sqrt };

struct AdaptiveScale {
  static constexpr double kFloor = 1e-8;
  static constexpr double kCap = 1e4;

  double kappa = 1.0;
  long accept_count = 0;
  long proposal_count = 0;
  double target_pi = 0.3;
  TTransform t_transform = TTransform::Sqrt;

  void record(bool accepted) {
    ++proposal_count;
    if (accepted) ++accept_count;
  }
  double acceptance() const {
    return proposal_count > 0 ? static_cast<double>(accept_count) / proposal_count : 0.0;
  }
};

/// One step of the scale recursion at iteration m >= 1.
AdaptiveScale adapt_scale(AdaptiveScale state, long m);

}  // namespace bdprem
