#include "bdprem/adaptive.hpp"

#include <algorithm>
#include <cmath>

namespace bdprem {

AdaptiveScale adapt_scale(AdaptiveScale state, long m) {
  if (m < 1 || state.proposal_count == 0) return state;
  const double theta = state.acceptance();
  const double t = state.t_transform == TTransform::Sqrt ? std::sqrt(static_cast<double>(m))
                                                         : static_cast<double>(m);
  state.kappa = std::clamp(state.kappa + (theta - state.target_pi) / (t + 1.0),
                           AdaptiveScale::kFloor, AdaptiveScale::kCap);
  return state;
}

}  // namespace bdprem
