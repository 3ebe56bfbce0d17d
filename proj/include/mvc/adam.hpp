#pragma once

#include <cstddef>
#include <vector>

#include "mvc/mlp.hpp"

namespace mvc {

/// Adam moment buffers, shape-congruent with the flattened parameters.
struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::size_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const EncoderParams& p) {
    AdamState s;
    s.first_moment.assign(p.param_count(), 0.0);
    s.second_moment.assign(p.param_count(), 0.0);
    return s;
  }
};

/// One Adam update with bias correction, in place.
void adam_step(EncoderParams& params, const ParamGrads& grads, AdamState& state,
               double lr);

/// Step decay: base_lr × 0.1^floor(epoch / 50).
double lr_schedule(std::size_t epoch, double base_lr);

}  // namespace mvc
