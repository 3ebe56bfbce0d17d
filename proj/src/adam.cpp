#include "mvc/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace mvc {

void adam_step(EncoderParams& params, const ParamGrads& grads, AdamState& state,
               double lr) {
  const std::size_t n = params.param_count();
  if (state.first_moment.size() != n || state.second_moment.size() != n)
    throw std::invalid_argument("adam_step: state size mismatch");
  const std::vector<double> g = grads.flatten();
  if (g.size() != n)
    throw std::invalid_argument("adam_step: gradient shape mismatch");

  state.step_count += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));

  std::size_t idx = 0;
  params.for_each([&](double& p) {
    const double gi = g[idx];
    double& m = state.first_moment[idx];
    double& v = state.second_moment[idx];
    m = b1 * m + (1.0 - b1) * gi;
    v = b2 * v + (1.0 - b2) * gi * gi;
    p -= lr * (m / corr1) / (std::sqrt(v / corr2) + state.epsilon);
    ++idx;
  });
}

double lr_schedule(std::size_t epoch, double base_lr) {
  return base_lr * std::pow(0.1, static_cast<double>(epoch / 50));
}

}  // namespace mvc
