#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "trajllm/tensor.hpp"

namespace trajllm::testing {

// Central finite differences against the recorded gradient. The forward is
// rebuilt per probe, so `make_loss` must reread the leaf's current data.
//
// f32 storage bounds what FD can resolve: each op output rounds at ~6e-8 of
// its magnitude, so a probe at h=1e-3 carries roughly 1e-4 of absolute noise
// on O(1) values. Tests keep losses and gradients O(1); `floor` switches the
// comparison to an absolute |fd-an| < 1e-3*floor bound for coordinates whose
// gradient sits below that noise-measurable scale.
struct FdReport {
  double max_rel_err = 0.0;
  int checked = 0;
};

inline FdReport fd_check(const std::function<Tensor()>& make_loss, Tensor leaf,
                         float h = 1e-3f, double floor = 0.5) {
  leaf.zero_grad();
  Tensor loss = make_loss();
  backward(loss);
  std::vector<float> analytic(leaf.grad().begin(), leaf.grad().end());

  FdReport report;
  auto data = leaf.mutable_data();
  for (size_t i = 0; i < data.size(); ++i) {
    const float saved = data[i];
    data[i] = saved + h;
    const double f_plus = make_loss().item();
    data[i] = saved - h;
    const double f_minus = make_loss().item();
    data[i] = saved;
    const double fd = (f_plus - f_minus) / (2.0 * h);
    const double an = analytic[i];
    const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), floor});
    report.max_rel_err = std::max(report.max_rel_err, rel);
    ++report.checked;
  }
  return report;
}

// Same probe for a single coordinate of a larger graph (used by the
// end-to-end check, which samples coordinates instead of sweeping them all).
inline double fd_coordinate(const std::function<Tensor()>& make_loss, Tensor leaf,
                            size_t index, double analytic, float h = 1e-3f,
                            double floor = 5e-2) {
  auto data = leaf.mutable_data();
  const float saved = data[index];
  data[index] = saved + h;
  const double f_plus = make_loss().item();
  data[index] = saved - h;
  const double f_minus = make_loss().item();
  data[index] = saved;
  const double fd = (f_plus - f_minus) / (2.0 * h);
  return std::abs(fd - analytic) /
         std::max({std::abs(fd), std::abs(analytic), floor});
}

inline Tensor random_uniform(Shape shape, Rng& rng, float lo, float hi,
                             bool requires_grad = false) {
  std::vector<float> data(static_cast<size_t>(shape_numel(shape)));
  for (auto& v : data) v = rng.uniform(lo, hi);
  return Tensor::from_data(std::move(shape), std::move(data), requires_grad);
}

// random +-[0.5, 1.5] weights: keeps reduction gradients O(1) and the loss
// value small (signs cancel), which is where f32 FD is accurate
inline Tensor random_signed_weights(Shape shape, Rng& rng) {
  std::vector<float> data(static_cast<size_t>(shape_numel(shape)));
  for (auto& v : data) {
    const float mag = rng.uniform(0.5f, 1.5f);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return Tensor::from_data(std::move(shape), std::move(data));
}

}  // namespace trajllm::testing
