#pragma once

#include <cmath>

#include "mixsp/diffkit.hpp"
#include "mixsp/rng.hpp"

namespace mixsp {

/// Symmetric uniform init in ±1/√fan_in.
inline diff::Tensor uniform_init(diff::Shape shape, std::size_t fan_in, Rng& rng,
                                 bool requires_grad = true) {
  auto t = diff::Tensor::zeros(std::move(shape), requires_grad);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.values) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace mixsp
