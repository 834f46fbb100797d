#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cgfbound/error.hpp"

namespace cgfbound {

/// Union-bound correction Xi = pi^2 (1 + min{n L_hat, KL})^2 / 3, valid for
/// any value of the training loss and KL divergence.
inline double correction_xi(double n_times_trainloss, double kl) {
  require(n_times_trainloss >= 0.0 && kl >= 0.0, ErrorCode::domain,
          "correction_xi: arguments must be nonnegative");
  double m = 1.0 + std::min(n_times_trainloss, kl);
  return std::numbers::pi * std::numbers::pi * m * m / 3.0;
}

/// Correction 2 e ceil(u) under KL <= u or n L_hat <= u.
inline double correction_two_e_ceil(double u_value) {
  require(u_value >= 0.0, ErrorCode::domain, "correction_two_e_ceil: u must be nonnegative");
  // ceil(0) = 0 would make ln(iota) = -inf; a zero u still costs one bin.
  return 2.0 * std::numbers::e * std::max(1.0, std::ceil(u_value));
}

}  // namespace cgfbound
