#pragma once

#include <cmath>

namespace qut {

// A real number stored as mantissa * exp(log_scale). Nonzero values keep
// |mantissa| in [1, 2) so products of huge or tiny factors never overflow.
struct ScaledReal {
  double mantissa = 0.0;
  double log_scale = 0.0;

  static ScaledReal from_log(double sign, double log_magnitude) {
    if (sign == 0.0 || (std::isinf(log_magnitude) && log_magnitude < 0)) return {};
    constexpr double ln2 = 0.69314718055994530942;
    const double octaves = std::floor(log_magnitude / ln2);
    const double log_scale = octaves * ln2;
    double m = std::exp(log_magnitude - log_scale);
    // exp rounding can land exactly on 2.
    if (m >= 2.0) return {std::copysign(m / 2.0, sign), log_scale + ln2};
    return {std::copysign(m, sign), log_scale};
  }

  static ScaledReal from_double(double x) {
    if (x == 0.0) return {};
    return from_log(x, std::log(std::fabs(x)));
  }

  double value() const { return mantissa == 0.0 ? 0.0 : mantissa * std::exp(log_scale); }

  // Value multiplied by exp(-log_ref); finite as long as the result is.
  double relative_to(double log_ref) const {
    return mantissa == 0.0 ? 0.0 : mantissa * std::exp(log_scale - log_ref);
  }

  double log_abs() const { return std::log(std::fabs(mantissa)) + log_scale; }
};

}  // namespace qut
