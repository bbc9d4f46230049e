#pragma once

// Central finite-difference oracle for the model gradient. Kept separate from
// the library so it never shares code with backward().

#include <algorithm>
#include <cmath>
#include <string>

#include "adaptmt/model.hpp"

namespace adaptmt::testing {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t checked = 0;
};

// Relative error |a - n| / max(|a|, |n|, floor). The floor keeps entries whose
// true value is ~0 from dividing finite-difference noise by nothing.
inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline GradCheckReport gradient_check(ModelParameters params, const IdSequence& x, const IdSequence& y,
                                      double smoothing, double step = 1e-4, double floor = 1e-6) {
  auto analytic = loss_and_gradient(params, x, y, smoothing).second;
  GradCheckReport report;
  params.weights.zip(analytic, [&](std::string_view name, auto& tensor, const auto& grad) {
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      const double saved = tensor.data()[i];
      tensor.data()[i] = saved + step;
      const double up = loss(params, x, y, smoothing).loss;
      tensor.data()[i] = saved - step;
      const double down = loss(params, x, y, smoothing).loss;
      tensor.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = relative_error(grad.data()[i], numeric, floor);
      ++report.checked;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_tensor = std::string(name) + "[" + std::to_string(i) + "]";
      }
    }
  });
  return report;
}

}  // namespace adaptmt::testing
