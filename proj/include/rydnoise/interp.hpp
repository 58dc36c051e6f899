#pragma once
// Monotone cubic (PCHIP, Fritsch-Carlson) interpolation.  Used wherever a
// sampled, shape-preserving curve is evaluated repeatedly: spectrum tables
// and the crossover scaling-function table.  Monotone data stays monotone,
// which the table consumers rely on.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace rydnoise {

class PchipInterpolant {
 public:
  PchipInterpolant() = default;

  PchipInterpolant(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
      throw std::invalid_argument("pchip: need >= 2 nodes, matching sizes");
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (!(x_[i] < x_[i + 1]))
        throw std::invalid_argument("pchip: abscissae must be increasing");

    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    d_.assign(n, 0.0);
    if (n == 2) {
      d_[0] = d_[1] = delta[0];
    } else {
      for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] > 0.0) {
          const double w1 = 2.0 * h[i] + h[i - 1];
          const double w2 = h[i] + 2.0 * h[i - 1];
          d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
      }
      d_[0] = endpoint(h[0], h[1], delta[0], delta[1]);
      d_[n - 1] = endpoint(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    }
  }

  double operator()(double xq) const {
    const std::size_t n = x_.size();
    if (xq <= x_.front()) return extrapolate(0, xq);
    if (xq >= x_.back()) return extrapolate(n - 2, xq);
    const auto it = std::upper_bound(x_.begin(), x_.end(), xq);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    return hermite(i, xq);
  }

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

 private:
  // Three-point one-sided derivative with the standard monotonicity clamps.
  static double endpoint(double h0, double h1, double del0, double del1) {
    double d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if (d * del0 <= 0.0)
      d = 0.0;
    else if (del0 * del1 < 0.0 && std::abs(d) > 3.0 * std::abs(del0))
      d = 3.0 * del0;
    return d;
  }

  double hermite(std::size_t i, double xq) const {
    const double h = x_[i + 1] - x_[i];
    const double t = (xq - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * y_[i] + h * h10 * d_[i] + h01 * y_[i + 1] + h * h11 * d_[i + 1];
  }

  // Linear continuation with the boundary derivative; callers that need a
  // physical tail law handle out-of-range themselves.
  double extrapolate(std::size_t i, double xq) const {
    const std::size_t j = (i == 0) ? 0 : i + 1;
    return y_[j] + d_[j] * (xq - x_[j]);
  }

  std::vector<double> x_, y_, d_;
};

}  // namespace rydnoise
