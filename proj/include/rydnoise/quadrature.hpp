#pragma once
// Small fixed-order Gauss-Legendre panel quadrature used throughout the
// numerics.  Sixteen points per panel is plenty for the smooth integrands we
// feed it; accuracy is controlled by panel placement, not order.

#include <array>
#include <cstddef>

namespace rydnoise {

// Abscissae/weights for the positive half of the 16-point Gauss-Legendre
// rule on [-1, 1]; nodes are symmetric about 0.
inline constexpr std::array<double, 8> gl16_x = {
    0.09501250983763744019, 0.28160355077925891323,
    0.45801677765722738634, 0.61787624440264374845,
    0.75540440835500303390, 0.86563120238783174388,
    0.94457502307323257608, 0.98940093499164993260,
};
inline constexpr std::array<double, 8> gl16_w = {
    0.18945061045506849629, 0.18260341504492358887,
    0.16915651939500253819, 0.14959598881657673208,
    0.12462897125553387205, 0.09515851168249278481,
    0.06225352393864789286, 0.02715245941175409485,
};

// Integrate f over [a, b] with one 16-point panel.
template <typename F>
double gl16(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    acc += gl16_w[i] * (f(mid + half * gl16_x[i]) + f(mid - half * gl16_x[i]));
  }
  return acc * half;
}

// Integrate f over consecutive panels [edges[0], edges[1]], [edges[1], ...].
template <typename F, typename Edges>
double gl16_panels(F&& f, const Edges& edges) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < std::size(edges); ++i)
    acc += gl16(f, edges[i], edges[i + 1]);
  return acc;
}

}  // namespace rydnoise
