#pragma once

// Shared experiment data used across test suites: the three initial data the
// experiments run on, each on the symmetric interval [-1/2, 1/2].

#include <cmath>

#include "priceform/forward.hpp"
#include "priceform/mesh.hpp"

namespace fixtures {

inline constexpr double kHalfWidth = 0.5;
inline constexpr double kJump = 0.05;

inline double cubic1(double x) {
  return (x + 0.75) * (x - 0.65) * (x - 0.05);
}
inline constexpr double kCubic1Price = 0.05;

inline double cubic2(double x) {
  return (x + 0.75) * (x - 0.65) * (x + 0.05);
}
inline constexpr double kCubic2Price = -0.05;

inline double symmetric(double x) { return -std::sin(2.0 * M_PI * x); }
inline constexpr double kSymmetricPrice = 0.0;

inline priceform::NodalField cubic1_field(int n_cells) {
  return priceform::sample_field(
      priceform::build_uniform_grid(kHalfWidth, n_cells), cubic1);
}

inline priceform::NodalField cubic2_field(int n_cells) {
  return priceform::sample_field(
      priceform::build_uniform_grid(kHalfWidth, n_cells), cubic2);
}

inline priceform::NodalField symmetric_field(int n_cells) {
  return priceform::sample_field(
      priceform::build_uniform_grid(kHalfWidth, n_cells), symmetric);
}

inline priceform::TransformSpec cubic1_spec() {
  return priceform::make_transform_spec(kJump, kCubic1Price, kHalfWidth);
}

inline priceform::TransformSpec cubic2_spec() {
  return priceform::make_transform_spec(kJump, kCubic2Price, kHalfWidth);
}

inline priceform::TransformSpec symmetric_spec() {
  return priceform::make_transform_spec(kJump, kSymmetricPrice, kHalfWidth);
}

}  // namespace fixtures
