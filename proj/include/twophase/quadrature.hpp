#pragma once

#include <array>

namespace twophase::quad {

struct TriPoint {
  double l0, l1, l2;
  double w;  // weights sum to 1
};

/// 7-point rule on the reference triangle, exact for degree 5.
const std::array<TriPoint, 7>& triangle7();

struct LinePoint {
  double s;  // in [0,1]
  double w;  // weights sum to 1
};

const std::array<LinePoint, 3>& gauss3();
const std::array<LinePoint, 5>& gauss5();

/// Simpson rule on [0,1]: endpoints 1/6, midpoint 2/3.
const std::array<LinePoint, 3>& simpson();

}  // namespace twophase::quad
