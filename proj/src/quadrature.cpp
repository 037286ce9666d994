#include "twophase/quadrature.hpp"

#include <cmath>

namespace twophase::quad {

const std::array<TriPoint, 7>& triangle7() {
  static const std::array<TriPoint, 7> rule = [] {
    const double s15 = std::sqrt(15.0);
    const double a1 = (6.0 - s15) / 21.0, b1 = 1.0 - 2.0 * a1;
    const double a2 = (6.0 + s15) / 21.0, b2 = 1.0 - 2.0 * a2;
    const double w1 = (155.0 - s15) / 1200.0, w2 = (155.0 + s15) / 1200.0;
    return std::array<TriPoint, 7>{{{1.0 / 3, 1.0 / 3, 1.0 / 3, 9.0 / 40.0},
                                    {a1, a1, b1, w1},
                                    {a1, b1, a1, w1},
                                    {b1, a1, a1, w1},
                                    {a2, a2, b2, w2},
                                    {a2, b2, a2, w2},
                                    {b2, a2, a2, w2}}};
  }();
  return rule;
}

const std::array<LinePoint, 3>& gauss3() {
  static const std::array<LinePoint, 3> rule = [] {
    const double r = 0.5 * std::sqrt(3.0 / 5.0);
    return std::array<LinePoint, 3>{{{0.5 - r, 5.0 / 18}, {0.5, 8.0 / 18}, {0.5 + r, 5.0 / 18}}};
  }();
  return rule;
}

const std::array<LinePoint, 5>& gauss5() {
  static const std::array<LinePoint, 5> rule = [] {
    const double x1 = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    const double x2 = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    const double w1 = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
    const double w2 = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
    return std::array<LinePoint, 5>{{{0.5 - 0.5 * x2, 0.5 * w2},
                                     {0.5 - 0.5 * x1, 0.5 * w1},
                                     {0.5, 0.5 * 128.0 / 225.0},
                                     {0.5 + 0.5 * x1, 0.5 * w1},
                                     {0.5 + 0.5 * x2, 0.5 * w2}}};
  }();
  return rule;
}

const std::array<LinePoint, 3>& simpson() {
  static const std::array<LinePoint, 3> rule{{{0.0, 1.0 / 6}, {0.5, 2.0 / 3}, {1.0, 1.0 / 6}}};
  return rule;
}

}  // namespace twophase::quad
