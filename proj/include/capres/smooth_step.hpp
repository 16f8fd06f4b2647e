#pragma once

namespace capres {

/// C-infinity step s(t) = e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)}) on (0,1),
/// 0 for t <= 0 and 1 for t >= 1, with closed-form derivatives.
struct SmoothStep {
  static double value(double t);
  static double d1(double t);
  static double d2(double t);
};

}  // namespace capres
