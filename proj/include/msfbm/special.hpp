#pragma once

namespace msfbm {

// gamma(s, x) = int_0^x t^{s-1} e^{-t} dt
double lower_incomplete_gamma(double s, double x);

// Regularized P(s, x) = gamma(s, x) / Gamma(s)
double gamma_p(double s, double x);

// int_0^1 t^{s-1} e^{-x t} dt = x^{-s} gamma(s, x), valid for any real x
// (entire in x; no x^s factor to overflow).
double unit_gamma(double s, double x);

}  // namespace msfbm
