#pragma once

#include <functional>
#include <span>

namespace lil::quad {

using Integrand = std::function<double(double)>;

/// Adaptive 15-point Gauss-Kronrod on [a, b].
double integrate(const Integrand& f, double a, double b, double rel_tol = 1e-12);

/// Sum of adaptive integrals over consecutive intervals [breaks[i], breaks[i+1]].
double integrate_pieces(const Integrand& f, std::span<const double> breaks,
                        double rel_tol = 1e-12);

/// ln of the integral of exp(g) over [a, b].
///
/// `features` are points where g may have a peak narrower than any fixed
/// sampling would see; each gets geometrically refined breakpoints around it.
/// Returns -inf when g is -inf on the whole interval.
double log_integral_exp(const Integrand& g, double a, double b,
                        std::span<const double> features = {}, double rel_tol = 1e-9);

/// ln(exp(a) + exp(b)) without overflow.
double log_add(double a, double b);

}  // namespace lil::quad
