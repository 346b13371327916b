// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
//! \file seeds/phi.hpp
//! Scalar phi-functions and expm1-stable square roots.
#pragma once

#include <span>

namespace seeds
{

inline constexpr int phi_max_order = 8;
inline constexpr double phi_max_abs_h = 50;

/*!
 * phi_k(h), with phi_0 = exp and phi_{k+1}(h) = (phi_k(h) - 1/k!) / h.
 *
 * Throws RangeError for |h| > 50 or non-finite h and DomainError for k
 * outside [0, 8].
 */
double phi(int k, double h);

//! Integral of e^{-lambda} (lambda - lambda_s)^k / k! over [lambda_s, lambda_t].
double weighted_poly_integral(int k, double lambda_s, double lambda_t);

//! sqrt(e^{2a} - e^{2b}) for a >= b, evaluated as e^b sqrt(expm1(2(a-b))).
double sqrt_exp2_diff(double a, double b);

//! Coefficients of z1, z2, z3 in the three-stage terminal noise combination.
struct Expm1Coeffs
{
    double c1;
    double c2;
    double c3;
};

//! sqrt(e^{2h}-e^{2 r2 h}), sqrt(e^{2 r2 h}-e^{2 r1 h}), sqrt(e^{2 r1 h}-1).
Expm1Coeffs seeds3_noise_coeffs(double h, double r1, double r2);

/*!
 * Three-stage terminal noise combination c1 z1 + c2 z2 + c3 z3, written to
 * \c out. Requires 0 < r1 < r2 < 1 (ConfigError otherwise).
 */
void stable_expm1_combination(double h,
                              double r1,
                              double r2,
                              std::span<double const> z1,
                              std::span<double const> z2,
                              std::span<double const> z3,
                              std::span<double> out);

}  // namespace seeds
