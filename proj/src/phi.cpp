// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
#include "seeds/phi.hpp"

#include <cmath>
#include <string>

#include "seeds/error.hpp"

namespace seeds
{
namespace
{
// Below this magnitude the power series is cheaper and more accurate than
// the upward recursion, which amplifies rounding by roughly k/|h| per level.
constexpr double series_radius = 5;
constexpr int max_series_terms = 80;

double inv_factorial(int k)
{
    double r = 1;
    for (int j = 2; j <= k; ++j)
    {
        r /= j;
    }
    return r;
}

double phi_series(int k, double h)
{
    double term = inv_factorial(k);
    double sum = term;
    for (int j = 1; j < max_series_terms; ++j)
    {
        term *= h / (k + j);
        sum += term;
        if (std::fabs(term) <= 1e-18 * std::fabs(sum))
        {
            break;
        }
    }
    return sum;
}
}  // namespace

double phi(int k, double h)
{
    if (k < 0 || k > phi_max_order)
    {
        throw DomainError("phi order " + std::to_string(k)
                          + " outside [0, 8]");
    }
    if (!std::isfinite(h) || std::fabs(h) > phi_max_abs_h)
    {
        throw RangeError("phi argument " + std::to_string(h)
                         + " exceeds |h| <= 50");
    }
    if (k == 0)
    {
        return std::exp(h);
    }
    if (h == 0)
    {
        return inv_factorial(k);
    }
    if (k == 1)
    {
        return std::expm1(h) / h;
    }
    if (std::fabs(h) <= series_radius)
    {
        return phi_series(k, h);
    }
    double result = std::expm1(h) / h;
    double fact = 1;
    for (int j = 1; j < k; ++j)
    {
        result = (result - fact) / h;
        fact /= (j + 1);
    }
    return result;
}

double weighted_poly_integral(int k, double lambda_s, double lambda_t)
{
    double const h = lambda_t - lambda_s;
    return std::exp(-lambda_t) * std::pow(h, k + 1) * phi(k + 1, h);
}

double sqrt_exp2_diff(double a, double b)
{
    if (a <= b)
    {
        return 0;
    }
    return std::exp(b) * std::sqrt(std::expm1(2 * (a - b)));
}

Expm1Coeffs seeds3_noise_coeffs(double h, double r1, double r2)
{
    return {sqrt_exp2_diff(h, r2 * h),
            sqrt_exp2_diff(r2 * h, r1 * h),
            sqrt_exp2_diff(r1 * h, 0)};
}

void stable_expm1_combination(double h,
                              double r1,
                              double r2,
                              std::span<double const> z1,
                              std::span<double const> z2,
                              std::span<double const> z3,
                              std::span<double> out)
{
    if (!(0 < r1 && r1 < r2 && r2 < 1))
    {
        throw ConfigError("stage fractions must satisfy 0 < r1 < r2 < 1");
    }
    auto const c = seeds3_noise_coeffs(h, r1, r2);
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        out[i] = c.c1 * z1[i] + c.c2 * z2[i] + c.c3 * z3[i];
    }
}

}  // namespace seeds
