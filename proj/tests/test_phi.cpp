// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "seeds/error.hpp"
#include "seeds/phi.hpp"

using namespace seeds;
using oracle::Real;
using oracle::rel_err;

namespace
{
double factorial(int k)
{
    double f = 1;
    for (int i = 2; i <= k; ++i)
    {
        f *= i;
    }
    return f;
}

// phi_k(h) = int_0^1 e^{(1 - u) h} u^{k-1} / (k-1)! du
double phi_quadrature(int k, double h)
{
    auto f = [&](double u) {
        return std::exp((1 - u) * h) * std::pow(u, k - 1) / factorial(k - 1);
    };
    return boost::math::quadrature::gauss<double, 64>::integrate(f, 0.0, 1.0);
}

// Upward recursion in 50 digits; for tiny h the Taylor series instead
double phi_reference(int k, double h)
{
    Real const x(h);
    if (std::fabs(h) < 1e-3)
    {
        Real sum = 0, term = 1;
        for (int j = 1; j <= k; ++j)
        {
            term /= j;
        }
        for (int n = 0; n < 40; ++n)
        {
            sum += term;
            term *= x / (n + k + 1);
        }
        return sum.convert_to<double>();
    }
    Real value = exp(x);
    Real inv_fact = 1;
    for (int j = 0; j < k; ++j)
    {
        value = (value - inv_fact) / x;
        inv_fact /= (j + 1);
    }
    return value.convert_to<double>();
}
}  // namespace

TEST_SUITE("phi")
{
    TEST_CASE("closed forms")
    {
        CHECK(rel_err(phi(1, 1.0), std::numbers::e - 1) < 1e-15);
        CHECK(phi(2, 0.0) == doctest::Approx(0.5).epsilon(1e-16));
        for (int k = 0; k <= phi_max_order; ++k)
        {
            CHECK(rel_err(phi(k, 0.0), 1 / factorial(k)) < 1e-15);
        }
        CHECK(rel_err(phi(0, 2.0), std::exp(2.0)) < 1e-15);
    }

    TEST_CASE("phi_3(0.1) against 64-point Gauss-Legendre")
    {
        CHECK(rel_err(phi(3, 0.1), phi_quadrature(3, 0.1)) < 1e-12);
    }

    TEST_CASE("agreement with quadrature over orders and steps")
    {
        for (int k = 1; k <= phi_max_order; ++k)
        {
            for (double h : {-3.0, -0.7, -1e-3, 1e-3, 0.25, 1.0, 4.0})
            {
                CHECK_MESSAGE(rel_err(phi(k, h), phi_quadrature(k, h)) < 1e-12, "k=", k,
                              " h=", h);
            }
        }
    }

    TEST_CASE("agreement with 50-digit reference on both sides of the series switch")
    {
        std::vector<double> hs = {1e-12, -1e-12, 1e-8, 1e-5, -1e-4, 0.01, -0.5, 2.0,
                                  -4.999,  4.999, 5.0,  5.001, -5.001, 7.5, -12.0,
                                  20.0,    -35.0, 49.9, -50.0};
        for (int k = 0; k <= phi_max_order; ++k)
        {
            for (double h : hs)
            {
                CHECK_MESSAGE(rel_err(phi(k, h), phi_reference(k, h)) < 1e-12, "k=", k,
                              " h=", h);
            }
        }
    }

    TEST_CASE("recursion phi_k = h phi_{k+1} + 1/k!")
    {
        for (int k = 0; k < phi_max_order; ++k)
        {
            for (double h : {-50.0, -5.0, -1.0, -1e-6, 1e-6, 0.3, 5.0, 30.0})
            {
                double const lhs = h * phi(k + 1, h) + 1 / factorial(k);
                double const rhs = phi(k, h);
                CHECK(std::fabs(lhs - rhs) <= 1e-12 * std::max(1.0, std::fabs(rhs)));
            }
        }
    }

    TEST_CASE("continuity across the series switch")
    {
        for (int k = 1; k <= phi_max_order; ++k)
        {
            double const below = phi(k, std::nextafter(5.0, 0.0));
            double const above = phi(k, std::nextafter(5.0, 10.0));
            CHECK(rel_err(below, above) < 1e-13);
        }
    }

    TEST_CASE("argument checks")
    {
        CHECK_THROWS_AS(phi(-1, 0.1), DomainError);
        CHECK_THROWS_AS(phi(9, 0.1), DomainError);
        CHECK_THROWS_AS(phi(1, 50.5), RangeError);
        CHECK_THROWS_AS(phi(1, -51.0), RangeError);
        CHECK_THROWS_AS(phi(1, std::nan("")), RangeError);
        CHECK_THROWS_AS(phi(1, INFINITY), RangeError);
    }

    TEST_CASE("weighted polynomial integral")
    {
        CHECK(rel_err(weighted_poly_integral(0, 0.0, std::log(2.0)), 0.5) < 1e-15);
        for (auto [ls, lt] : {std::pair{-2.0, 1.0}, {0.3, 0.31}, {4.0, 9.0}})
        {
            double const h = lt - ls;
            double const sigma_t = std::exp(-lt);
            CHECK(rel_err(weighted_poly_integral(0, ls, lt), sigma_t * std::expm1(h)) < 1e-14);
        }
        auto integrand = [](int k, double ls) {
            return [k, ls](double l) {
                return std::exp(-l) * std::pow(l - ls, k) / factorial(k);
            };
        };
        double const want = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            integrand(2, -1.0), -1.0, 0.5, 15, 1e-15);
        CHECK(rel_err(weighted_poly_integral(2, -1.0, 0.5), want) < 1e-11);
        for (int k = 0; k <= 4; ++k)
        {
            double const w = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                integrand(k, 0.7), 0.7, 2.2, 15, 1e-15);
            CHECK(rel_err(weighted_poly_integral(k, 0.7, 2.2), w) < 1e-11);
        }
    }

    TEST_CASE("sqrt of exponential differences")
    {
        CHECK(sqrt_exp2_diff(0.0, 0.0) == 0.0);
        CHECK(sqrt_exp2_diff(-1.0, 0.0) == 0.0);
        CHECK(rel_err(sqrt_exp2_diff(1.0, 0.5), std::sqrt(std::exp(2.0) - std::exp(1.0)))
              < 1e-15);
        // a - b = 1e-12 loses every digit in the naive difference
        double const b_near = 3.0 - 1e-12;
        Real const a(3.0), b(b_near);
        double const want = sqrt(exp(2 * a) - exp(2 * b)).convert_to<double>();
        CHECK(rel_err(sqrt_exp2_diff(3.0, b_near), want) < 1e-14);
        CHECK(rel_err(sqrt_exp2_diff(1e-12, 0.0), std::sqrt(2e-12)) < 1e-11);
    }

    TEST_CASE("three-stage noise combination")
    {
        std::vector<double> z1 = {1.0}, z2 = {0.0}, z3 = {0.0}, out(1);
        stable_expm1_combination(1.0, 1.0 / 3, 2.0 / 3, z1, z2, z3, out);
        double const naive = std::sqrt(std::exp(2.0) - std::exp(4.0 / 3));
        CHECK(rel_err(out[0], naive) < 1e-14);
        CHECK(std::fabs(out[0] - 1.89615) < 5e-6);

        std::vector<double> ones = {1.0, -2.0};
        std::vector<double> res(2);
        stable_expm1_combination(0.0, 0.25, 0.5, ones, ones, ones, res);
        CHECK(res[0] == 0.0);
        CHECK(res[1] == 0.0);

        // h = 1e-10 against the combination evaluated in 50 digits
        std::vector<double> u = {1.0}, tiny(1);
        double const h = 1e-10, r1 = 1.0 / 3, r2 = 2.0 / 3;
        stable_expm1_combination(h, r1, r2, u, u, u, tiny);
        Real const H(h), R1(r1), R2(r2);
        Real const want = sqrt(exp(2 * H) - exp(2 * R2 * H))
                          + sqrt(exp(2 * R2 * H) - exp(2 * R1 * H))
                          + sqrt(exp(2 * R1 * H) - 1);
        CHECK(rel_err(tiny[0], want.convert_to<double>()) < 1e-8);

        CHECK_THROWS_AS(stable_expm1_combination(1.0, 0.5, 0.5, u, u, u, tiny), ConfigError);
        CHECK_THROWS_AS(stable_expm1_combination(1.0, 0.0, 0.5, u, u, u, tiny), ConfigError);
        CHECK_THROWS_AS(stable_expm1_combination(1.0, 0.2, 1.0, u, u, u, tiny), ConfigError);
    }

    TEST_CASE("three-stage coefficients telescope to e^{2h} - 1")
    {
        for (double h : {1e-10, 1e-4, 0.1, 1.0, 5.0, 20.0})
        {
            auto const c = seeds3_noise_coeffs(h, 1.0 / 3, 2.0 / 3);
            double const total = c.c1 * c.c1 + c.c2 * c.c2 + c.c3 * c.c3;
            CHECK(rel_err(total, std::expm1(2 * h)) < 1e-14);
        }
    }

    TEST_CASE("stable expm1 identities")
    {
        // sqrt(e^{2h} - e^h) + sqrt(e^h - 1) = sqrt(e^h - 1)(e^{h/2} + 1)
        for (double h : {1e-10, 1e-6, 1e-3, 0.1, 1.0, 5.0})
        {
            Real const H(h);
            double const want
                = (sqrt(exp(2 * H) - exp(H)) + sqrt(exp(H) - 1)).convert_to<double>();
            double const split = sqrt_exp2_diff(h, 0.5 * h) + sqrt_exp2_diff(0.5 * h, 0.0);
            double const fused = std::sqrt(std::expm1(h)) * (std::exp(0.5 * h) + 1);
            CHECK(rel_err(split, want) < 1e-14);
            CHECK(rel_err(fused, want) < 1e-14);
            // e^h - 1 and 1 - e^{-h} forms of the single-step variances
            Real const ref_np = exp(2 * H) - 1, ref_dp = 1 - exp(-2 * H);
            CHECK(rel_err(std::expm1(2 * h), ref_np.convert_to<double>()) < 1e-14);
            CHECK(rel_err(-std::expm1(-2 * h), ref_dp.convert_to<double>()) < 1e-14);
        }
    }
}
