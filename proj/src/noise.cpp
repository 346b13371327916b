// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
#include "seeds/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "seeds/error.hpp"
#include "seeds/phi.hpp"

namespace seeds
{
namespace
{
constexpr std::uint32_t philox_m0 = 0xD2511F53u;
constexpr std::uint32_t philox_m1 = 0xCD9E8D57u;
constexpr std::uint32_t philox_w0 = 0x9E3779B9u;
constexpr std::uint32_t philox_w1 = 0xBB67AE85u;

void mulhilo(std::uint32_t a,
             std::uint32_t b,
             std::uint32_t& hi,
             std::uint32_t& lo)
{
    std::uint64_t const p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

double to_unit(std::uint32_t hi, std::uint32_t lo)
{
    std::uint64_t const bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    // 53 random bits, offset by half an ulp so the result is never 0 or 1
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1p-53;
}

void check_positive_step(double h)
{
    if (!(h > 0))
    {
        throw DomainError("step in lambda must be positive");
    }
}
}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key)
{
    for (int round = 0; round < 10; ++round)
    {
        if (round > 0)
        {
            key[0] += philox_w0;
            key[1] += philox_w1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(philox_m0, ctr[0], hi0, lo0);
        mulhilo(philox_m1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

RngStream::RngStream(std::uint64_t seed,
                     std::uint32_t path,
                     std::uint32_t step,
                     std::uint32_t stage)
    : key_{static_cast<std::uint32_t>(seed),
           static_cast<std::uint32_t>(seed >> 32)}
    , ctr_{0, stage, step, path}
{
}

std::array<double, 2> RngStream::next_uniforms()
{
    auto const r = philox4x32_10(ctr_, key_);
    ++ctr_[0];
    return {to_unit(r[0], r[1]), to_unit(r[2], r[3])};
}

void RngStream::gauss(std::span<double> out)
{
    for (std::size_t i = 0; i < out.size(); i += 2)
    {
        auto const [u1, u2] = this->next_uniforms();
        double const radius = std::sqrt(-2 * std::log(u1));
        double const angle = 2 * std::numbers::pi * u2;
        out[i] = radius * std::cos(angle);
        if (i + 1 < out.size())
        {
            out[i + 1] = radius * std::sin(angle);
        }
    }
}

std::vector<double> RngStream::gauss(std::size_t d)
{
    std::vector<double> out(d);
    this->gauss(std::span<double>(out));
    return out;
}

double RngStream::uniform()
{
    return this->next_uniforms()[0];
}

void KeyedStepNoise::normal(int stage, std::span<double> out)
{
    RngStream(seed_, path_, step_, static_cast<std::uint32_t>(stage))
        .gauss(out);
}

void ZeroStepNoise::normal(int, std::span<double> out)
{
    std::fill(out.begin(), out.end(), 0.0);
}

double weighted_increment_std(double sigma_bar_t, double h, IncrementKind kind)
{
    check_positive_step(h);
    if (kind == IncrementKind::noise_pred)
    {
        return sigma_bar_t * std::sqrt(std::expm1(2 * h));
    }
    return sigma_bar_t * std::sqrt(-std::expm1(-2 * h));
}

double ito_variance(double lambda_s, double lambda_t)
{
    double const d = sqrt_exp2_diff(-lambda_s, -lambda_t);
    return 0.5 * d * d;
}

Seeds2Noise staged_noise_seeds2(StepNoise& noise,
                                double scale_mid,
                                double scale_t,
                                double h,
                                std::size_t d)
{
    check_positive_step(h);
    std::vector<double> z1(d), z2(d);
    noise.normal(stage::z1, z1);
    noise.normal(stage::z2, z2);
    // sqrt(e^{2h} - e^h) z1 + sqrt(e^h - 1) z2 = sqrt(e^h - 1)(e^{h/2} z1 + z2)
    double const root = std::sqrt(std::expm1(h));
    double const half = std::exp(0.5 * h);
    Seeds2Noise result{std::vector<double>(d), std::vector<double>(d)};
    for (std::size_t i = 0; i < d; ++i)
    {
        result.mid[i] = scale_mid * root * z1[i];
        result.full[i] = scale_t * root * (half * z1[i] + z2[i]);
    }
    return result;
}

Seeds3Noise staged_noise_seeds3(StepNoise& noise,
                                double scale_s1,
                                double scale_s2,
                                double scale_t,
                                double h,
                                double r1,
                                double r2,
                                std::size_t d)
{
    if (!(0 < r1 && r1 < r2 && r2 < 1))
    {
        throw ConfigError("stage fractions must satisfy 0 < r1 < r2 < 1");
    }
    check_positive_step(h);
    std::vector<double> z1(d), z2(d), z3(d);
    noise.normal(stage::z1, z1);
    noise.normal(stage::z2, z2);
    noise.normal(stage::z3, z3);
    double const n1 = sqrt_exp2_diff(r1 * h, 0);
    double const a1 = sqrt_exp2_diff(r2 * h, r1 * h);
    Seeds3Noise result{std::vector<double>(d), std::vector<double>(d),
                       std::vector<double>(d)};
    stable_expm1_combination(h, r1, r2, z1, z2, z3, result.b);
    for (std::size_t i = 0; i < d; ++i)
    {
        result.n1[i] = scale_s1 * n1 * z1[i];
        result.a[i] = scale_s2 * (a1 * z1[i] + n1 * z2[i]);
        result.b[i] *= scale_t;
    }
    return result;
}

std::vector<double>
chasles_refine(RngStream& rng, std::span<double const> lambdas)
{
    if (lambdas.size() < 2)
    {
        throw ConfigError("partition needs at least two points");
    }
    for (std::size_t j = 1; j < lambdas.size(); ++j)
    {
        if (!(lambdas[j] > lambdas[j - 1]))
        {
            throw ConfigError("partition must be strictly increasing");
        }
    }
    auto increments = rng.gauss(lambdas.size() - 1);
    for (std::size_t j = 0; j + 1 < lambdas.size(); ++j)
    {
        increments[j] *= std::sqrt(ito_variance(lambdas[j], lambdas[j + 1]));
    }
    return increments;
}

CorrelatedPair correlated_pair(double u1, double u2, double h)
{
    double const hh = h * std::sqrt(h);
    return {std::sqrt(h) * u1,
            0.5 * hh * u1 + hh / (2 * std::numbers::sqrt3) * u2};
}

CorrelatedPair correlated_pair(RngStream& rng, double h)
{
    check_positive_step(h);
    double u[2];
    rng.gauss(u);
    return correlated_pair(u[0], u[1], h);
}

double weak_point_increment(RngStream& rng, double h, int order)
{
    check_positive_step(h);
    double const u = rng.uniform();
    if (order == 1)
    {
        return u < 0.5 ? -std::sqrt(h) : std::sqrt(h);
    }
    if (order == 2)
    {
        double const a = std::sqrt(3 * h);
        if (u < 1.0 / 6)
        {
            return -a;
        }
        return u < 2.0 / 6 ? a : 0.0;
    }
    throw ConfigError("weak increment order must be 1 or 2");
}

}  // namespace seeds
