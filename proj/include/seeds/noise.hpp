// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
//! \file seeds/noise.hpp
//! Counter-based random streams and the weighted stochastic increments.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace seeds
{

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

//! Philox4x32 with 10 rounds.
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

/*!
 * Reproducible normal and uniform draws keyed by (seed, path, step, stage).
 *
 * The Philox counter is (block, stage, step, path) and the key is the 64-bit
 * seed, so every stream is addressable without generating its predecessors.
 * Each block yields two 53-bit uniforms, mapped to a Box-Muller pair.
 */
class RngStream
{
  public:
    RngStream(std::uint64_t seed,
              std::uint32_t path,
              std::uint32_t step,
              std::uint32_t stage);

    void gauss(std::span<double> out);
    std::vector<double> gauss(std::size_t d);
    //! Uniform on (0, 1); consumes one block.
    double uniform();

  private:
    std::array<double, 2> next_uniforms();

    PhiloxKey key_;
    PhiloxCounter ctr_;
};

//! Stage indices used to key the normal draws of one step.
namespace stage
{
inline constexpr int churn = 0;
inline constexpr int z1 = 1;
inline constexpr int z2 = 2;
inline constexpr int z3 = 3;
inline constexpr int coupling = 4;
}  // namespace stage

//! Source of the standard normal vectors consumed by a single step.
class StepNoise
{
  public:
    virtual ~StepNoise() = default;
    virtual void normal(int stage, std::span<double> out) = 0;
};

//! Draws from RngStream(seed, path, step, stage).
class KeyedStepNoise final : public StepNoise
{
  public:
    KeyedStepNoise(std::uint64_t seed, std::uint32_t path, std::uint32_t step)
        : seed_(seed), path_(path), step_(step)
    {
    }
    void normal(int stage, std::span<double> out) override;

  private:
    std::uint64_t seed_;
    std::uint32_t path_;
    std::uint32_t step_;
};

//! All draws are zero: turns a stochastic scheme into its drift part.
class ZeroStepNoise final : public StepNoise
{
  public:
    void normal(int, std::span<double> out) override;
};

enum class IncrementKind
{
    noise_pred,
    data_pred,
};

//! Standard deviation of the single-step noise term; throws for h <= 0.
double weighted_increment_std(double sigma_bar_t, double h, IncrementKind kind);

//! Variance of the integral of e^{-lambda} dW over [lambda_s, lambda_t].
double ito_variance(double lambda_s, double lambda_t);

struct Seeds2Noise
{
    std::vector<double> mid;
    std::vector<double> full;
};

//! Two-stage noise: z1 and z2 are drawn once and shared by both outputs.
Seeds2Noise staged_noise_seeds2(StepNoise& noise,
                                double scale_mid,
                                double scale_t,
                                double h,
                                std::size_t d);

struct Seeds3Noise
{
    std::vector<double> n1;
    std::vector<double> a;
    std::vector<double> b;
};

//! Three-stage noise from z1, z2, z3; throws unless 0 < r1 < r2 < 1.
Seeds3Noise staged_noise_seeds3(StepNoise& noise,
                                double scale_s1,
                                double scale_s2,
                                double scale_t,
                                double h,
                                double r1,
                                double r2,
                                std::size_t d);

/*!
 * Independent increments of the integral of e^{-lambda} dW over each
 * subinterval of an increasing lambda partition.
 */
std::vector<double>
chasles_refine(RngStream& rng, std::span<double const> lambdas);

struct CorrelatedPair
{
    double w_hat;
    double z_hat;
};

//! Pair with covariance [[h, h^2/2], [h^2/2, h^3/3]].
CorrelatedPair correlated_pair(RngStream& rng, double h);
//! Same pair built from given standard normals.
CorrelatedPair correlated_pair(double u1, double u2, double h);

//! Two-point (order 1) or three-point (order 2) weak increment.
double weak_point_increment(RngStream& rng, double h, int order);

}  // namespace seeds
