// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
//! \file seeds/grids.hpp
//! Decreasing time grids t_0 = T > ... > t_M.
#pragma once

#include <string>
#include <vector>

#include "seeds/schedules.hpp"

namespace seeds
{

enum class GridKind
{
    edm_rho,
    linear_lambda,
};

/*!
 * Strictly decreasing times with M + 1 nodes.
 *
 * The EDM grid ends with the sentinel t_M = 0 that no model call reaches;
 * the linear-lambda grid ends at the schedule's t_end.
 */
class StepGrid
{
  public:
    StepGrid(GridKind kind, std::vector<double> times, std::vector<double> sigmas);

    GridKind kind() const { return kind_; }
    //! Number of steps M.
    std::size_t steps() const { return times_.size() - 1; }
    std::vector<double> const& times() const { return times_; }
    //! Nominal noise level per node (exact design values, not re-evaluated).
    std::vector<double> const& sigmas() const { return sigmas_; }

    //! lambda at each node; +inf at a zero sentinel.
    std::vector<double>
    lambdas(Schedule const& sched, LambdaVariant variant) const;

  private:
    GridKind kind_;
    std::vector<double> times_;
    std::vector<double> sigmas_;
};

inline constexpr double default_rho = 7;

/*!
 * sigma_i = (sigma_max^{1/rho} + i/(M-1) (sigma_min^{1/rho} -
 * sigma_max^{1/rho}))^rho for i < M, sigma_M = 0, mapped to time through the
 * schedule. Throws GridError naming the indices of a degenerate step.
 */
StepGrid edm_grid(int steps,
                  double sigma_min,
                  double sigma_max,
                  double rho,
                  Schedule const& sched);

//! Nodes uniformly spaced in lambda between lambda(t_max) and lambda(t_end).
StepGrid linear_lambda_grid(int steps,
                            double t_end,
                            double t_max,
                            Schedule const& sched,
                            LambdaVariant variant = LambdaVariant::sde);

//! Throws GridError unless both lambda variants strictly increase.
void check_grid(StepGrid const& grid, Schedule const& sched);

char const* to_string(GridKind kind);

}  // namespace seeds
