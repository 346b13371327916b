// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
#include "seeds/grids.hpp"

#include <cmath>
#include <limits>

#include "seeds/error.hpp"

namespace seeds
{
namespace
{
void require_steps(int steps)
{
    if (steps < 2)
    {
        throw ConfigError("grid needs at least 2 steps");
    }
}

std::string pair_name(std::size_t i)
{
    return "t_" + std::to_string(i) + " and t_" + std::to_string(i + 1);
}
}  // namespace

char const* to_string(GridKind kind)
{
    return kind == GridKind::edm_rho ? "edm" : "linear_lambda";
}

StepGrid::StepGrid(GridKind kind,
                   std::vector<double> times,
                   std::vector<double> sigmas)
    : kind_(kind), times_(std::move(times)), sigmas_(std::move(sigmas))
{
    if (times_.size() < 2)
    {
        throw ConfigError("grid needs at least one step");
    }
    for (std::size_t i = 0; i + 1 < times_.size(); ++i)
    {
        if (!(times_[i + 1] < times_[i]))
        {
            throw GridError("degenerate grid: " + pair_name(i)
                            + " are not strictly decreasing");
        }
    }
    if (!(times_.back() >= 0))
    {
        throw GridError("grid times must be non-negative");
    }
}

std::vector<double>
StepGrid::lambdas(Schedule const& sched, LambdaVariant variant) const
{
    std::vector<double> out(times_.size());
    for (std::size_t i = 0; i < times_.size(); ++i)
    {
        out[i] = times_[i] == 0 ? std::numeric_limits<double>::infinity()
                                : sched.lambda_of_t(times_[i], variant);
    }
    return out;
}

void check_grid(StepGrid const& grid, Schedule const& sched)
{
    for (auto variant : {LambdaVariant::sde, LambdaVariant::ode})
    {
        auto const lam = grid.lambdas(sched, variant);
        for (std::size_t i = 0; i + 1 < lam.size(); ++i)
        {
            if (!(lam[i + 1] > lam[i]))
            {
                throw GridError("degenerate grid: " + pair_name(i)
                                + " give a zero step in lambda ("
                                + to_string(variant) + ")");
            }
        }
    }
}

StepGrid edm_grid(int steps,
                  double sigma_min,
                  double sigma_max,
                  double rho,
                  Schedule const& sched)
{
    require_steps(steps);
    if (!(sigma_min > 0) || !(sigma_max > sigma_min))
    {
        throw ConfigError("edm grid requires 0 < sigma_min < sigma_max");
    }
    if (!(rho > 0))
    {
        throw ConfigError("edm grid requires rho > 0");
    }
    std::size_t const m = static_cast<std::size_t>(steps);
    std::vector<double> sigmas(m + 1);
    std::vector<double> times(m + 1);
    double const lo = std::pow(sigma_min, 1 / rho);
    double const hi = std::pow(sigma_max, 1 / rho);
    for (std::size_t i = 0; i < m; ++i)
    {
        double const frac = static_cast<double>(i) / static_cast<double>(m - 1);
        sigmas[i] = std::pow(hi + frac * (lo - hi), rho);
    }
    // Pin the endpoints to the requested values
    sigmas.front() = sigma_max;
    sigmas[m - 1] = sigma_min;
    sigmas[m] = 0;
    for (std::size_t i = 0; i <= m; ++i)
    {
        times[i] = sched.t_of_sigma(sigmas[i]);
    }
    for (std::size_t i = 0; i < m; ++i)
    {
        if (!(times[i + 1] < times[i]))
        {
            throw GridError("degenerate grid: " + pair_name(i)
                            + " coincide after mapping sigma to time");
        }
    }
    StepGrid grid(GridKind::edm_rho, std::move(times), std::move(sigmas));
    // Evaluating lambda also validates every node against the time domain
    check_grid(grid, sched);
    return grid;
}

StepGrid linear_lambda_grid(int steps,
                            double t_end,
                            double t_max,
                            Schedule const& sched,
                            LambdaVariant variant)
{
    require_steps(steps);
    if (!(t_end > 0) || !(t_max > t_end))
    {
        throw ConfigError("linear lambda grid requires 0 < t_end < t_max");
    }
    double const lam0 = sched.lambda_of_t(t_max, variant);
    double const lam1 = sched.lambda_of_t(t_end, variant);
    double const h = (lam1 - lam0) / steps;
    std::size_t const m = static_cast<std::size_t>(steps);
    std::vector<double> times(m + 1);
    std::vector<double> sigmas(m + 1);
    times.front() = t_max;
    times.back() = t_end;
    for (std::size_t i = 1; i < m; ++i)
    {
        times[i] = sched.t_of_lambda(lam0 + static_cast<double>(i) * h, variant);
    }
    for (std::size_t i = 0; i <= m; ++i)
    {
        sigmas[i] = sched.sigma(times[i]);
    }
    StepGrid grid(GridKind::linear_lambda, std::move(times), std::move(sigmas));
    check_grid(grid, sched);
    return grid;
}

}  // namespace seeds
