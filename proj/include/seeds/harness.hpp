// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
//! \file seeds/harness.hpp
//! Convergence-order estimation, closed-form oracles and solver comparisons.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seeds/grids.hpp"
#include "seeds/models.hpp"
#include "seeds/solvers.hpp"

namespace seeds
{

struct OrderPoint
{
    double h;  //!< step in lambda
    double error;
    double se;
    std::size_t n_paths;
    bool included;
};

struct OrderEstimate
{
    std::vector<OrderPoint> points;
    double slope = 0;
    double slope_se = 0;
    double r2 = 0;
    //! All errors at round-off level: the scheme is exact on this problem
    bool exact = false;
    std::vector<std::string> notes;
};

struct LineFit
{
    double slope;
    double intercept;
    double slope_se;
    double r2;
};

//! Ordinary least squares of y on x.
LineFit fit_line(std::vector<double> const& x, std::vector<double> const& y);

struct StrongOrderOptions
{
    int levels = 4;
    int base_steps = 32;
    //! The reference is this many halvings finer than the finest level
    int reference_levels = 2;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

/*!
 * Mean-square strong order of SEEDS-1 in noise prediction mode.
 *
 * Levels are nested linear-lambda grids on [t_end, t_max]. Every path draws
 * the increments of the weighted integral on the reference grid once and
 * sums them for the coarser levels, so all levels share one Brownian path.
 * error = sqrt(E[max over coarse nodes |x - x_ref|^2]).
 */
OrderEstimate strong_order(SolverSpec const& spec,
                           ScoreModel const& model,
                           double t_end,
                           double t_max,
                           StrongOrderOptions const& opts);

struct WeakOrderOptions
{
    std::vector<int> steps = {16, 20, 24, 28};
    std::size_t n_paths = 100000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

/*!
 * Weak order from the errors of E[x], E[x^2], E[x^4] at t_end against the
 * exact forward marginal. A point whose error is below 3 standard errors is
 * excluded from the fit.
 */
OrderEstimate weak_order(SolverSpec const& spec,
                         ScoreModel const& model,
                         double t_end,
                         double t_max,
                         WeakOrderOptions const& opts);

/*!
 * Raw moments E[x^k], k = 1..4, of axis \c axis of the exact law at t.
 *
 * For mixture data this is the forward marginal p_t. The zero model has no
 * data; its law is the prior N(0, sigma_bar(t0)^2) pushed from t0 through
 * the exact linear transitions.
 */
std::vector<double> exact_raw_moments(ScoreModel const& model,
                                      double t,
                                      std::size_t axis,
                                      double t0);

struct CompareResult
{
    double max_rel_diff = 0;
    double max_abs_diff = 0;
};

/*!
 * Run both solvers one step at a time from the same states with the same
 * keyed draws and report the largest relative difference of the results.
 */
CompareResult per_step_compare(SolverSpec const& a,
                               SolverSpec const& b,
                               ScoreModel const& model,
                               StepGrid const& grid,
                               std::uint64_t seed,
                               std::size_t n_paths = 8);

struct AxisMoments
{
    double mean;
    double mean_se;
    double var;
    double var_se;
    double skew;
    double skew_se;
};

//! Per-axis sample moments of an n x d sample matrix.
std::vector<AxisMoments>
sample_moments(std::vector<double> const& samples, std::size_t n, std::size_t d);

struct TerminalReport
{
    std::vector<AxisMoments> axes;
    //! Exact mean and variance of each axis at the terminal node
    std::vector<double> exact_mean;
    std::vector<double> exact_var;
    std::uint64_t nfe = 0;
};

TerminalReport terminal_distribution_check(SolverSpec const& spec,
                                           ScoreModel const& model,
                                           StepGrid const& grid,
                                           std::size_t n_paths,
                                           std::uint64_t seed,
                                           unsigned workers);

//! Deterministic invariant suite; returns one line per check.
struct SelftestResult
{
    bool passed = true;
    std::string report;
};
SelftestResult run_selftest();

}  // namespace seeds
