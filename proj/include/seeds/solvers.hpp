// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
//! \file seeds/solvers.hpp
//! Single-step update rules and the outer sampling loop.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seeds/grids.hpp"
#include "seeds/models.hpp"
#include "seeds/noise.hpp"
#include "seeds/schedules.hpp"

namespace seeds
{

enum class SolverFamily
{
    seeds1,
    seeds2,
    seeds3,
    dpm1,
    dpm2,
    dpm3,
    dpm4,
    euler_maruyama,
    exp_euler_etd,
    exp_euler_lawson,
    gddim,
    ve2stage_ode,
    ve2stage_sde,
};

enum class PredictionMode
{
    noise_pred,
    data_pred,
};

//! Which of the two one-parameter deterministic two-stage schemes to use.
enum class VeOdeForm
{
    a,
    b,
};

struct ChurnParams
{
    double s_churn = 0;
    double s_tmin = 0;
    double s_tmax = 1e300;
    double s_noise = 1;
};

struct SolverSpec
{
    SolverFamily family = SolverFamily::seeds1;
    PredictionMode mode = PredictionMode::noise_pred;
    double r1 = 1.0 / 3;
    double r2 = 2.0 / 3;
    //! Stage fraction of the two-stage schemes (and r of the four-stage one)
    double c2 = 0.5;
    VeOdeForm ve_form = VeOdeForm::a;
    //! Euler-Maruyama interpolation: 1 reverse SDE, 0 probability flow
    double ell = 1;
    //! When false, every normal draw is replaced by zero
    bool noise = true;
    std::optional<ChurnParams> churn;
};

//! Throws ConfigError when the spec cannot run on the schedule.
void validate(SolverSpec const& spec, Schedule const& sched);

//! Model evaluations per step.
int evals_per_step(SolverFamily family);
//! True if the family injects noise.
bool is_stochastic(SolverSpec const& spec);

char const* to_string(SolverFamily family);
char const* to_string(PredictionMode mode);
std::optional<SolverFamily> parse_family(std::string const& name);

/*!
 * Advance x in place from s to t < s.
 *
 * Normal draws come from \c noise keyed by stage: z1, z2 and z3 for the
 * staged schemes, z1 alone for single-stage stochastic schemes. Throws
 * GridError when the step in lambda is not positive.
 */
void step(SolverSpec const& spec,
          ScoreModel const& model,
          std::span<double> x,
          double s,
          double t,
          StepNoise& noise);

/*!
 * Raise the noise level of x at time t by a factor 1 + gamma and return the
 * lifted time. Identity when sigma_t is outside [S_tmin, S_tmax].
 */
double churn_inject(ChurnParams const& churn,
                    int steps,
                    Schedule const& sched,
                    std::span<double> x,
                    double t,
                    StepNoise& noise);

struct SampleOptions
{
    //! Run the solver on the last step instead of copying the state
    bool solve_final_step = false;
};

/*!
 * Integrate one path from x = x_T over the grid.
 *
 * Step i (from t_{i-1} to t_i) draws from KeyedStepNoise(seed, path, i). The
 * last step is trivial unless \c solve_final_step is set. When \c trajectory
 * is given, it receives the (M + 1) x d states row by row.
 */
void sample_path(SolverSpec const& spec,
                 ScoreModel const& model,
                 StepGrid const& grid,
                 std::span<double> x,
                 std::uint64_t seed,
                 std::uint32_t path,
                 SampleOptions const& opts = {},
                 std::vector<double>* trajectory = nullptr);

enum class InitKind
{
    prior,  //!< N(0, sigma_bar(t_0)^2 I)
    exact,  //!< the forward marginal p_{t_0}
};

//! Draw x_T for a path from RngStream(seed, path, 0, stage::init).
void draw_initial(ScoreModel const& model,
                  double t0,
                  InitKind init,
                  std::uint64_t seed,
                  std::uint32_t path,
                  std::span<double> out);

namespace stage
{
inline constexpr int init = 5;
}

struct Ensemble
{
    std::size_t n_paths = 0;
    std::size_t dim = 0;
    std::vector<double> terminal;  //!< n_paths x dim
    //! n_paths x (M + 1) x dim when requested
    std::vector<double> trajectories;
    std::uint64_t nfe = 0;  //!< evaluations per path
};

//! Sample paths 0..n_paths-1 over a pool of worker threads.
Ensemble sample_ensemble(SolverSpec const& spec,
                         ScoreModel const& model,
                         StepGrid const& grid,
                         std::size_t n_paths,
                         std::uint64_t seed,
                         InitKind init,
                         unsigned workers,
                         bool keep_trajectories,
                         SampleOptions const& opts = {});

//! Run fn(path) for every path, split over workers; rethrows the first error.
void parallel_for_paths(std::size_t n_paths,
                        unsigned workers,
                        std::function<void(std::size_t)> const& fn);

}  // namespace seeds
