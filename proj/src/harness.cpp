// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
#include "seeds/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "seeds/error.hpp"

namespace seeds
{
namespace
{
//! Supplies a fixed vector for z1 and zeros for every other stage.
class CoupledNoise final : public StepNoise
{
  public:
    explicit CoupledNoise(std::span<double const> eps) : eps_(eps) {}
    void normal(int stage_id, std::span<double> out) override
    {
        if (stage_id == stage::z1)
        {
            std::copy(eps_.begin(), eps_.end(), out.begin());
        }
        else
        {
            std::fill(out.begin(), out.end(), 0.0);
        }
    }

  private:
    std::span<double const> eps_;
};

//! Subgrid keeping every stride-th node of a reference grid.
StepGrid subgrid(StepGrid const& fine, std::size_t stride)
{
    std::vector<double> times, sigmas;
    for (std::size_t i = 0; i < fine.times().size(); i += stride)
    {
        times.push_back(fine.times()[i]);
        sigmas.push_back(fine.sigmas()[i]);
    }
    return StepGrid(fine.kind(), std::move(times), std::move(sigmas));
}

struct MeanSe
{
    double mean;
    double se;
};

MeanSe mean_se(std::vector<double> const& v)
{
    long double sum = 0;
    for (double x : v)
    {
        sum += x;
    }
    double const n = static_cast<double>(v.size());
    double const mean = static_cast<double>(sum / v.size());
    long double ss = 0;
    for (double x : v)
    {
        ss += (x - mean) * (x - mean);
    }
    double const var = n > 1 ? static_cast<double>(ss / (n - 1)) : 0;
    return {mean, std::sqrt(var / n)};
}

void fit_points(OrderEstimate& est)
{
    std::vector<double> lx, ly;
    for (auto const& p : est.points)
    {
        if (p.included)
        {
            lx.push_back(std::log(p.h));
            ly.push_back(std::log(p.error));
        }
    }
    if (lx.size() < 2)
    {
        est.notes.push_back("fewer than two points above the noise floor; "
                            "slope not fitted");
        return;
    }
    auto const fit = fit_line(lx, ly);
    est.slope = fit.slope;
    est.slope_se = fit.slope_se;
    est.r2 = fit.r2;
    if (lx.size() > 2 && est.slope_se > 0.1)
    {
        est.notes.push_back("slope standard error exceeds 0.1; increase "
                            "the number of paths");
    }
}

std::vector<double> gaussian_raw_moments(double mu, double v)
{
    return {mu, mu * mu + v, mu * mu * mu + 3 * mu * v,
            mu * mu * mu * mu + 6 * mu * mu * v + 3 * v * v};
}
}  // namespace

LineFit fit_line(std::vector<double> const& x, std::vector<double> const& y)
{
    std::size_t const n = x.size();
    if (n < 2 || y.size() != n)
    {
        throw ConfigError("line fit needs at least two points");
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit fit{};
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        double const r = y[i] - (fit.intercept + fit.slope * x[i]);
        sse += r * r;
    }
    fit.r2 = syy > 0 ? 1 - sse / syy : 1;
    fit.slope_se = n > 2 ? std::sqrt(sse / (n - 2) / sxx) : 0;
    return fit;
}

OrderEstimate strong_order(SolverSpec const& spec,
                           ScoreModel const& model,
                           double t_end,
                           double t_max,
                           StrongOrderOptions const& opts)
{
    if (spec.family != SolverFamily::seeds1
        || spec.mode != PredictionMode::noise_pred)
    {
        throw ConfigError("order: strong order is only estimated for seeds1 "
                          "in noise prediction mode");
    }
    if (opts.levels < 3)
    {
        throw ConfigError("order.levels: at least 3 refinement levels needed");
    }
    if (opts.base_steps < 1 || opts.reference_levels < 1 || opts.n_paths < 2)
    {
        throw ConfigError("order: base_steps, reference_levels and paths "
                          "must be positive");
    }
    validate(spec, model.schedule());
    auto const& sched = model.schedule();
    std::size_t const d = model.dim();
    int const ref_shift = opts.levels - 1 + opts.reference_levels;
    int const ref_steps = opts.base_steps << ref_shift;
    auto const ref = linear_lambda_grid(ref_steps, t_end, t_max, sched);
    auto const ref_lambda = ref.lambdas(sched, LambdaVariant::sde);

    std::vector<StepGrid> grids;
    std::vector<std::size_t> strides;
    for (int lvl = 0; lvl < opts.levels; ++lvl)
    {
        std::size_t const stride = std::size_t{1} << (ref_shift - lvl);
        strides.push_back(stride);
        grids.push_back(subgrid(ref, stride));
    }

    auto const n_levels = static_cast<std::size_t>(opts.levels);
    std::vector<std::vector<double>> sup2(
        n_levels, std::vector<double>(opts.n_paths));
    SolverSpec const run_spec = [&] {
        SolverSpec s = spec;
        s.churn.reset();
        s.noise = true;
        return s;
    }();

    parallel_for_paths(opts.n_paths, opts.workers, [&](std::size_t p) {
        auto const path = static_cast<std::uint32_t>(p);
        std::vector<double> x0(d);
        draw_initial(model, t_max, InitKind::exact, opts.seed, path, x0);
        // increments[k][j]: axis k, reference subinterval j
        std::vector<std::vector<double>> inc(d);
        for (std::size_t k = 0; k < d; ++k)
        {
            RngStream rng(opts.seed, path, static_cast<std::uint32_t>(k),
                          stage::coupling);
            inc[k] = chasles_refine(rng, ref_lambda);
        }
        auto run = [&](std::size_t stride, std::vector<double>& states) {
            std::size_t const m = static_cast<std::size_t>(ref_steps) / stride;
            std::vector<double> x = x0;
            std::vector<double> eps(d);
            states.assign(x.begin(), x.end());
            for (std::size_t i = 1; i <= m; ++i)
            {
                std::size_t const j0 = (i - 1) * stride;
                std::size_t const j1 = i * stride;
                double const sd = std::sqrt(
                    ito_variance(ref_lambda[j0], ref_lambda[j1]));
                for (std::size_t k = 0; k < d; ++k)
                {
                    double sum = 0;
                    for (std::size_t j = j0; j < j1; ++j)
                    {
                        sum += inc[k][j];
                    }
                    eps[k] = sum / sd;
                }
                CoupledNoise noise(eps);
                step(run_spec, model, x, ref.times()[j0], ref.times()[j1],
                     noise);
                states.insert(states.end(), x.begin(), x.end());
            }
        };
        std::vector<double> ref_states;
        run(1, ref_states);
        std::vector<double> states;
        for (std::size_t lvl = 0; lvl < n_levels; ++lvl)
        {
            run(strides[lvl], states);
            std::size_t const m = states.size() / d;
            double worst = 0;
            for (std::size_t i = 1; i < m; ++i)
            {
                std::size_t const r = i * strides[lvl];
                double sq = 0;
                for (std::size_t k = 0; k < d; ++k)
                {
                    double const diff = states[i * d + k] - ref_states[r * d + k];
                    sq += diff * diff;
                }
                worst = std::max(worst, sq);
            }
            sup2[lvl][p] = worst;
        }
    });

    OrderEstimate est;
    double const span = ref_lambda.back() - ref_lambda.front();
    bool all_tiny = true;
    for (std::size_t lvl = 0; lvl < n_levels; ++lvl)
    {
        auto const ms = mean_se(sup2[lvl]);
        double const err = std::sqrt(ms.mean);
        OrderPoint pt;
        pt.h = span / static_cast<double>(grids[lvl].steps());
        pt.error = err;
        // delta method for the square root of a mean
        pt.se = err > 0 ? ms.se / (2 * err) : 0;
        pt.n_paths = opts.n_paths;
        pt.included = err > 1e-12;
        all_tiny = all_tiny && !pt.included;
        est.points.push_back(pt);
    }
    if (all_tiny)
    {
        est.exact = true;
        est.notes.push_back("errors at round-off level: exact on this problem");
        return est;
    }
    fit_points(est);
    return est;
}

std::vector<double> exact_raw_moments(ScoreModel const& model,
                                      double t,
                                      std::size_t axis,
                                      double t0)
{
    auto const& sched = model.schedule();
    auto const sn = sched.alpha_sigma(t);
    if (model.is_zero())
    {
        double const s0 = sched.sigma(t0);
        double const v = sn.alpha * sn.alpha
                         * (2 * s0 * s0 - sn.sigma * sn.sigma);
        return gaussian_raw_moments(0, v);
    }
    std::vector<double> out(4, 0.0);
    for (auto const& c : model.data()->components())
    {
        double const mu = sn.alpha * c.mean[axis];
        double const v = sn.alpha * sn.alpha * c.var[axis]
                         + sn.sigma_bar * sn.sigma_bar;
        auto const m = gaussian_raw_moments(mu, v);
        for (std::size_t k = 0; k < 4; ++k)
        {
            out[k] += c.weight * m[k];
        }
    }
    return out;
}

OrderEstimate weak_order(SolverSpec const& spec,
                         ScoreModel const& model,
                         double t_end,
                         double t_max,
                         WeakOrderOptions const& opts)
{
    if (opts.steps.size() < 3)
    {
        throw ConfigError("order.weak_steps: at least 3 resolutions needed");
    }
    if (!std::is_sorted(opts.steps.begin(), opts.steps.end())
        || std::adjacent_find(opts.steps.begin(), opts.steps.end())
               != opts.steps.end())
    {
        throw ConfigError("order.weak_steps: must be strictly increasing");
    }
    validate(spec, model.schedule());
    auto const& sched = model.schedule();
    std::size_t const d = model.dim();
    SampleOptions run_opts;
    run_opts.solve_final_step = true;
    SolverSpec run_spec = spec;
    run_spec.churn.reset();

    OrderEstimate est;
    bool any_included = false;
    for (int m : opts.steps)
    {
        auto const grid = linear_lambda_grid(m, t_end, t_max, sched);
        auto const lam = grid.lambdas(sched, LambdaVariant::sde);
        auto const ens = sample_ensemble(run_spec, model, grid, opts.n_paths,
                                         opts.seed, InitKind::exact,
                                         opts.workers, false, run_opts);
        double worst = -1, worst_se = 0;
        for (std::size_t k = 0; k < d; ++k)
        {
            auto const exact = exact_raw_moments(model, t_end, k, t_max);
            for (int power : {1, 2, 4})
            {
                std::vector<double> g(opts.n_paths);
                for (std::size_t p = 0; p < opts.n_paths; ++p)
                {
                    g[p] = std::pow(ens.terminal[p * d + k], power);
                }
                auto const ms = mean_se(g);
                double const err
                    = std::fabs(ms.mean - exact[static_cast<std::size_t>(power - 1)]);
                if (err > worst)
                {
                    worst = err;
                    worst_se = ms.se;
                }
            }
        }
        OrderPoint pt;
        pt.h = (lam.back() - lam.front()) / m;
        pt.error = worst;
        pt.se = worst_se;
        pt.n_paths = opts.n_paths;
        pt.included = worst >= 3 * worst_se && worst > 0;
        if (!pt.included)
        {
            est.notes.push_back("M = " + std::to_string(m)
                                + " excluded: error below 3 standard errors");
        }
        any_included = any_included || pt.included;
        est.points.push_back(pt);
    }
    if (!any_included)
    {
        est.exact = true;
        est.notes.push_back("all errors within Monte Carlo noise");
        return est;
    }
    fit_points(est);
    return est;
}

CompareResult per_step_compare(SolverSpec const& a,
                               SolverSpec const& b,
                               ScoreModel const& model,
                               StepGrid const& grid,
                               std::uint64_t seed,
                               std::size_t n_paths)
{
    validate(a, model.schedule());
    validate(b, model.schedule());
    std::size_t const d = model.dim();
    auto const& times = grid.times();
    CompareResult result;
    for (std::size_t p = 0; p < n_paths; ++p)
    {
        auto const path = static_cast<std::uint32_t>(p);
        std::vector<double> x(d), ya(d), yb(d);
        draw_initial(model, times.front(), InitKind::exact, seed, path, x);
        for (std::size_t i = 1; i < grid.steps(); ++i)
        {
            ya = x;
            yb = x;
            KeyedStepNoise na(seed, path, static_cast<std::uint32_t>(i));
            KeyedStepNoise nb(seed, path, static_cast<std::uint32_t>(i));
            step(a, model, ya, times[i - 1], times[i], na);
            step(b, model, yb, times[i - 1], times[i], nb);
            for (std::size_t k = 0; k < d; ++k)
            {
                double const diff = std::fabs(ya[k] - yb[k]);
                double const scale = std::max(std::fabs(ya[k]), std::fabs(yb[k]));
                result.max_abs_diff = std::max(result.max_abs_diff, diff);
                if (scale > 0)
                {
                    result.max_rel_diff
                        = std::max(result.max_rel_diff, diff / scale);
                }
            }
            x = ya;
        }
    }
    return result;
}

std::vector<AxisMoments>
sample_moments(std::vector<double> const& samples, std::size_t n, std::size_t d)
{
    std::vector<AxisMoments> out(d);
    for (std::size_t k = 0; k < d; ++k)
    {
        long double sum = 0;
        for (std::size_t p = 0; p < n; ++p)
        {
            sum += samples[p * d + k];
        }
        double const mean = static_cast<double>(sum / n);
        long double m2 = 0, m3 = 0, m4 = 0;
        for (std::size_t p = 0; p < n; ++p)
        {
            long double const c = samples[p * d + k] - mean;
            m2 += c * c;
            m3 += c * c * c;
            m4 += c * c * c * c;
        }
        double const dn = static_cast<double>(n);
        double const c2 = static_cast<double>(m2 / n);
        double const c3 = static_cast<double>(m3 / n);
        double const c4 = static_cast<double>(m4 / n);
        double const var = static_cast<double>(m2 / (n - 1));
        out[k].mean = mean;
        out[k].mean_se = std::sqrt(var / dn);
        out[k].var = var;
        out[k].var_se = std::sqrt(std::max(c4 - c2 * c2, 0.0) / dn);
        out[k].skew = c3 / std::pow(c2, 1.5);
        out[k].skew_se = std::sqrt(6.0 / dn);
    }
    return out;
}

TerminalReport terminal_distribution_check(SolverSpec const& spec,
                                           ScoreModel const& model,
                                           StepGrid const& grid,
                                           std::size_t n_paths,
                                           std::uint64_t seed,
                                           unsigned workers)
{
    auto const ens = sample_ensemble(spec, model, grid, n_paths, seed,
                                     InitKind::prior, workers, false);
    TerminalReport report;
    report.nfe = ens.nfe;
    report.axes = sample_moments(ens.terminal, n_paths, model.dim());
    // The final step is trivial, so the sample sits at t_{M-1}
    double const t_term = grid.times()[grid.steps() - 1];
    for (std::size_t k = 0; k < model.dim(); ++k)
    {
        auto const m = exact_raw_moments(model, t_term, k, grid.times().front());
        report.exact_mean.push_back(m[0]);
        report.exact_var.push_back(m[1] - m[0] * m[0]);
    }
    return report;
}

}  // namespace seeds
