// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "seeds/error.hpp"
#include "seeds/harness.hpp"
#include "seeds/noise.hpp"
#include "seeds/phi.hpp"

namespace seeds
{
namespace
{
class Report
{
  public:
    void check(char const* name, double value, double limit, bool pass)
    {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-34s %-12.4e %-10.1e %s\n", name,
                      value, limit, pass ? "PASS" : "FAIL");
        text += buf;
        ok = ok && pass;
    }
    void below(char const* name, double value, double limit)
    {
        this->check(name, value, limit, value <= limit);
    }
    void above(char const* name, double value, double limit)
    {
        this->check(name, value, limit, value > limit);
    }

    std::string text;
    bool ok = true;
};

double rel(double a, double b)
{
    double const scale = std::max(std::fabs(a), std::fabs(b));
    return scale > 0 ? std::fabs(a - b) / scale : 0;
}

double philox_kat()
{
    auto const a = philox4x32_10({0, 0, 0, 0}, {0, 0});
    auto const b = philox4x32_10(
        {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
        {0xffffffffu, 0xffffffffu});
    PhiloxCounter const ea{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u};
    PhiloxCounter const eb{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu};
    int mismatches = 0;
    for (int i = 0; i < 4; ++i)
    {
        mismatches += (a[i] != ea[i]) + (b[i] != eb[i]);
    }
    return mismatches;
}

double phi_recursion()
{
    double worst = 0;
    double fact = 1;
    for (int k = 0; k < 8; ++k)
    {
        if (k > 1)
        {
            fact /= k;
        }
        for (double h : {1e-6, -1e-6, 0.1, -0.1, 1.0, -1.0, 5.0, -5.0})
        {
            double const lhs = h * phi(k + 1, h) + fact;
            double const rhs = phi(k, h);
            worst = std::max(worst,
                             std::fabs(lhs - rhs) / std::max(1.0, std::fabs(rhs)));
        }
    }
    return worst;
}

double expm1_identity()
{
    double worst = 0;
    for (double h : {1e-8, 1e-4, 0.01, 0.3, 1.0, 5.0})
    {
        double const naive = std::sqrt(std::exp(2 * h) - std::exp(h))
                             + std::sqrt(std::expm1(h));
        double const stable = std::sqrt(std::expm1(h)) * (std::exp(0.5 * h) + 1);
        double const split = sqrt_exp2_diff(h, 0.5 * h) + sqrt_exp2_diff(0.5 * h, 0);
        worst = std::max({worst, rel(split, stable),
                          h >= 0.3 ? rel(naive, stable) : 0.0});
    }
    return worst;
}

double telescoping()
{
    double worst = 0;
    for (double h : {1e-8, 1e-3, 0.3, 1.0, 5.0})
    {
        auto const c = seeds3_noise_coeffs(h, 1.0 / 3, 2.0 / 3);
        double const total = c.c1 * c.c1 + c.c2 * c.c2 + c.c3 * c.c3;
        worst = std::max(worst, rel(total, std::expm1(2 * h)));
    }
    return worst;
}

double linear_exactness()
{
    auto const sched = Schedule::vp_linear();
    double const s = 0.8, u = 0.3, t = 0.05;
    auto const as = sched.alpha_sigma(s);
    auto const au = sched.alpha_sigma(u);
    auto const at = sched.alpha_sigma(t);
    double const mean_err = rel(at.alpha / as.alpha,
                                (at.alpha / au.alpha) * (au.alpha / as.alpha));
    auto var = [&](ScaleNoise const& a, ScaleNoise const& b) {
        double const s1 = weighted_increment_std(
            b.sigma_bar, std::log(a.sigma / b.sigma), IncrementKind::noise_pred);
        return s1 * s1;
    };
    double const one = var(as, at);
    double const two = std::pow(at.alpha / au.alpha, 2) * var(as, au) + var(au, at);
    return std::max(mean_err, rel(one, two));
}

double nfe_mismatch()
{
    auto const sched = Schedule::vp_linear();
    auto const model = ScoreModel(sched, DataDistribution::standard_normal(1));
    auto const grid = edm_grid(6, sched.sigma(1e-4), sched.sigma(1.0), 7, sched);
    double worst = 0;
    for (auto fam : {SolverFamily::seeds1, SolverFamily::seeds2,
                     SolverFamily::seeds3, SolverFamily::dpm4})
    {
        SolverSpec spec;
        spec.family = fam;
        auto const ens = sample_ensemble(spec, model, grid, 3, 1,
                                         InitKind::prior, 1, false);
        double const expected = evals_per_step(fam) * (grid.steps() - 1);
        worst = std::max(worst, std::fabs(static_cast<double>(ens.nfe) - expected));
    }
    return worst;
}

double grid_contract()
{
    auto const sched = Schedule::edm();
    auto const grid = edm_grid(4, 0.002, 80, 7, sched);
    double err = std::fabs(grid.sigmas().front() - 80)
                 + std::fabs(grid.sigmas()[3] - 0.002) + grid.times().back();
    try
    {
        edm_grid(50, 1.0, 1.0 + 1e-15, 7, Schedule::vp_linear());
        err += 1;
    }
    catch (GridError const&)
    {
    }
    return err;
}

double worker_determinism()
{
    auto const sched = Schedule::vp_linear();
    auto const model = ScoreModel(sched, DataDistribution::standard_normal(2));
    auto const grid = edm_grid(8, sched.sigma(1e-4), sched.sigma(1.0), 7, sched);
    SolverSpec spec;
    spec.family = SolverFamily::seeds3;
    auto const a = sample_ensemble(spec, model, grid, 64, 9, InitKind::prior, 1, false);
    auto const b = sample_ensemble(spec, model, grid, 64, 9, InitKind::prior, 4, false);
    return a.terminal == b.terminal ? 0 : 1;
}
}  // namespace

SelftestResult run_selftest()
{
    Report r;
    r.below("philox_known_answers", philox_kat(), 0);
    r.below("phi_recursion", phi_recursion(), 1e-12);
    r.below("expm1_identities", expm1_identity(), 1e-14);
    r.below("variance_telescoping", telescoping(), 1e-14);
    r.below("linear_exactness", linear_exactness(), 1e-12);

    auto const sched = Schedule::vp_linear();
    auto const model = ScoreModel(sched, DataDistribution::standard_normal(2));
    auto const grid = edm_grid(30, sched.sigma(1e-4), sched.sigma(1.0), 7, sched);
    SolverSpec gddim;
    gddim.family = SolverFamily::gddim;
    SolverSpec seeds_dp;
    seeds_dp.mode = PredictionMode::data_pred;
    r.below("gddim_vs_seeds1_dp", per_step_compare(gddim, seeds_dp, model, grid, 3).max_rel_diff,
            1e-10);
    SolverSpec seeds_np;
    seeds_np.noise = false;
    SolverSpec dpm1;
    dpm1.family = SolverFamily::dpm1;
    r.above("seeds1_np_vs_dpm1", per_step_compare(seeds_np, dpm1, model, grid, 3).max_rel_diff,
            1e-3);
    SolverSpec seeds_np_noisy;
    r.above("seeds1_np_vs_dp",
            per_step_compare(seeds_np_noisy, seeds_dp, model, grid, 3).max_rel_diff, 1e-6);

    r.below("nfe_accounting", nfe_mismatch(), 0);
    r.below("grid_contract", grid_contract(), 0);
    r.below("worker_determinism", worker_determinism(), 0);
    return {r.ok, r.text};
}

}  // namespace seeds
