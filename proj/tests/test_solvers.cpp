// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "fixed_noise.hpp"
#include "oracles.hpp"
#include "seeds/error.hpp"
#include "seeds/solvers.hpp"

using namespace seeds;
using oracle::Real;
using oracle::rel_err;
using testing::FixedNoise;

namespace
{
using Vec = std::vector<double>;

SolverSpec make(SolverFamily family,
                PredictionMode mode = PredictionMode::noise_pred,
                bool noise = true)
{
    SolverSpec spec;
    spec.family = family;
    spec.mode = mode;
    spec.noise = noise;
    return spec;
}

double advance(SolverSpec const& spec, ScoreModel const& model, double x, double s, double t)
{
    Vec v = {x};
    ZeroStepNoise zero;
    step(spec, model, v, s, t, zero);
    return v[0];
}

// Exact probability flow for N(0, v) data: x scales with the marginal std
double gaussian_flow(Schedule const& sched, double v, double x, double s, double t)
{
    auto std_at = [&](double u) {
        auto const sn = sched.alpha_sigma(u);
        return std::sqrt(sn.alpha * sn.alpha * v + sn.sigma_bar * sn.sigma_bar);
    };
    return x * std_at(t) / std_at(s);
}

// Time reached from s after a step h in lambda on the linear VP schedule
double vp_time_after(double s, double h)
{
    oracle::VpLinear const o;
    return o.t_of_lambda(o.lambda(Real(s)) + h).convert_to<double>();
}

double draw(std::uint64_t seed, std::uint32_t path, std::uint32_t step_id, int stage_id)
{
    return RngStream(seed, path, step_id, static_cast<std::uint32_t>(stage_id)).gauss(1)[0];
}
}  // namespace

TEST_SUITE("solvers")
{
    TEST_CASE("zero model without noise reproduces the linear transition")
    {
        auto const vp = Schedule::vp_linear();
        auto const zero = ScoreModel::zero(vp, 1);
        struct Case
        {
            SolverFamily family;
            PredictionMode mode;
        };
        Case const cases[] = {
            {SolverFamily::seeds1, PredictionMode::noise_pred},
            {SolverFamily::seeds1, PredictionMode::data_pred},
            {SolverFamily::seeds2, PredictionMode::noise_pred},
            {SolverFamily::seeds3, PredictionMode::noise_pred},
            {SolverFamily::dpm1, PredictionMode::noise_pred},
            {SolverFamily::dpm1, PredictionMode::data_pred},
            {SolverFamily::dpm2, PredictionMode::noise_pred},
            {SolverFamily::dpm2, PredictionMode::data_pred},
            {SolverFamily::dpm3, PredictionMode::noise_pred},
            {SolverFamily::dpm4, PredictionMode::noise_pred},
            {SolverFamily::exp_euler_etd, PredictionMode::noise_pred},
            {SolverFamily::exp_euler_lawson, PredictionMode::noise_pred},
            {SolverFamily::gddim, PredictionMode::noise_pred},
        };
        for (auto const& c : cases)
        {
            auto const spec = make(c.family, c.mode, false);
            for (auto [s, t] : {std::pair{1.0, 0.6}, {0.3, 0.05}, {0.01, 1e-4}})
            {
                double const want = 1.7 * vp.alpha(t) / vp.alpha(s);
                CHECK_MESSAGE(rel_err(advance(spec, zero, 1.7, s, t), want) < 1e-12,
                              std::string(to_string(c.family)), "/", std::string(to_string(c.mode)), " s=", s);
            }
        }

        // Under VE the zero model's denoiser is the identity
        auto const ve = Schedule::ve();
        auto const zve = ScoreModel::zero(ve, 1);
        for (auto family : {SolverFamily::ve2stage_ode, SolverFamily::ve2stage_sde})
        {
            auto const spec = make(family, PredictionMode::data_pred, false);
            CHECK(rel_err(advance(spec, zve, -0.8, 20.0, 3.0), -0.8) < 1e-13);
        }
    }

    TEST_CASE("seeds1 drift at h = ln sqrt 2")
    {
        double const m = 0.3, v = 0.5, x = 1.2, s = 0.5;
        double const h = std::log(std::numbers::sqrt2);
        double const t = vp_time_after(s, h);
        auto const vp = Schedule::vp_linear();
        ScoreModel const model(vp, DataDistribution({{1.0, {m}, {v}}}));
        oracle::VpLinear const o;
        Real const f = oracle::gaussian_f(o, Real(x), Real(s), Real(m), Real(v));
        Real const want = o.alpha(Real(t)) / o.alpha(Real(s)) * x
                          - 2 * o.sigma_bar(Real(t)) * (sqrt(Real(2)) - 1) * f;
        auto const spec = make(SolverFamily::seeds1, PredictionMode::noise_pred, false);
        CHECK(rel_err(advance(spec, model, x, s, t), want.convert_to<double>()) < 1e-13);
    }

    TEST_CASE("seeds1 stochastic step against a 50-digit evaluation")
    {
        double const m = -0.4, v = 0.8, x = 0.9, s = 0.7, t = 0.45;
        auto const vp = Schedule::vp_linear();
        ScoreModel const model(vp, DataDistribution({{1.0, {m}, {v}}}));
        oracle::VpLinear const o;
        Real const S(s), T(t);
        Real const h = o.lambda(T) - o.lambda(S);
        Real const z = draw(11, 3, 4, stage::z1);
        Real const want = o.alpha(T) / o.alpha(S) * x
                          - 2 * o.sigma_bar(T) * expm1(h) * oracle::gaussian_f(o, Real(x), S, Real(m), Real(v))
                          - o.sigma_bar(T) * sqrt(expm1(2 * h)) * z;
        Vec y = {x};
        KeyedStepNoise noise(11, 3, 4);
        step(make(SolverFamily::seeds1), model, y, s, t, noise);
        CHECK(rel_err(y[0], want.convert_to<double>()) < 1e-13);
    }

    TEST_CASE("seeds2 step against a 50-digit evaluation")
    {
        double const m = 0.6, v = 0.3, x = -0.7, s = 0.8, t = 0.35;
        auto const vp = Schedule::vp_linear();
        ScoreModel const model(vp, DataDistribution({{1.0, {m}, {v}}}));
        oracle::VpLinear const o;
        auto F = [&](Real y, Real u) { return oracle::gaussian_f(o, y, u, Real(m), Real(v)); };
        Real const S(s), T(t);
        Real const ls = o.lambda(S);
        Real const h = o.lambda(T) - ls;
        Real const tm = o.t_of_lambda(ls + h / 2);
        Real const z1 = draw(5, 0, 2, stage::z1), z2 = draw(5, 0, 2, stage::z2);
        Real const root = sqrt(exp(h) - 1);
        Real const u = o.alpha(tm) / o.alpha(S) * x
                       - 2 * o.sigma_bar(tm) * (exp(h / 2) - 1) * F(Real(x), S)
                       - o.sigma_bar(tm) * root * z1;
        Real const want = o.alpha(T) / o.alpha(S) * x - 2 * o.sigma_bar(T) * (exp(h) - 1) * F(u, tm)
                          - o.sigma_bar(T) * root * (exp(h / 2) * z1 + z2);
        Vec y = {x};
        KeyedStepNoise noise(5, 0, 2);
        step(make(SolverFamily::seeds2), model, y, s, t, noise);
        CHECK(rel_err(y[0], want.convert_to<double>()) < 1e-13);
    }

    TEST_CASE("seeds3 step against a 50-digit evaluation")
    {
        double const m = 0.2, v = 0.6, x = 1.4, s = 0.9, t = 0.3;
        auto const vp = Schedule::vp_linear();
        ScoreModel const model(vp, DataDistribution({{1.0, {m}, {v}}}));
        oracle::VpLinear const o;
        auto F = [&](Real y, Real u) { return oracle::gaussian_f(o, y, u, Real(m), Real(v)); };
        Real const S(s), T(t), r1 = Real(1) / 3, r2 = Real(2) / 3;
        Real const ls = o.lambda(S);
        Real const h = o.lambda(T) - ls;
        Real const t1 = o.t_of_lambda(ls + r1 * h), t2 = o.t_of_lambda(ls + r2 * h);
        Real const z1 = draw(9, 7, 1, stage::z1), z2 = draw(9, 7, 1, stage::z2),
                   z3 = draw(9, 7, 1, stage::z3);
        Real const e1 = exp(2 * r1 * h), e2 = exp(2 * r2 * h), e = exp(2 * h);
        Real const n1 = o.sigma_bar(t1) * sqrt(e1 - 1) * z1;
        Real const na = o.sigma_bar(t2) * (sqrt(e2 - e1) * z1 + sqrt(e1 - 1) * z2);
        Real const nb = o.sigma_bar(T)
                        * (sqrt(e - e2) * z1 + sqrt(e2 - e1) * z2 + sqrt(e1 - 1) * z3);
        Real const X(x);
        Real const f0 = F(X, S);
        Real const u1 = o.alpha(t1) / o.alpha(S) * X - 2 * o.sigma_bar(t1) * (exp(r1 * h) - 1) * f0 - n1;
        Real const f1 = F(u1, t1);
        Real const u2 = o.alpha(t2) / o.alpha(S) * X
                        - 2 * o.sigma_bar(t2) * (exp(r2 * h) - 1) * f0
                        - 2 * o.sigma_bar(t2) * (r2 / r1) * ((exp(r2 * h) - 1) / (r2 * h) - 1) * (f1 - f0)
                        - na;
        Real const f2 = F(u2, t2);
        Real const want = o.alpha(T) / o.alpha(S) * X - 2 * o.sigma_bar(T) * (exp(h) - 1) * f0
                          - 2 * o.sigma_bar(T) / r2 * ((exp(h) - 1) / h - 1) * (f2 - f0) - nb;
        Vec y = {x};
        KeyedStepNoise noise(9, 7, 1);
        step(make(SolverFamily::seeds3), model, y, s, t, noise);
        CHECK(rel_err(y[0], want.convert_to<double>()) < 1e-13);
    }

    TEST_CASE("deterministic seeds1 drift is twice the dpm1 drift")
    {
        auto const vp = Schedule::vp_linear();
        ScoreModel const model(vp, DataDistribution({{1.0, {0.5}, {0.4}}}));
        double const x = 0.8, s = 0.6, t = 0.2;
        double const lin = x * vp.alpha(t) / vp.alpha(s);
        double const a = advance(make(SolverFamily::seeds1, PredictionMode::noise_pred, false),
                                 model, x, s, t)
                         - lin;
        double const b = advance(make(SolverFamily::dpm1), model, x, s, t) - lin;
        CHECK(rel_err(a, 2 * b) < 1e-12);
    }

    TEST_CASE("first-order probability flow step is a rotation for standard normal data")
    {
        auto const vp = Schedule::vp_linear();
        ScoreModel const model(vp, DataDistribution::standard_normal(1));
        oracle::VpLinear const o;
        for (auto [s, t] : {std::pair{1.0, 0.5}, {0.4, 0.01}})
        {
            Real const angle = atan(o.sigma(Real(s))) - atan(o.sigma(Real(t)));
            double const want = (cos(angle) * 2).convert_to<double>();
            for (auto mode : {PredictionMode::noise_pred, PredictionMode::data_pred})
            {
                CHECK(rel_err(advance(make(SolverFamily::dpm1, mode), model, 2.0, s, t), want)
                      < 1e-13);
            }
        }
    }

    TEST_CASE("local order of the probability flow solvers")
    {
        double const v = 0.5;
        auto const vp = Schedule::vp_linear();
        ScoreModel const model(vp, DataDistribution({{1.0, {0.0}, {v}}}));
        struct Case
        {
            SolverFamily family;
            PredictionMode mode;
            double ratio;
        };
        Case const cases[] = {
            {SolverFamily::dpm1, PredictionMode::noise_pred, 4},
            {SolverFamily::dpm1, PredictionMode::data_pred, 4},
            {SolverFamily::dpm2, PredictionMode::noise_pred, 8},
            {SolverFamily::dpm2, PredictionMode::data_pred, 8},
            {SolverFamily::dpm3, PredictionMode::noise_pred, 16},
            {SolverFamily::dpm4, PredictionMode::noise_pred, 32},
        };
        double const s = 0.6, x = 1.3;
        for (auto const& c : cases)
        {
            auto const spec = make(c.family, c.mode);
            auto local_error = [&](double h) {
                double const t = vp_time_after(s, h);
                return std::fabs(advance(spec, model, x, s, t)
                                 - gaussian_flow(vp, v, x, s, t));
            };
            double const coarse = local_error(0.05), fine = local_error(0.025);
            CHECK_MESSAGE(std::fabs(coarse / fine / c.ratio - 1) < 0.25,
                          std::string(to_string(c.family)), "/", std::string(to_string(c.mode)), " ratio ",
                          coarse / fine);
        }
    }

    TEST_CASE("euler-maruyama step")
    {
        auto const vp = Schedule::vp_linear();
        ScoreModel const model(vp, DataDistribution({{1.0, {0.1}, {0.7}}}));
        double const x = 0.4, s = 0.5, t = 0.48;
        Vec g(1);
        model.score(Vec{x}, s, g);
        double const dt = t - s;
        double const f = vp.drift_rate(s), g2 = vp.diffusion_sq(s);
        double const z = draw(2, 1, 6, stage::z1);
        double const want = x + (f * x - g2 * g[0]) * dt + std::sqrt(g2 * -dt) * z;
        Vec y = {x};
        KeyedStepNoise noise(2, 1, 6);
        step(make(SolverFamily::euler_maruyama), model, y, s, t, noise);
        CHECK(rel_err(y[0], want) < 1e-14);

        // With ell = 0 the local error against the exact flow is second order
        auto spec = make(SolverFamily::euler_maruyama);
        spec.ell = 0;
        double const v = 0.5;
        ScoreModel const gauss(vp, DataDistribution({{1.0, {0.0}, {v}}}));
        auto err = [&](double step_dt) {
            return std::fabs(advance(spec, gauss, 1.0, s, s - step_dt)
                             - gaussian_flow(vp, v, 1.0, s, s - step_dt));
        };
        CHECK(std::fabs(err(0.02) / err(0.01) / 4 - 1) < 0.2);
    }

    TEST_CASE("exponential Euler variants differ at second order")
    {
        auto const vp = Schedule::vp_linear();
        ScoreModel const model(vp, DataDistribution({{1.0, {0.3}, {0.5}}}));
        auto gap = [&](double dt) {
            double const s = 0.5, t = s - dt;
            return std::fabs(advance(make(SolverFamily::exp_euler_etd), model, 0.9, s, t)
                             - advance(make(SolverFamily::exp_euler_lawson), model, 0.9, s, t));
        };
        double const ratio = gap(0.04) / gap(0.02);
        CHECK(ratio > 4 * 0.8);
        CHECK(ratio < 4 * 1.2);
    }

    TEST_CASE("gddim agrees with data-prediction seeds1")
    {
        auto const vp = Schedule::vp_linear();
        ScoreModel const model(
            vp, DataDistribution({{0.3, {-1.0, 0.5}, {0.2, 0.3}}, {0.7, {0.8, 0.1}, {0.4, 0.1}}}));
        auto const grid = linear_lambda_grid(30, 1e-4, 1.0, vp);
        for (std::uint32_t path = 0; path < 4; ++path)
        {
            Vec a = {0.6, -1.1}, b = a;
            for (std::size_t i = 1; i < grid.times().size(); ++i)
            {
                double const s = grid.times()[i - 1], t = grid.times()[i];
                KeyedStepNoise na(3, path, static_cast<std::uint32_t>(i));
                KeyedStepNoise nb(3, path, static_cast<std::uint32_t>(i));
                step(make(SolverFamily::gddim), model, a, s, t, na);
                step(make(SolverFamily::seeds1, PredictionMode::data_pred), model, b, s, t, nb);
            }
            for (std::size_t k = 0; k < 2; ++k)
            {
                CHECK(std::fabs(a[k] - b[k]) < 1e-10 * std::max(1.0, std::fabs(b[k])));
            }
        }
    }

    TEST_CASE("two-stage VE sampler")
    {
        auto const ve = Schedule::ve();
        // Nearly degenerate data keeps the denoiser at zero for x = 0
        ScoreModel const model(ve, DataDistribution({{1.0, {0.0}, {1e-14}}}));
        double const s = 10.0, t = 4.0;
        double const h = std::log(s / t);
        auto const spec = make(SolverFamily::ve2stage_sde, PredictionMode::data_pred);
        double total = 0;
        for (auto const& unit : {Vec{0, 1, 0}, Vec{0, 0, 1}})
        {
            FixedNoise probe(unit);
            Vec y = {0.0};
            step(spec, model, y, s, t, probe);
            total += y[0] * y[0];
        }
        CHECK(rel_err(total, t * t * -std::expm1(-2 * h)) < 1e-10);

        // The two deterministic forms differ by O(h^3) per step
        ScoreModel const mix(ve, DataDistribution({{0.5, {-1.0}, {0.1}}, {0.5, {1.0}, {0.1}}}));
        auto form_gap = [&](double step_h) {
            auto a = make(SolverFamily::ve2stage_ode, PredictionMode::data_pred);
            auto b = a;
            b.ve_form = VeOdeForm::b;
            double const u = 2.0 * std::exp(-step_h);
            return std::fabs(advance(a, mix, 0.7, 2.0, u) - advance(b, mix, 0.7, 2.0, u));
        };
        CHECK(form_gap(0.1) > 0);
        CHECK(std::fabs(form_gap(0.1) / form_gap(0.05) / 8 - 1) < 0.25);
    }

    TEST_CASE("churn")
    {
        auto const edm = Schedule::edm(0.5);
        FixedNoise unit({1.0});
        Vec x = {0.5};
        ChurnParams off;
        CHECK(churn_inject(off, 18, edm, x, 3.0, unit) == 3.0);
        CHECK(x[0] == 0.5);

        ChurnParams const imagenet{40, 0.05, 50, 1.003};
        CHECK(churn_inject(imagenet, 18, edm, x, 60.0, unit) == 60.0);
        CHECK(churn_inject(imagenet, 18, edm, x, 0.01, unit) == 0.01);
        CHECK(x[0] == 0.5);
        auto spec = make(SolverFamily::seeds1);
        spec.churn = imagenet;
        CHECK_NOTHROW(validate(spec, edm));

        // gamma = min(S_churn / M, sqrt 2 - 1)
        double const t = 2.0;
        double const gamma = std::min(40.0 / 256, std::numbers::sqrt2 - 1);
        double const t_hat = churn_inject(imagenet, 256, edm, x, t, unit);
        CHECK(rel_err(t_hat, t * (1 + gamma)) < 1e-15);
        CHECK(rel_err(x[0], 0.5 + 1.003 * std::sqrt(t_hat * t_hat - t * t)) < 1e-14);

        Vec y = {0.5};
        double const clamped = churn_inject(imagenet, 18, edm, y, t, unit);
        CHECK(rel_err(clamped, t * std::numbers::sqrt2) < 1e-15);

        // On VP the injected state is rescaled to the lifted time
        auto const vp = Schedule::vp_linear();
        Vec z = {1.0};
        ChurnParams const wide{10, 0, 1e9, 1};
        double const lifted = churn_inject(wide, 100, vp, z, 0.3, unit);
        double const sig = vp.sigma(0.3), sig_hat = vp.sigma(lifted);
        CHECK(rel_err(sig_hat, sig * 1.1) < 1e-12);
        double const want = vp.alpha(lifted) / vp.alpha(0.3)
                            + vp.alpha(lifted) * std::sqrt(sig_hat * sig_hat - sig * sig);
        CHECK(rel_err(z[0], want) < 1e-12);
    }

    TEST_CASE("validation")
    {
        auto const vp = Schedule::vp_linear();
        auto const ve = Schedule::ve();
        CHECK_THROWS_AS(validate(make(SolverFamily::seeds2, PredictionMode::data_pred), vp),
                        ConfigError);
        CHECK_THROWS_AS(validate(make(SolverFamily::dpm4, PredictionMode::data_pred), vp),
                        ConfigError);
        auto bad_r = make(SolverFamily::seeds3);
        bad_r.r1 = 0.7;
        CHECK_THROWS_AS(validate(bad_r, vp), ConfigError);
        CHECK_THROWS_AS(validate(make(SolverFamily::gddim), ve), ConfigError);
        CHECK_THROWS_AS(
            validate(make(SolverFamily::ve2stage_ode, PredictionMode::data_pred), vp),
            ConfigError);
        CHECK_THROWS_AS(validate(make(SolverFamily::ve2stage_sde), ve), ConfigError);
        auto bad_ell = make(SolverFamily::euler_maruyama);
        bad_ell.ell = -1;
        CHECK_THROWS_AS(validate(bad_ell, vp), ConfigError);
        auto bad_c2 = make(SolverFamily::dpm2);
        bad_c2.c2 = 0;
        CHECK_THROWS_AS(validate(bad_c2, vp), ConfigError);
        auto bad_churn = make(SolverFamily::seeds1);
        bad_churn.churn = ChurnParams{1, 2, 1, 1};
        CHECK_THROWS_AS(validate(bad_churn, vp), ConfigError);

        try
        {
            validate(make(SolverFamily::gddim), ve);
        }
        catch (ConfigError const& e)
        {
            CHECK(std::string(e.what()).find("gddim") != std::string::npos);
        }

        ScoreModel const model(vp, DataDistribution::standard_normal(1));
        Vec y = {1.0};
        ZeroStepNoise zero;
        CHECK_THROWS_AS(step(make(SolverFamily::dpm1), model, y, 0.3, 0.5, zero), GridError);
        CHECK_THROWS_AS(step(make(SolverFamily::dpm1), model, y, 0.3, 0.3, zero), GridError);
    }

    TEST_CASE("family names")
    {
        for (int i = 0; i <= static_cast<int>(SolverFamily::ve2stage_sde); ++i)
        {
            auto const f = static_cast<SolverFamily>(i);
            CHECK(parse_family(to_string(f)) == f);
        }
        CHECK(parse_family("em") == SolverFamily::euler_maruyama);
        CHECK_FALSE(parse_family("rk4").has_value());
        CHECK(is_stochastic(make(SolverFamily::seeds3)));
        CHECK_FALSE(is_stochastic(make(SolverFamily::seeds3, PredictionMode::noise_pred, false)));
        CHECK_FALSE(is_stochastic(make(SolverFamily::dpm2)));
    }

    TEST_CASE("sampling loop")
    {
        auto const vp = Schedule::vp_linear();
        ScoreModel const model(vp, DataDistribution({{0.5, {-1.0}, {0.25}}, {0.5, {1.0}, {0.25}}}));

        SUBCASE("evaluations per path")
        {
            auto const grid = edm_grid(12, vp.sigma(1e-4), vp.sigma(1.0), 7, vp);
            for (auto family : {SolverFamily::seeds1, SolverFamily::seeds2, SolverFamily::seeds3,
                                SolverFamily::dpm4})
            {
                auto const e = sample_ensemble(make(family), model, grid, 3, 1, InitKind::prior,
                                               1, false);
                CHECK(e.nfe == static_cast<std::uint64_t>(evals_per_step(family)) * 11);
            }
            auto const two = edm_grid(2, vp.sigma(1e-4), vp.sigma(1.0), 7, vp);
            CHECK(sample_ensemble(make(SolverFamily::seeds1), model, two, 5, 1, InitKind::prior,
                                  1, false)
                      .nfe
                  == 1);
            SampleOptions full;
            full.solve_final_step = true;
            auto const lin = linear_lambda_grid(10, 1e-4, 1.0, vp);
            CHECK(sample_ensemble(make(SolverFamily::seeds2), model, lin, 2, 1, InitKind::prior,
                                  1, false, full)
                      .nfe
                  == 20);
        }

        SUBCASE("zero model carries the prior draw linearly")
        {
            auto const zero = ScoreModel::zero(vp, 2);
            auto const grid = edm_grid(8, vp.sigma(1e-4), vp.sigma(1.0), 7, vp);
            auto const spec = make(SolverFamily::seeds1, PredictionMode::noise_pred, false);
            auto const e = sample_ensemble(spec, zero, grid, 4, 21, InitKind::prior, 1, false);
            double const gain = vp.alpha(grid.times()[7]) / vp.alpha(grid.times()[0]);
            for (std::uint32_t p = 0; p < 4; ++p)
            {
                Vec x0(2);
                draw_initial(zero, grid.times()[0], InitKind::prior, 21, p, x0);
                for (std::size_t k = 0; k < 2; ++k)
                {
                    CHECK(rel_err(e.terminal[p * 2 + k], gain * x0[k]) < 1e-12);
                }
            }
        }

        SUBCASE("trajectories")
        {
            auto const grid = linear_lambda_grid(6, 1e-4, 1.0, vp);
            auto const e = sample_ensemble(make(SolverFamily::seeds2), model, grid, 3, 4,
                                           InitKind::prior, 2, true);
            REQUIRE(e.trajectories.size() == 3 * 7);
            for (std::size_t p = 0; p < 3; ++p)
            {
                Vec x0(1);
                draw_initial(model, 1.0, InitKind::prior, 4, static_cast<std::uint32_t>(p), x0);
                CHECK(e.trajectories[p * 7] == x0[0]);
                CHECK(e.trajectories[p * 7 + 6] == e.terminal[p]);
                // The final step copies the state
                CHECK(e.trajectories[p * 7 + 5] == e.terminal[p]);
            }
        }

        SUBCASE("worker count does not change the result")
        {
            auto const grid = edm_grid(10, vp.sigma(1e-4), vp.sigma(1.0), 7, vp);
            auto const a = sample_ensemble(make(SolverFamily::seeds3), model, grid, 37, 8,
                                           InitKind::exact, 1, false);
            auto const b = sample_ensemble(make(SolverFamily::seeds3), model, grid, 37, 8,
                                           InitKind::exact, 4, false);
            CHECK(a.terminal == b.terminal);
            auto const c = sample_ensemble(make(SolverFamily::seeds3), model, grid, 37, 9,
                                           InitKind::exact, 4, false);
            CHECK(a.terminal != c.terminal);
        }

        SUBCASE("exact initial law")
        {
            std::size_t const n = 200000;
            double sum = 0, sq = 0;
            Vec x(1);
            for (std::uint32_t p = 0; p < n; ++p)
            {
                draw_initial(model, 0.2, InitKind::exact, 13, p, x);
                sum += x[0];
                sq += x[0] * x[0];
            }
            auto const sn = vp.alpha_sigma(0.2);
            double const var = sn.alpha * sn.alpha * (1 + 0.25) + sn.sigma_bar * sn.sigma_bar;
            CHECK(std::fabs(sum / n) < 5 * std::sqrt(var / n));
            CHECK(std::fabs(sq / n / var - 1) < 0.01);
        }
    }

    TEST_CASE("parallel_for_paths rethrows worker errors")
    {
        std::vector<int> seen(100, 0);
        parallel_for_paths(100, 3, [&](std::size_t p) { seen[p] += 1; });
        CHECK(std::count(seen.begin(), seen.end(), 1) == 100);
        CHECK_THROWS_AS(parallel_for_paths(50, 4,
                                           [](std::size_t p) {
                                               if (p == 17)
                                               {
                                                   throw std::runtime_error("boom");
                                               }
                                           }),
                        std::runtime_error);
    }
}
