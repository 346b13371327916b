// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
#include "seeds/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "seeds/error.hpp"
#include "seeds/phi.hpp"

namespace seeds
{
namespace
{
using Vec = std::vector<double>;

/*!
 * Node of the noise-prediction exponential frame.
 *
 * With the linear part integrated exactly, one step reads
 * x_t = psi_t/psi_s x_s + kappa scale_t (e^h - 1) F - scale_t sqrt(e^{2h}-1) z
 * where scale_t = psi_t e^{-lambda_t}. For VP and VE psi is alpha and scale
 * is sigma_bar; EDM noise prediction has its own psi for the SDE and ODE.
 */
struct NpNode
{
    double t;
    double lambda;
    double psi;
    double scale;
};

NpNode np_node(Schedule const& sched, double t, LambdaVariant variant)
{
    double const lambda = sched.lambda_of_t(t, variant);
    if (sched.kind() != ScheduleKind::edm)
    {
        auto const sn = sched.alpha_sigma(t);
        return {t, lambda, sn.alpha, sn.sigma_bar};
    }
    double const sd = sched.sigma_data();
    double const r2 = t * t + sd * sd;
    if (variant == LambdaVariant::sde)
    {
        return {t, lambda, r2, t * std::sqrt(r2) / sd};
    }
    return {t, lambda, std::sqrt(r2), std::sqrt(r2) * std::atan(t / sd)};
}

//! Drift coefficient multiplying scale (e^h - 1) F: -2 / -1 for VP and VE.
double np_kappa(Schedule const& sched, LambdaVariant variant)
{
    double const k = variant == LambdaVariant::sde ? 2.0 : 1.0;
    return sched.kind() == ScheduleKind::edm ? k : -k;
}

struct DpNode
{
    double t;
    double lambda;
    double alpha;
    double sigma;
    double sigma_bar;
};

DpNode dp_node(Schedule const& sched, double t)
{
    auto const sn = sched.alpha_sigma(t);
    return {t, -std::log(sn.sigma), sn.alpha, sn.sigma, sn.sigma_bar};
}

double positive_step(double lambda_s, double lambda_t)
{
    double const h = lambda_t - lambda_s;
    if (!(h > 0))
    {
        throw GridError("step in lambda must be positive (h = "
                        + std::to_string(h) + ")");
    }
    return h;
}

class Stepper
{
  public:
    Stepper(SolverSpec const& spec,
            ScoreModel const& model,
            std::span<double> x,
            StepNoise& noise)
        : spec_(spec)
        , model_(model)
        , sched_(model.schedule())
        , x_(x)
        , d_(x.size())
        , noise_(noise)
    {
    }

    void run(double s, double t);

  private:
    Vec eval_f(std::span<double const> y, double t) const
    {
        Vec out(d_);
        model_.noise_pred(y, t, out);
        return out;
    }
    Vec eval_d(std::span<double const> y, double t) const
    {
        Vec out(d_);
        model_.data_pred(y, t, out);
        return out;
    }
    Vec draw(int stage_id)
    {
        Vec z(d_);
        noise_.normal(stage_id, z);
        return z;
    }

    void seeds1_np(double s, double t);
    void seeds1_dp(double s, double t);
    void seeds2(double s, double t);
    void three_stage(double s, double t, bool stochastic);
    void dpm1_np(double s, double t);
    void dpm1_dp(double s, double t);
    void dpm2_np(double s, double t);
    void dpm2_dp(double s, double t);
    void dpm4(double s, double t);
    void euler_maruyama(double s, double t);
    void exp_euler(double s, double t, bool lawson);
    void gddim(double s, double t);
    void ve2stage(double s, double t, bool stochastic);

    SolverSpec const& spec_;
    ScoreModel const& model_;
    Schedule const& sched_;
    std::span<double> x_;
    std::size_t d_;
    StepNoise& noise_;
};

void Stepper::run(double s, double t)
{
    if (!(t < s))
    {
        throw GridError("step must go backward in time (t < s)");
    }
    switch (spec_.family)
    {
        case SolverFamily::seeds1:
            return spec_.mode == PredictionMode::noise_pred
                       ? this->seeds1_np(s, t)
                       : this->seeds1_dp(s, t);
        case SolverFamily::seeds2:
            return this->seeds2(s, t);
        case SolverFamily::seeds3:
            return this->three_stage(s, t, true);
        case SolverFamily::dpm1:
            return spec_.mode == PredictionMode::noise_pred
                       ? this->dpm1_np(s, t)
                       : this->dpm1_dp(s, t);
        case SolverFamily::dpm2:
            return spec_.mode == PredictionMode::noise_pred
                       ? this->dpm2_np(s, t)
                       : this->dpm2_dp(s, t);
        case SolverFamily::dpm3:
            return this->three_stage(s, t, false);
        case SolverFamily::dpm4:
            return this->dpm4(s, t);
        case SolverFamily::euler_maruyama:
            return this->euler_maruyama(s, t);
        case SolverFamily::exp_euler_etd:
            return this->exp_euler(s, t, false);
        case SolverFamily::exp_euler_lawson:
            return this->exp_euler(s, t, true);
        case SolverFamily::gddim:
            return this->gddim(s, t);
        case SolverFamily::ve2stage_ode:
            return this->ve2stage(s, t, false);
        case SolverFamily::ve2stage_sde:
            return this->ve2stage(s, t, true);
    }
}

void Stepper::seeds1_np(double s, double t)
{
    auto const v = LambdaVariant::sde;
    auto const ns = np_node(sched_, s, v);
    auto const nt = np_node(sched_, t, v);
    double const h = positive_step(ns.lambda, nt.lambda);
    double const kappa = np_kappa(sched_, v);
    auto const f = this->eval_f(x_, s);
    auto const z = this->draw(stage::z1);
    double const lin = nt.psi / ns.psi;
    double const drift = kappa * nt.scale * std::expm1(h);
    double const diff = nt.scale * std::sqrt(std::expm1(2 * h));
    for (std::size_t i = 0; i < d_; ++i)
    {
        x_[i] = lin * x_[i] + drift * f[i] - diff * z[i];
    }
}

void Stepper::seeds1_dp(double s, double t)
{
    auto const ns = dp_node(sched_, s);
    auto const nt = dp_node(sched_, t);
    double const h = positive_step(ns.lambda, nt.lambda);
    auto const dx = this->eval_d(x_, s);
    auto const z = this->draw(stage::z1);
    double const ratio = nt.sigma / ns.sigma;
    double const lin = ratio * ratio * nt.alpha / ns.alpha;
    double const one_minus = -std::expm1(-2 * h);
    double const drift = nt.alpha * one_minus;
    double const diff = nt.sigma_bar * std::sqrt(one_minus);
    for (std::size_t i = 0; i < d_; ++i)
    {
        x_[i] = lin * x_[i] + drift * dx[i] + diff * z[i];
    }
}

void Stepper::seeds2(double s, double t)
{
    auto const v = LambdaVariant::sde;
    auto const ns = np_node(sched_, s, v);
    auto const nt = np_node(sched_, t, v);
    double const h = positive_step(ns.lambda, nt.lambda);
    auto const n1 = np_node(sched_, sched_.t_of_lambda(ns.lambda + 0.5 * h, v), v);
    double const kappa = np_kappa(sched_, v);
    auto const f = this->eval_f(x_, s);
    auto const nz = staged_noise_seeds2(noise_, n1.scale, nt.scale, h, d_);
    Vec u(d_);
    double const lin1 = n1.psi / ns.psi;
    double const drift1 = kappa * n1.scale * std::expm1(0.5 * h);
    for (std::size_t i = 0; i < d_; ++i)
    {
        u[i] = lin1 * x_[i] + drift1 * f[i] - nz.mid[i];
    }
    auto const fu = this->eval_f(u, n1.t);
    double const lin = nt.psi / ns.psi;
    double const drift = kappa * nt.scale * std::expm1(h);
    for (std::size_t i = 0; i < d_; ++i)
    {
        x_[i] = lin * x_[i] + drift * fu[i] - nz.full[i];
    }
}

void Stepper::three_stage(double s, double t, bool stochastic)
{
    auto const v = stochastic ? LambdaVariant::sde : LambdaVariant::ode;
    double const r1 = spec_.r1;
    double const r2 = spec_.r2;
    auto const ns = np_node(sched_, s, v);
    auto const nt = np_node(sched_, t, v);
    double const h = positive_step(ns.lambda, nt.lambda);
    auto const n1 = np_node(sched_, sched_.t_of_lambda(ns.lambda + r1 * h, v), v);
    auto const n2 = np_node(sched_, sched_.t_of_lambda(ns.lambda + r2 * h, v), v);
    double const kappa = np_kappa(sched_, v);

    Seeds3Noise nz;
    if (stochastic)
    {
        nz = staged_noise_seeds3(
            noise_, n1.scale, n2.scale, nt.scale, h, r1, r2, d_);
    }
    else
    {
        nz = {Vec(d_, 0.0), Vec(d_, 0.0), Vec(d_, 0.0)};
    }

    auto const f = this->eval_f(x_, s);
    Vec u(d_);
    {
        double const lin = n1.psi / ns.psi;
        double const drift = kappa * n1.scale * std::expm1(r1 * h);
        for (std::size_t i = 0; i < d_; ++i)
        {
            u[i] = lin * x_[i] + drift * f[i] - nz.n1[i];
        }
    }
    auto const f1 = this->eval_f(u, n1.t);
    {
        // (e^{r2 h} - 1)/(r2 h) - 1 = r2 h phi_2(r2 h)
        double const lin = n2.psi / ns.psi;
        double const drift = kappa * n2.scale * std::expm1(r2 * h);
        double const corr = kappa * (n2.scale * r2 / r1)
                            * (r2 * h * phi(2, r2 * h));
        for (std::size_t i = 0; i < d_; ++i)
        {
            u[i] = lin * x_[i] + drift * f[i] + corr * (f1[i] - f[i])
                   - nz.a[i];
        }
    }
    auto const f2 = this->eval_f(u, n2.t);
    double const lin = nt.psi / ns.psi;
    double const drift = kappa * nt.scale * std::expm1(h);
    double const corr = kappa * (nt.scale / r2) * (h * phi(2, h));
    for (std::size_t i = 0; i < d_; ++i)
    {
        x_[i] = lin * x_[i] + drift * f[i] + corr * (f2[i] - f[i]) - nz.b[i];
    }
}

void Stepper::dpm1_np(double s, double t)
{
    auto const v = LambdaVariant::ode;
    auto const ns = np_node(sched_, s, v);
    auto const nt = np_node(sched_, t, v);
    double const h = positive_step(ns.lambda, nt.lambda);
    auto const f = this->eval_f(x_, s);
    double const lin = nt.psi / ns.psi;
    double const drift = np_kappa(sched_, v) * nt.scale * std::expm1(h);
    for (std::size_t i = 0; i < d_; ++i)
    {
        x_[i] = lin * x_[i] + drift * f[i];
    }
}

void Stepper::dpm1_dp(double s, double t)
{
    auto const ns = dp_node(sched_, s);
    auto const nt = dp_node(sched_, t);
    double const h = positive_step(ns.lambda, nt.lambda);
    auto const dx = this->eval_d(x_, s);
    double const lin = nt.sigma_bar / ns.sigma_bar;
    double const drift = -nt.alpha * std::expm1(-h);
    for (std::size_t i = 0; i < d_; ++i)
    {
        x_[i] = lin * x_[i] + drift * dx[i];
    }
}

void Stepper::dpm2_np(double s, double t)
{
    auto const v = LambdaVariant::ode;
    double const c2 = spec_.c2;
    auto const ns = np_node(sched_, s, v);
    auto const nt = np_node(sched_, t, v);
    double const h = positive_step(ns.lambda, nt.lambda);
    double const kappa = np_kappa(sched_, v);
    auto const f = this->eval_f(x_, s);
    Vec u(d_);
    double const tm = c2 < 1 ? sched_.t_of_lambda(ns.lambda + c2 * h, v) : t;
    auto const n1 = np_node(sched_, tm, v);
    double const lin1 = n1.psi / ns.psi;
    double const drift1 = kappa * n1.scale * std::expm1(c2 * h);
    for (std::size_t i = 0; i < d_; ++i)
    {
        u[i] = lin1 * x_[i] + drift1 * f[i];
    }
    auto const fu = this->eval_f(u, n1.t);
    double const lin = nt.psi / ns.psi;
    double const drift = kappa * nt.scale * std::expm1(h);
    double const corr = drift / (2 * c2);
    for (std::size_t i = 0; i < d_; ++i)
    {
        x_[i] = lin * x_[i] + drift * f[i] + corr * (fu[i] - f[i]);
    }
}

void Stepper::dpm2_dp(double s, double t)
{
    double const c2 = spec_.c2;
    auto const ns = dp_node(sched_, s);
    auto const nt = dp_node(sched_, t);
    double const h = positive_step(ns.lambda, nt.lambda);
    double const tm
        = c2 < 1
              ? sched_.t_of_lambda(ns.lambda + c2 * h, LambdaVariant::log_sigma)
              : t;
    auto const n1 = dp_node(sched_, tm);
    auto const dx = this->eval_d(x_, s);
    Vec u(d_);
    double const lin1 = n1.sigma_bar / ns.sigma_bar;
    double const drift1 = -n1.alpha * std::expm1(-c2 * h);
    for (std::size_t i = 0; i < d_; ++i)
    {
        u[i] = lin1 * x_[i] + drift1 * dx[i];
    }
    auto const du = this->eval_d(u, n1.t);
    double const lin = nt.sigma_bar / ns.sigma_bar;
    double const drift = -nt.alpha * std::expm1(-h);
    double const w = 1 / (2 * c2);
    for (std::size_t i = 0; i < d_; ++i)
    {
        x_[i] = lin * x_[i] + drift * ((1 - w) * dx[i] + w * du[i]);
    }
}

void Stepper::dpm4(double s, double t)
{
    auto const v = LambdaVariant::ode;
    double const r = spec_.c2;
    auto const ns = np_node(sched_, s, v);
    auto const nt = np_node(sched_, t, v);
    double const h = positive_step(ns.lambda, nt.lambda);
    double const kappa = np_kappa(sched_, v);
    // Stages 2, 3 and 5 sit at lambda_s + r h, stage 4 at the end point
    auto const nr = np_node(sched_, sched_.t_of_lambda(ns.lambda + r * h, v), v);
    auto const& n4 = nt;

    double const em_r = std::expm1(r * h);
    double const em_1 = std::expm1(h);
    double const phi1m1 = h * phi(2, h);  // (e^h - 1)/h - 1
    double const c_k3 = 4 * r * phi(1, r * h) - 2;
    // Stage 5 follows row 5 of the five-stage exponential RK tableau; at
    // r = 1/2 this is a_52 = a_53 and a_54 = phi_2(h/2)/4 - a_52
    double const a52 = r * phi(2, r * h) - phi(3, h) + r * r * phi(2, h)
                       - r * phi(3, r * h);
    double const a54 = r * r * phi(2, r * h) - 2 * r * a52;
    double const c_e = 4 * phi(2, h) - 2;

    double const lin_r = nr.psi / ns.psi;
    double const lin_t = nt.psi / ns.psi;
    double const sr = kappa * nr.scale;
    double const st = kappa * nt.scale;

    auto const k1 = this->eval_f(x_, s);
    Vec k(d_);
    for (std::size_t i = 0; i < d_; ++i)
    {
        k[i] = lin_r * x_[i] + sr * em_r * k1[i];
    }
    auto const e2 = this->eval_f(k, nr.t);
    for (std::size_t i = 0; i < d_; ++i)
    {
        k[i] = lin_r * x_[i] + sr * em_r * k1[i]
               + sr * c_k3 * (e2[i] - k1[i]);
    }
    auto const e3 = this->eval_f(k, nr.t);
    for (std::size_t i = 0; i < d_; ++i)
    {
        k[i] = (n4.psi / ns.psi) * x_[i] + kappa * n4.scale * em_1 * k1[i]
               + kappa * n4.scale * phi1m1 * (e3[i] + e2[i] - 2 * k1[i]);
    }
    auto const e4 = this->eval_f(k, n4.t);
    for (std::size_t i = 0; i < d_; ++i)
    {
        k[i] = lin_r * x_[i]
               + sr * (em_r * k1[i] + h * a52 * (e2[i] + e3[i] - 2 * k1[i])
                       + h * a54 * (e4[i] - k1[i]));
    }
    auto const e5 = this->eval_f(k, nr.t);
    for (std::size_t i = 0; i < d_; ++i)
    {
        double const dd = st * em_1 * k1[i]
                          + st * phi1m1 * (4 * e5[i] - e4[i] - 3 * k1[i]);
        double const ee = st * c_e * (k1[i] + e4[i] - 2 * e5[i]);
        x_[i] = lin_t * x_[i] + dd + ee;
    }
}

void Stepper::euler_maruyama(double s, double t)
{
    double const dt = t - s;
    double const f = sched_.drift_rate(s);
    double const g2 = sched_.diffusion_sq(s);
    double const ell = spec_.ell;
    Vec score(d_);
    model_.score(x_, s, score);
    auto const z = this->draw(stage::z1);
    double const diff = std::sqrt(ell * g2 * std::fabs(dt));
    for (std::size_t i = 0; i < d_; ++i)
    {
        double const drift = f * x_[i] - 0.5 * (1 + ell) * g2 * score[i];
        x_[i] += drift * dt + diff * z[i];
    }
}

void Stepper::exp_euler(double s, double t, bool lawson)
{
    // Linear part f x is integrated exactly through Phi = alpha_t / alpha_s;
    // the score term of the probability flow is frozen at s.
    double const dt = t - s;
    double const log_phi = std::log(sched_.alpha(t) / sched_.alpha(s));
    double const lin = std::exp(log_phi);
    double const g2 = sched_.diffusion_sq(s);
    Vec score(d_);
    model_.score(x_, s, score);
    double const weight = lawson ? lin * dt : dt * phi(1, log_phi);
    for (std::size_t i = 0; i < d_; ++i)
    {
        x_[i] = lin * x_[i] + weight * (-0.5 * g2 * score[i]);
    }
}

void Stepper::gddim(double s, double t)
{
    auto const ns = dp_node(sched_, s);
    auto const nt = dp_node(sched_, t);
    double const h = positive_step(ns.lambda, nt.lambda);
    auto const eps = this->eval_f(x_, s);
    auto const z = this->draw(stage::z1);
    double const lin = nt.alpha / ns.alpha;
    double const coef = nt.sigma_bar
                        * (nt.sigma / ns.sigma - ns.sigma / nt.sigma);
    double const diff = nt.sigma_bar * std::sqrt(-std::expm1(-2 * h));
    for (std::size_t i = 0; i < d_; ++i)
    {
        x_[i] = lin * x_[i] + coef * eps[i] + diff * z[i];
    }
}

void Stepper::ve2stage(double s, double t, bool stochastic)
{
    double const r = spec_.c2;
    auto const ns = dp_node(sched_, s);
    auto const nt = dp_node(sched_, t);
    double const h = positive_step(ns.lambda, nt.lambda);
    double const t1
        = r < 1 ? sched_.t_of_lambda(ns.lambda + r * h, LambdaVariant::log_sigma)
                : t;
    auto const n1 = dp_node(sched_, t1);
    auto const dx = this->eval_d(x_, s);
    double const w = 1 / (2 * r);
    Vec x1(d_);
    if (!stochastic)
    {
        double const lin1 = n1.sigma / ns.sigma;
        double const drift1 = -std::expm1(-r * h);
        for (std::size_t i = 0; i < d_; ++i)
        {
            x1[i] = lin1 * x_[i] + drift1 * dx[i];
        }
        auto const d1 = this->eval_d(x1, n1.t);
        double const lin = nt.sigma / ns.sigma;
        double const drift = -std::expm1(-h);
        if (spec_.ve_form == VeOdeForm::a)
        {
            for (std::size_t i = 0; i < d_; ++i)
            {
                x_[i] = lin * x_[i] + drift * ((1 - w) * dx[i] + w * d1[i]);
            }
        }
        else
        {
            // (e^{-h} - 1)/h + 1 = h phi_2(-h)
            double const corr = h * phi(2, -h) / r;
            for (std::size_t i = 0; i < d_; ++i)
            {
                x_[i] = lin * x_[i] + drift * dx[i] + corr * (d1[i] - dx[i]);
            }
        }
        return;
    }
    auto const z1 = this->draw(stage::z1);
    auto const z2 = this->draw(stage::z2);
    double const one_minus_r = -std::expm1(-2 * r * h);
    {
        double const ratio = n1.sigma / ns.sigma;
        double const noise1 = n1.sigma * std::sqrt(one_minus_r);
        for (std::size_t i = 0; i < d_; ++i)
        {
            x1[i] = ratio * ratio * x_[i] + one_minus_r * dx[i]
                    + noise1 * z1[i];
        }
    }
    auto const d1 = this->eval_d(x1, n1.t);
    double const ratio = nt.sigma / ns.sigma;
    double const drift = -std::expm1(-2 * h);
    double const c1 = nt.sigma * sqrt_exp2_diff(-r * h, -h);
    double const c2 = nt.sigma * std::sqrt(one_minus_r);
    for (std::size_t i = 0; i < d_; ++i)
    {
        x_[i] = ratio * ratio * x_[i] + drift * ((1 - w) * dx[i] + w * d1[i])
                + c1 * z1[i] + c2 * z2[i];
    }
}

}  // namespace

char const* to_string(SolverFamily family)
{
    switch (family)
    {
        case SolverFamily::seeds1:
            return "seeds1";
        case SolverFamily::seeds2:
            return "seeds2";
        case SolverFamily::seeds3:
            return "seeds3";
        case SolverFamily::dpm1:
            return "dpm1";
        case SolverFamily::dpm2:
            return "dpm2";
        case SolverFamily::dpm3:
            return "dpm3";
        case SolverFamily::dpm4:
            return "dpm4";
        case SolverFamily::euler_maruyama:
            return "euler_maruyama";
        case SolverFamily::exp_euler_etd:
            return "exp_euler_etd";
        case SolverFamily::exp_euler_lawson:
            return "exp_euler_lawson";
        case SolverFamily::gddim:
            return "gddim";
        case SolverFamily::ve2stage_ode:
            return "ve2stage_ode";
        case SolverFamily::ve2stage_sde:
            return "ve2stage_sde";
    }
    return "?";
}

char const* to_string(PredictionMode mode)
{
    return mode == PredictionMode::noise_pred ? "np" : "dp";
}

std::optional<SolverFamily> parse_family(std::string const& name)
{
    for (int i = 0; i <= static_cast<int>(SolverFamily::ve2stage_sde); ++i)
    {
        auto const f = static_cast<SolverFamily>(i);
        if (name == to_string(f))
        {
            return f;
        }
    }
    if (name == "em")
    {
        return SolverFamily::euler_maruyama;
    }
    return std::nullopt;
}

int evals_per_step(SolverFamily family)
{
    switch (family)
    {
        case SolverFamily::seeds2:
        case SolverFamily::dpm2:
        case SolverFamily::ve2stage_ode:
        case SolverFamily::ve2stage_sde:
            return 2;
        case SolverFamily::seeds3:
        case SolverFamily::dpm3:
            return 3;
        case SolverFamily::dpm4:
            return 5;
        default:
            return 1;
    }
}

bool is_stochastic(SolverSpec const& spec)
{
    switch (spec.family)
    {
        case SolverFamily::seeds1:
        case SolverFamily::seeds2:
        case SolverFamily::seeds3:
        case SolverFamily::gddim:
        case SolverFamily::ve2stage_sde:
            return spec.noise;
        case SolverFamily::euler_maruyama:
            return spec.noise && spec.ell > 0;
        default:
            return false;
    }
}

void validate(SolverSpec const& spec, Schedule const& sched)
{
    auto const name = std::string(to_string(spec.family));
    bool const np_only = spec.family == SolverFamily::seeds2
                         || spec.family == SolverFamily::seeds3
                         || spec.family == SolverFamily::dpm3
                         || spec.family == SolverFamily::dpm4;
    if (np_only && spec.mode != PredictionMode::noise_pred)
    {
        throw ConfigError("solver.mode: " + name
                          + " is only available in noise prediction mode");
    }
    if (spec.family == SolverFamily::seeds3 || spec.family == SolverFamily::dpm3)
    {
        if (!(0 < spec.r1 && spec.r1 < spec.r2 && spec.r2 < 1))
        {
            throw ConfigError("solver.r1/r2: " + name
                              + " requires 0 < r1 < r2 < 1");
        }
    }
    if (!(0 < spec.c2 && spec.c2 <= 1))
    {
        throw ConfigError("solver.c2: requires 0 < c2 <= 1");
    }
    if (spec.family == SolverFamily::gddim && !sched.is_vp())
    {
        throw ConfigError("solver.family: gddim requires a VP schedule");
    }
    if ((spec.family == SolverFamily::ve2stage_ode
         || spec.family == SolverFamily::ve2stage_sde)
        && sched.is_vp())
    {
        throw ConfigError("solver.family: " + name
                          + " requires a VE or EDM schedule");
    }
    if (spec.family == SolverFamily::ve2stage_ode
        || spec.family == SolverFamily::ve2stage_sde)
    {
        if (spec.mode != PredictionMode::data_pred)
        {
            throw ConfigError("solver.mode: " + name
                              + " is a data prediction scheme");
        }
    }
    if (!(spec.ell >= 0) || !std::isfinite(spec.ell))
    {
        throw ConfigError("solver.ell: must be non-negative");
    }
    if (spec.churn)
    {
        auto const& c = *spec.churn;
        if (!(c.s_churn >= 0) || !(c.s_tmin <= c.s_tmax) || !(c.s_noise > 0))
        {
            throw ConfigError(
                "solver.churn: requires S_churn >= 0, S_tmin <= S_tmax and "
                "S_noise > 0");
        }
    }
}

void step(SolverSpec const& spec,
          ScoreModel const& model,
          std::span<double> x,
          double s,
          double t,
          StepNoise& noise)
{
    if (!spec.noise)
    {
        ZeroStepNoise zero;
        Stepper(spec, model, x, zero).run(s, t);
        return;
    }
    Stepper(spec, model, x, noise).run(s, t);
}

double churn_inject(ChurnParams const& churn,
                    int steps,
                    Schedule const& sched,
                    std::span<double> x,
                    double t,
                    StepNoise& noise)
{
    double const sigma = sched.sigma(t);
    if (churn.s_churn <= 0 || sigma < churn.s_tmin || sigma > churn.s_tmax)
    {
        return t;
    }
    double const gamma
        = std::min(churn.s_churn / steps, std::numbers::sqrt2 - 1);
    double const t_max = sched.domain().t_max;
    double t_hat = std::min(sched.t_of_sigma(sigma * (1 + gamma)), t_max);
    if (!(t_hat > t))
    {
        return t;
    }
    auto const sn_hat = sched.alpha_sigma(t_hat);
    double const alpha = sched.alpha(t);
    double const extra = std::sqrt(
        std::max(sn_hat.sigma * sn_hat.sigma - sigma * sigma, 0.0));
    std::vector<double> z(x.size());
    noise.normal(stage::churn, z);
    double const lin = sn_hat.alpha / alpha;
    double const amp = sn_hat.alpha * churn.s_noise * extra;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        x[i] = lin * x[i] + amp * z[i];
    }
    return t_hat;
}

void sample_path(SolverSpec const& spec,
                 ScoreModel const& model,
                 StepGrid const& grid,
                 std::span<double> x,
                 std::uint64_t seed,
                 std::uint32_t path,
                 SampleOptions const& opts,
                 std::vector<double>* trajectory)
{
    auto const& times = grid.times();
    std::size_t const m = grid.steps();
    if (trajectory)
    {
        trajectory->assign(x.begin(), x.end());
        trajectory->reserve((m + 1) * x.size());
    }
    for (std::size_t i = 1; i <= m; ++i)
    {
        if (i < m || opts.solve_final_step)
        {
            KeyedStepNoise noise(seed, path, static_cast<std::uint32_t>(i));
            double s = times[i - 1];
            if (spec.churn && spec.noise)
            {
                s = churn_inject(*spec.churn, static_cast<int>(m),
                                 model.schedule(), x, s, noise);
            }
            step(spec, model, x, s, times[i], noise);
        }
        if (trajectory)
        {
            trajectory->insert(trajectory->end(), x.begin(), x.end());
        }
    }
}

void draw_initial(ScoreModel const& model,
                  double t0,
                  InitKind init,
                  std::uint64_t seed,
                  std::uint32_t path,
                  std::span<double> out)
{
    RngStream rng(seed, path, 0, stage::init);
    auto const sn = model.schedule().alpha_sigma(t0);
    if (init == InitKind::prior || model.is_zero())
    {
        rng.gauss(out);
        for (double& v : out)
        {
            v *= sn.sigma_bar;
        }
        return;
    }
    auto const& comps = model.data()->components();
    std::size_t k = 0;
    if (comps.size() > 1)
    {
        double u = rng.uniform();
        while (k + 1 < comps.size() && u >= comps[k].weight)
        {
            u -= comps[k].weight;
            ++k;
        }
    }
    rng.gauss(out);
    auto const& c = comps[k];
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        double const sd = std::sqrt(sn.alpha * sn.alpha * c.var[i]
                                    + sn.sigma_bar * sn.sigma_bar);
        out[i] = sn.alpha * c.mean[i] + sd * out[i];
    }
}

void parallel_for_paths(std::size_t n_paths,
                        unsigned workers,
                        std::function<void(std::size_t)> const& fn)
{
    workers = std::max(1u, workers);
    if (workers == 1 || n_paths < 2)
    {
        for (std::size_t p = 0; p < n_paths; ++p)
        {
            fn(p);
        }
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    std::size_t const n_workers = std::min<std::size_t>(workers, n_paths);
    for (std::size_t w = 0; w < n_workers; ++w)
    {
        pool.emplace_back([&, w] {
            for (std::size_t p = w; p < n_paths; p += n_workers)
            {
                try
                {
                    fn(p);
                }
                catch (...)
                {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                    {
                        error = std::current_exception();
                    }
                    return;
                }
            }
        });
    }
    for (auto& th : pool)
    {
        th.join();
    }
    if (error)
    {
        std::rethrow_exception(error);
    }
}

Ensemble sample_ensemble(SolverSpec const& spec,
                         ScoreModel const& model,
                         StepGrid const& grid,
                         std::size_t n_paths,
                         std::uint64_t seed,
                         InitKind init,
                         unsigned workers,
                         bool keep_trajectories,
                         SampleOptions const& opts)
{
    validate(spec, model.schedule());
    std::size_t const d = model.dim();
    std::size_t const nodes = grid.steps() + 1;
    Ensemble out;
    out.n_paths = n_paths;
    out.dim = d;
    out.terminal.assign(n_paths * d, 0.0);
    if (keep_trajectories)
    {
        out.trajectories.assign(n_paths * nodes * d, 0.0);
    }
    std::uint64_t const before = model.nfe();
    parallel_for_paths(n_paths, workers, [&](std::size_t p) {
        auto const path = static_cast<std::uint32_t>(p);
        std::span<double> x(out.terminal.data() + p * d, d);
        draw_initial(model, grid.times().front(), init, seed, path, x);
        std::vector<double> traj;
        sample_path(spec, model, grid, x, seed, path, opts,
                    keep_trajectories ? &traj : nullptr);
        if (keep_trajectories)
        {
            std::copy(traj.begin(), traj.end(),
                      out.trajectories.begin()
                          + static_cast<std::ptrdiff_t>(p * nodes * d));
        }
    });
    std::uint64_t const used = model.nfe() - before;
    out.nfe = n_paths ? used / n_paths : 0;
    return out;
}

}  // namespace seeds
