// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
#include "seeds/schedules.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "seeds/error.hpp"

namespace seeds
{
namespace
{
constexpr double domain_tol = 1e-10;
constexpr double inf = std::numeric_limits<double>::infinity();

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}
}  // namespace

char const* to_string(ScheduleKind kind)
{
    switch (kind)
    {
        case ScheduleKind::vp_linear:
            return "vp_linear";
        case ScheduleKind::vp_cosine:
            return "vp_cosine";
        case ScheduleKind::ve:
            return "ve";
        case ScheduleKind::edm:
            return "edm";
    }
    return "?";
}

char const* to_string(LambdaVariant variant)
{
    switch (variant)
    {
        case LambdaVariant::sde:
            return "sde";
        case LambdaVariant::ode:
            return "ode";
        case LambdaVariant::log_sigma:
            return "log_sigma";
    }
    return "?";
}

Schedule::Schedule(ScheduleKind kind, double p0, double p1, TimeDomain domain)
    : kind_(kind), p0_(p0), p1_(p1), domain_(domain)
{
    if (!(domain.t_end > 0) || !(domain.t_max > domain.t_end)
        || !std::isfinite(domain.t_max))
    {
        throw ConfigError("schedule time domain must satisfy 0 < t_end < t_max");
    }
}

Schedule Schedule::vp_linear(double beta_d, double beta_m, TimeDomain domain)
{
    if (!(beta_d > 0) || !(beta_m > 0))
    {
        throw ConfigError("vp_linear requires beta_d > 0 and beta_m > 0");
    }
    return Schedule(ScheduleKind::vp_linear, beta_d, beta_m, domain);
}

Schedule Schedule::vp_cosine(double shift, TimeDomain domain)
{
    if (!(shift > 0))
    {
        throw ConfigError("vp_cosine requires a positive shift s");
    }
    // alpha_t vanishes at t = 1: the process time must stay below it
    if (!(domain.t_max < 1.0))
    {
        throw ConfigError("vp_cosine requires t_max < 1");
    }
    return Schedule(ScheduleKind::vp_cosine, shift, 0, domain);
}

Schedule Schedule::ve(TimeDomain domain)
{
    return Schedule(ScheduleKind::ve, 0, 0, domain);
}

Schedule Schedule::edm(double sigma_data, TimeDomain domain)
{
    if (!(sigma_data > 0))
    {
        throw ConfigError("edm requires sigma_data > 0");
    }
    return Schedule(ScheduleKind::edm, sigma_data, 0, domain);
}

void Schedule::check_domain(double t) const
{
    if (!(t >= domain_.t_end * (1 - domain_tol))
        || !(t <= domain_.t_max * (1 + domain_tol)))
    {
        throw DomainError("time " + fmt(t) + " outside schedule domain ["
                          + fmt(domain_.t_end) + ", " + fmt(domain_.t_max)
                          + "]");
    }
}

double Schedule::cosine_theta(double t) const
{
    return 0.5 * std::numbers::pi * t / (1 + p0_);
}

ScaleNoise Schedule::alpha_sigma(double t) const
{
    this->check_domain(t);
    switch (kind_)
    {
        case ScheduleKind::vp_linear: {
            double const a = 0.5 * p0_ * t * t + p1_ * t;
            return {std::exp(-0.5 * a),
                    std::sqrt(std::expm1(a)),
                    std::sqrt(-std::expm1(-a))};
        }
        case ScheduleKind::vp_cosine: {
            // Offsets from theta_0 keep small t exact:
            // sigma^2 = sin(u) sin(2 theta_0 + u) / cos^2(theta_0 + u)
            double const theta0 = this->cosine_theta(p0_);
            double const u = this->cosine_theta(t);
            double const prod = std::sin(u) * std::sin(2 * theta0 + u);
            double const cos_theta = std::cos(theta0 + u);
            double const root = std::sqrt(prod);
            return {cos_theta / std::cos(theta0),
                    root / cos_theta,
                    root / std::cos(theta0)};
        }
        case ScheduleKind::ve:
        case ScheduleKind::edm:
            return {1.0, t, t};
    }
    return {};
}

double Schedule::t_of_sigma(double sigma) const
{
    if (!(sigma >= 0))
    {
        throw DomainError("noise level must be non-negative");
    }
    if (sigma == 0)
    {
        return 0;
    }
    switch (kind_)
    {
        case ScheduleKind::vp_linear:
        case ScheduleKind::vp_cosine:
            return this->t_of_lambda(-std::log(sigma), LambdaVariant::log_sigma);
        case ScheduleKind::ve:
        case ScheduleKind::edm:
            return sigma;
    }
    return 0;
}

double Schedule::lambda_of_t(double t, LambdaVariant variant) const
{
    if (!(t > 0))
    {
        throw DomainError("lambda requires t > 0, got " + fmt(t));
    }
    if (kind_ == ScheduleKind::edm && variant != LambdaVariant::log_sigma)
    {
        this->check_domain(t);
        double const sd = p0_;
        if (variant == LambdaVariant::sde)
        {
            return -std::log(t) + std::log(sd)
                   + 0.5 * std::log(t * t + sd * sd);
        }
        return -std::log(std::atan(t / sd));
    }
    return -std::log(this->alpha_sigma(t).sigma);
}

double Schedule::t_of_lambda(double lambda, LambdaVariant variant) const
{
    if (std::isnan(lambda))
    {
        throw DomainError("lambda is NaN");
    }
    if (lambda == inf)
    {
        return 0;
    }
    switch (kind_)
    {
        case ScheduleKind::vp_linear: {
            // alpha_tilde(t) = log(1 + sigma^2), solved as a quadratic in t
            double const big = std::log1p(std::exp(-2 * lambda));
            return 2 * big / (std::sqrt(p1_ * p1_ + 2 * p0_ * big) + p1_);
        }
        case ScheduleKind::vp_cosine: {
            double const s = p0_;
            double const theta0 = this->cosine_theta(s);
            double const sigma2 = std::exp(-2 * lambda);
            double const arg = std::exp(-0.5 * std::log1p(sigma2)
                                        + std::log(std::cos(theta0)));
            double u = std::acos(std::min(arg, 1.0)) - theta0;
            if (!(u > 0))
            {
                u = sigma2 / (2 * std::sin(2 * theta0));
            }
            // Newton on sin(u) sin(2 theta_0 + u) - sigma^2 cos^2(theta_0 + u)
            for (int iter = 0; iter < 4; ++iter)
            {
                double const theta = theta0 + u;
                double const resid = std::sin(u) * std::sin(2 * theta0 + u)
                                     - sigma2 * std::cos(theta) * std::cos(theta);
                double const deriv = std::sin(2 * theta) * (1 + sigma2);
                u -= resid / deriv;
            }
            return 2 * (1 + s) * u / std::numbers::pi;
        }
        case ScheduleKind::ve:
            return std::exp(-lambda);
        case ScheduleKind::edm: {
            double const sd = p0_;
            double const e = std::exp(-lambda);
            if (variant == LambdaVariant::log_sigma)
            {
                return e;
            }
            if (!(e < this->max_exp_neg_lambda(variant)))
            {
                throw DomainError("lambda " + fmt(lambda)
                                  + " outside the image of the edm "
                                  + to_string(variant) + " change of variables");
            }
            if (variant == LambdaVariant::sde)
            {
                // 1 - sd^2 e^{-2 lambda} cancels as t grows
                double const u = sd * sd * e * e;
                double const rest = -std::expm1(2 * (std::log(sd) - lambda));
                return sd * std::sqrt(u / rest);
            }
            return sd * std::tan(e);
        }
    }
    return 0;
}

double Schedule::max_exp_neg_lambda(LambdaVariant variant) const
{
    if (kind_ != ScheduleKind::edm || variant == LambdaVariant::log_sigma)
    {
        return inf;
    }
    return variant == LambdaVariant::sde ? 1 / p0_ : 0.5 * std::numbers::pi;
}

double Schedule::drift_rate(double t) const
{
    this->check_domain(t);
    switch (kind_)
    {
        case ScheduleKind::vp_linear:
            return -0.5 * (p0_ * t + p1_);
        case ScheduleKind::vp_cosine: {
            double const theta
                = this->cosine_theta(p0_) + this->cosine_theta(t);
            return -std::tan(theta) * 0.5 * std::numbers::pi / (1 + p0_);
        }
        case ScheduleKind::ve:
        case ScheduleKind::edm:
            return 0;
    }
    return 0;
}

double Schedule::diffusion_sq(double t) const
{
    if (this->is_vp())
    {
        // alpha^2 + sigma_bar^2 = 1 gives g^2 = -2 f
        return -2 * this->drift_rate(t);
    }
    this->check_domain(t);
    return 2 * t;
}

Preconditioning Schedule::precond_coeffs(double t) const
{
    auto const [alpha, sigma, sigma_bar] = this->alpha_sigma(t);
    (void)sigma_bar;
    switch (kind_)
    {
        case ScheduleKind::vp_linear:
        case ScheduleKind::vp_cosine:
            return {1.0, -sigma, alpha, t};
        case ScheduleKind::ve:
            return {1.0, -sigma, 1.0, t};
        case ScheduleKind::edm: {
            double const sd = p0_;
            double const r = std::sqrt(t * t + sd * sd);
            return {sd * sd / (t * t + sd * sd), t * sd / r, 1 / r,
                    0.25 * std::log(t)};
        }
    }
    return {};
}

std::string Schedule::describe() const
{
    std::ostringstream os;
    os << to_string(kind_) << '(';
    switch (kind_)
    {
        case ScheduleKind::vp_linear:
            os << "beta_d=" << p0_ << ", beta_m=" << p1_;
            break;
        case ScheduleKind::vp_cosine:
            os << "s=" << p0_;
            break;
        case ScheduleKind::ve:
            break;
        case ScheduleKind::edm:
            os << "sigma_data=" << p0_;
            break;
    }
    os << ") on [" << domain_.t_end << ", " << domain_.t_max << ']';
    return os.str();
}

}  // namespace seeds
