// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
//! \file seeds/schedules.hpp
//! Noise schedules, scalings and the half log-SNR change of variables.
#pragma once

#include <string>

namespace seeds
{

enum class ScheduleKind
{
    vp_linear,
    vp_cosine,
    ve,
    edm,
};

/*!
 * Which change of variables to use for lambda.
 *
 * VP and VE schedules always use lambda = -log(sigma). The EDM schedule has
 * two noise-prediction variants (one for the reverse SDE, one for the
 * probability flow ODE); its data-prediction solvers use plain -log(sigma),
 * which is what \c log_sigma selects.
 */
enum class LambdaVariant
{
    sde,
    ode,
    log_sigma,
};

struct ScaleNoise
{
    double alpha;
    double sigma;
    double sigma_bar;  //!< alpha * sigma
};

//! Preconditioning D = c1 x + c2 F(c3 x; c4).
struct Preconditioning
{
    double c1;
    double c2;
    double c3;
    double c4;
};

//! Closed interval of process time on which the schedule is evaluated.
struct TimeDomain
{
    double t_end;
    double t_max;
};

/*!
 * Immutable description of a diffusion framework: scaling alpha_t, noise
 * level sigma_t and everything derived from them.
 *
 * Conventions: the state is x_t = alpha_t (x_0 + sigma_t n), so the
 * perturbation kernel has standard deviation sigma_bar_t = alpha_t sigma_t.
 * For VP schedules alpha_t = 1 / sqrt(sigma_t^2 + 1).
 */
class Schedule
{
  public:
    static constexpr double default_beta_d = 19.9;
    static constexpr double default_beta_m = 0.1;
    static constexpr double default_cosine_shift = 0.008;
    static constexpr double default_sigma_data = 0.5;

    static Schedule vp_linear(double beta_d = default_beta_d,
                              double beta_m = default_beta_m,
                              TimeDomain domain = {1e-4, 1.0});
    static Schedule vp_cosine(double shift = default_cosine_shift,
                              TimeDomain domain = {1e-4, 0.9946});
    static Schedule ve(TimeDomain domain = {0.002, 80.0});
    static Schedule edm(double sigma_data = default_sigma_data,
                        TimeDomain domain = {0.002, 80.0});

    ScheduleKind kind() const { return kind_; }
    TimeDomain domain() const { return domain_; }
    bool is_vp() const
    {
        return kind_ == ScheduleKind::vp_linear
               || kind_ == ScheduleKind::vp_cosine;
    }
    double beta_d() const { return p0_; }
    double beta_m() const { return p1_; }
    double cosine_shift() const { return p0_; }
    double sigma_data() const { return p0_; }

    //! Scaling and noise level; throws DomainError outside the time domain.
    ScaleNoise alpha_sigma(double t) const;
    double alpha(double t) const { return alpha_sigma(t).alpha; }
    double sigma(double t) const { return alpha_sigma(t).sigma; }
    double sigma_bar(double t) const { return alpha_sigma(t).sigma_bar; }

    //! Inverse of sigma_t (no domain restriction on the result).
    double t_of_sigma(double sigma) const;

    double lambda_of_t(double t, LambdaVariant variant = LambdaVariant::sde) const;
    double t_of_lambda(double lambda,
                       LambdaVariant variant = LambdaVariant::sde) const;

    //! Supremum of e^{-lambda} over t > 0 (infinite when unbounded).
    double max_exp_neg_lambda(LambdaVariant variant) const;

    //! Drift rate f(t) = d log(alpha_t) / dt of the linear part.
    double drift_rate(double t) const;
    //! Squared diffusion g^2(t) = alpha_t^2 d(sigma_t^2)/dt.
    double diffusion_sq(double t) const;

    Preconditioning precond_coeffs(double t) const;

    std::string describe() const;

  private:
    Schedule(ScheduleKind kind, double p0, double p1, TimeDomain domain);

    void check_domain(double t) const;
    double cosine_theta(double t) const;

    ScheduleKind kind_;
    double p0_;
    double p1_;
    TimeDomain domain_;
};

char const* to_string(ScheduleKind kind);
char const* to_string(LambdaVariant variant);

}  // namespace seeds
