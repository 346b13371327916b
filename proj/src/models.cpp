// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
#include "seeds/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "seeds/error.hpp"

namespace seeds
{
namespace
{
struct ComponentTerms
{
    std::vector<double> log_weight;  //!< log w_k + log N(x; mu_k, v_k)
    double log_norm;
};
}  // namespace

DataDistribution::DataDistribution(std::vector<GaussianComponent> components)
    : components_(std::move(components))
{
    if (components_.empty())
    {
        throw ConfigError("data distribution needs at least one component");
    }
    std::size_t const d = components_.front().mean.size();
    if (d == 0)
    {
        throw ConfigError("data dimension must be at least 1");
    }
    double total = 0;
    for (auto const& c : components_)
    {
        if (!(c.weight > 0))
        {
            throw ConfigError("component weights must be positive");
        }
        if (c.mean.size() != d || c.var.size() != d)
        {
            throw ConfigError("component dimensions are inconsistent");
        }
        for (double v : c.var)
        {
            if (!(v > 0))
            {
                throw ConfigError("component variances must be positive");
            }
        }
        total += c.weight;
    }
    if (std::fabs(total - 1) > 1e-9)
    {
        throw ConfigError("component weights must sum to 1");
    }
}

DataDistribution DataDistribution::standard_normal(std::size_t d)
{
    return DataDistribution(
        {{1.0, std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)}});
}

ScoreModel::ScoreModel(Schedule schedule, DataDistribution data)
    : schedule_(schedule)
    , data_(std::move(data))
    , dim_(data_->dim())
    , nfe_(std::make_unique<std::atomic<std::uint64_t>>(0))
{
}

ScoreModel ScoreModel::zero(Schedule schedule, std::size_t d)
{
    if (d == 0)
    {
        throw ConfigError("model dimension must be at least 1");
    }
    ScoreModel m(schedule, DataDistribution::standard_normal(d));
    m.data_.reset();
    return m;
}

void ScoreModel::exact_score(std::span<double const> x,
                             double t,
                             std::span<double> out) const
{
    auto const [alpha, sigma, sigma_bar] = schedule_.alpha_sigma(t);
    (void)sigma;
    if (!data_)
    {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    auto const& comps = data_->components();
    double const a2 = alpha * alpha;
    double const s2 = sigma_bar * sigma_bar;
    if (comps.size() == 1)
    {
        auto const& c = comps.front();
        for (std::size_t i = 0; i < dim_; ++i)
        {
            out[i] = -(x[i] - alpha * c.mean[i]) / (a2 * c.var[i] + s2);
        }
        return;
    }
    // Responsibilities through log-sum-exp so far tails cannot underflow
    std::vector<double> logw(comps.size());
    for (std::size_t k = 0; k < comps.size(); ++k)
    {
        auto const& c = comps[k];
        double lw = std::log(c.weight);
        for (std::size_t i = 0; i < dim_; ++i)
        {
            double const v = a2 * c.var[i] + s2;
            double const r = x[i] - alpha * c.mean[i];
            lw -= 0.5 * (r * r / v + std::log(v));
        }
        logw[k] = lw;
    }
    double const mx = *std::max_element(logw.begin(), logw.end());
    double norm = 0;
    for (double& lw : logw)
    {
        lw = std::exp(lw - mx);
        norm += lw;
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = 0; k < comps.size(); ++k)
    {
        auto const& c = comps[k];
        double const resp = logw[k] / norm;
        for (std::size_t i = 0; i < dim_; ++i)
        {
            out[i] -= resp * (x[i] - alpha * c.mean[i])
                      / (a2 * c.var[i] + s2);
        }
    }
}

double ScoreModel::log_density(std::span<double const> x, double t) const
{
    auto const [alpha, sigma, sigma_bar] = schedule_.alpha_sigma(t);
    (void)sigma;
    double const a2 = alpha * alpha;
    double const s2 = sigma_bar * sigma_bar;
    auto const& comps = data_ ? data_->components()
                              : DataDistribution::standard_normal(dim_)
                                    .components();
    std::vector<double> logw(comps.size());
    for (std::size_t k = 0; k < comps.size(); ++k)
    {
        auto const& c = comps[k];
        double lw = std::log(c.weight);
        for (std::size_t i = 0; i < dim_; ++i)
        {
            double const v = a2 * c.var[i] + s2;
            double const r = x[i] - alpha * c.mean[i];
            lw -= 0.5 * (r * r / v + std::log(2 * std::numbers::pi * v));
        }
        logw[k] = lw;
    }
    double const mx = *std::max_element(logw.begin(), logw.end());
    double sum = 0;
    for (double lw : logw)
    {
        sum += std::exp(lw - mx);
    }
    return mx + std::log(sum);
}

void ScoreModel::score(std::span<double const> x,
                       double t,
                       std::span<double> out) const
{
    this->count();
    this->exact_score(x, t, out);
}

void ScoreModel::noise_pred(std::span<double const> x,
                            double t,
                            std::span<double> out) const
{
    this->count();
    if (!data_)
    {
        schedule_.alpha_sigma(t);
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    this->exact_score(x, t, out);
    if (schedule_.kind() == ScheduleKind::edm)
    {
        auto const c = schedule_.precond_coeffs(t);
        for (std::size_t i = 0; i < dim_; ++i)
        {
            double const d = x[i] + t * t * out[i];
            out[i] = (d - c.c1 * x[i]) / c.c2;
        }
        return;
    }
    double const sigma_bar = schedule_.sigma_bar(t);
    for (std::size_t i = 0; i < dim_; ++i)
    {
        out[i] *= -sigma_bar;
    }
}

void ScoreModel::data_pred(std::span<double const> x,
                           double t,
                           std::span<double> out) const
{
    this->count();
    auto const [alpha, sigma, sigma_bar] = schedule_.alpha_sigma(t);
    (void)sigma;
    this->exact_score(x, t, out);
    for (std::size_t i = 0; i < dim_; ++i)
    {
        out[i] = (x[i] + sigma_bar * sigma_bar * out[i]) / alpha;
    }
}

}  // namespace seeds
