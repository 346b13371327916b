// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
//! \file seeds/models.hpp
//! Closed-form score oracles for Gaussian mixture data.
#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "seeds/schedules.hpp"

namespace seeds
{

struct GaussianComponent
{
    double weight;
    std::vector<double> mean;
    std::vector<double> var;  //!< per-axis variance
};

//! Mixture of axis-aligned Gaussians; validated on construction.
class DataDistribution
{
  public:
    explicit DataDistribution(std::vector<GaussianComponent> components);

    //! Standard normal in d dimensions.
    static DataDistribution standard_normal(std::size_t d);

    std::size_t dim() const { return components_.front().mean.size(); }
    std::vector<GaussianComponent> const& components() const
    {
        return components_;
    }

  private:
    std::vector<GaussianComponent> components_;
};

/*!
 * Exact score of the forward marginal p_t for mixture data.
 *
 * Component k of p_t has mean alpha_t m_k and per-axis variance
 * alpha_t^2 V_k + sigma_bar_t^2. Noise prediction follows
 * F = -sigma_bar_t * score for VP and VE; for EDM it is the raw network
 * output solving D = c1 x + c2 F with D = x + t^2 score.
 *
 * Every score, noise_pred or data_pred call adds one to the evaluation
 * counter, which is safe to update from several threads.
 */
class ScoreModel
{
  public:
    ScoreModel(Schedule schedule, DataDistribution data);
    //! Model with F = 0 and D = x / alpha_t.
    static ScoreModel zero(Schedule schedule, std::size_t d);

    std::size_t dim() const { return dim_; }
    Schedule const& schedule() const { return schedule_; }
    bool is_zero() const { return !data_.has_value(); }
    std::optional<DataDistribution> const& data() const { return data_; }

    void score(std::span<double const> x, double t, std::span<double> out) const;
    void noise_pred(std::span<double const> x,
                    double t,
                    std::span<double> out) const;
    void data_pred(std::span<double const> x,
                   double t,
                   std::span<double> out) const;

    //! log p_t(x); not counted as an evaluation.
    double log_density(std::span<double const> x, double t) const;

    std::uint64_t nfe() const { return nfe_->load(); }
    void reset_nfe() const { nfe_->store(0); }

  private:
    void exact_score(std::span<double const> x,
                     double t,
                     std::span<double> out) const;
    void count() const { nfe_->fetch_add(1, std::memory_order_relaxed); }

    Schedule schedule_;
    std::optional<DataDistribution> data_;
    std::size_t dim_;
    std::unique_ptr<std::atomic<std::uint64_t>> nfe_;
};

}  // namespace seeds
