// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
//! \file seeds/config.hpp
//! JSON run configuration.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seeds/grids.hpp"
#include "seeds/models.hpp"
#include "seeds/schedules.hpp"
#include "seeds/solvers.hpp"

namespace seeds
{

struct GridSpec
{
    GridKind kind = GridKind::edm_rho;
    int steps = 31;
    double rho = default_rho;
    double sigma_min = 0;  //!< resolved from the schedule domain when unset
    double sigma_max = 0;
};

struct OrderSpec
{
    int levels = 4;
    int base_steps = 32;
    int reference_levels = 2;
    std::vector<int> weak_steps = {16, 20, 24, 28};
    std::size_t strong_paths = 10000;
    std::size_t weak_paths = 100000;
};

struct RunConfig
{
    Schedule schedule = Schedule::vp_linear();
    //! Empty for the zero model
    std::optional<DataDistribution> data;
    std::size_t dim = 1;
    SolverSpec solver;
    GridSpec grid;
    std::uint64_t seed = 0;
    std::size_t paths = 1000;
    unsigned workers = 1;
    bool trajectories = false;
    InitKind init = InitKind::prior;
    std::string out;
    OrderSpec order;
};

/*!
 * Parse and validate a JSON configuration. Missing keys take defaults;
 * unknown keys and invalid values raise ConfigError naming the field.
 */
RunConfig parse_config(std::string const& json_text);

//! Fully resolved configuration; parsing it again gives the same run.
std::string resolved_json(RunConfig const& cfg);

ScoreModel build_model(RunConfig const& cfg);
StepGrid build_grid(RunConfig const& cfg);

}  // namespace seeds
