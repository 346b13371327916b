// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
#include "seeds/config.hpp"

#include <json.hpp>
#include <optional>
#include <set>

#include "seeds/error.hpp"

namespace seeds
{
namespace
{
using nlohmann::json;

std::string field_name(std::string const& where, std::string const& key)
{
    return where.empty() ? key : where + "." + key;
}

void reject_unknown(json const& obj,
                    std::string const& where,
                    std::set<std::string> const& allowed)
{
    for (auto it = obj.begin(); it != obj.end(); ++it)
    {
        if (!allowed.count(it.key()))
        {
            throw ConfigError(field_name(where, it.key()) + ": unknown key");
        }
    }
}

json const& require_object(json const& j, std::string const& field)
{
    if (!j.is_object())
    {
        throw ConfigError(field + ": expected an object");
    }
    return j;
}

double get_number(json const& obj,
                  char const* key,
                  std::string const& where,
                  double fallback)
{
    if (!obj.contains(key))
    {
        return fallback;
    }
    auto const& v = obj.at(key);
    if (!v.is_number())
    {
        throw ConfigError(field_name(where, key) + ": expected a number");
    }
    return v.get<double>();
}

std::string get_string(json const& obj,
                       char const* key,
                       std::string const& where,
                       std::string fallback)
{
    if (!obj.contains(key))
    {
        return fallback;
    }
    auto const& v = obj.at(key);
    if (!v.is_string())
    {
        throw ConfigError(field_name(where, key) + ": expected a string");
    }
    return v.get<std::string>();
}

bool get_bool(json const& obj, char const* key, std::string const& where, bool fallback)
{
    if (!obj.contains(key))
    {
        return fallback;
    }
    auto const& v = obj.at(key);
    if (!v.is_boolean())
    {
        throw ConfigError(field_name(where, key) + ": expected true or false");
    }
    return v.get<bool>();
}

std::int64_t get_int(json const& obj,
                     char const* key,
                     std::string const& where,
                     std::int64_t fallback)
{
    if (!obj.contains(key))
    {
        return fallback;
    }
    auto const& v = obj.at(key);
    if (!v.is_number_integer())
    {
        throw ConfigError(field_name(where, key) + ": expected an integer");
    }
    return v.get<std::int64_t>();
}

std::vector<double> get_vector(json const& v, std::string const& field)
{
    if (!v.is_array())
    {
        throw ConfigError(field + ": expected an array of numbers");
    }
    std::vector<double> out;
    for (auto const& e : v)
    {
        if (!e.is_number())
        {
            throw ConfigError(field + ": expected an array of numbers");
        }
        out.push_back(e.get<double>());
    }
    return out;
}

Schedule parse_schedule(json const& j)
{
    std::string const w = "schedule";
    require_object(j, w);
    reject_unknown(j, w,
                   {"kind", "beta_d", "beta_m", "s", "sigma_data", "t_end",
                    "t_max"});
    auto kind = get_string(j, "kind", w, "vp_linear");
    if (kind == "vp")
    {
        kind = "vp_linear";
    }
    auto const t_end = j.contains("t_end") ? std::optional(get_number(j, "t_end", w, 0)) : std::nullopt;
    auto const t_max = j.contains("t_max") ? std::optional(get_number(j, "t_max", w, 0)) : std::nullopt;
    auto domain_or = [&](TimeDomain d) {
        return TimeDomain{t_end.value_or(d.t_end), t_max.value_or(d.t_max)};
    };
    double const beta_d = get_number(j, "beta_d", w, Schedule::default_beta_d);
    double const beta_m = get_number(j, "beta_m", w, Schedule::default_beta_m);
    double const shift = get_number(j, "s", w, Schedule::default_cosine_shift);
    double const sigma_data = get_number(j, "sigma_data", w, Schedule::default_sigma_data);
    try
    {
        if (kind == "vp_linear")
        {
            return Schedule::vp_linear(beta_d, beta_m, domain_or({1e-4, 1.0}));
        }
        if (kind == "vp_cosine")
        {
            return Schedule::vp_cosine(shift, domain_or({1e-4, 0.9946}));
        }
        if (kind == "ve")
        {
            return Schedule::ve(domain_or({0.002, 80.0}));
        }
        if (kind == "edm")
        {
            return Schedule::edm(sigma_data, domain_or({0.002, 80.0}));
        }
    }
    catch (ConfigError const& e)
    {
        throw ConfigError(w + ": " + e.what());
    }
    throw ConfigError("schedule.kind: unknown schedule '" + kind
                      + "' (expected vp_linear, vp_cosine, ve or edm)");
}

DataDistribution parse_data(json const& j)
{
    if (!j.is_array())
    {
        throw ConfigError("data: expected an array of components");
    }
    std::vector<GaussianComponent> comps;
    for (std::size_t k = 0; k < j.size(); ++k)
    {
        std::string const w = "data[" + std::to_string(k) + "]";
        auto const& c = require_object(j[k], w);
        reject_unknown(c, w, {"weight", "mean", "var"});
        if (!c.contains("mean"))
        {
            throw ConfigError(w + ".mean: required");
        }
        GaussianComponent g;
        g.weight = get_number(c, "weight", w, 1.0);
        g.mean = get_vector(c.at("mean"), w + ".mean");
        g.var = c.contains("var") ? get_vector(c.at("var"), w + ".var")
                                  : std::vector<double>(g.mean.size(), 1.0);
        comps.push_back(std::move(g));
    }
    try
    {
        return DataDistribution(std::move(comps));
    }
    catch (ConfigError const& e)
    {
        throw ConfigError(std::string("data: ") + e.what());
    }
}

SolverSpec parse_solver(json const& j)
{
    std::string const w = "solver";
    require_object(j, w);
    reject_unknown(j, w,
                   {"family", "mode", "r1", "r2", "c2", "ve_form", "ell",
                    "noise", "churn"});
    SolverSpec spec;
    auto const family = get_string(j, "family", w, "seeds1");
    auto const parsed = parse_family(family);
    if (!parsed)
    {
        throw ConfigError("solver.family: unknown solver '" + family + "'");
    }
    spec.family = *parsed;
    auto const mode = get_string(
        j, "mode", w,
        spec.family == SolverFamily::ve2stage_ode
                || spec.family == SolverFamily::ve2stage_sde
            ? "dp"
            : "np");
    if (mode == "np")
    {
        spec.mode = PredictionMode::noise_pred;
    }
    else if (mode == "dp")
    {
        spec.mode = PredictionMode::data_pred;
    }
    else
    {
        throw ConfigError("solver.mode: expected np or dp");
    }
    spec.r1 = get_number(j, "r1", w, spec.r1);
    spec.r2 = get_number(j, "r2", w, spec.r2);
    spec.c2 = get_number(j, "c2", w, spec.c2);
    spec.ell = get_number(j, "ell", w, spec.ell);
    spec.noise = get_bool(j, "noise", w, spec.noise);
    auto const form = get_string(j, "ve_form", w, "a");
    if (form != "a" && form != "b")
    {
        throw ConfigError("solver.ve_form: expected a or b");
    }
    spec.ve_form = form == "a" ? VeOdeForm::a : VeOdeForm::b;
    if (j.contains("churn") && !j.at("churn").is_null())
    {
        std::string const cw = "solver.churn";
        auto const& c = require_object(j.at("churn"), cw);
        reject_unknown(c, cw, {"S_churn", "S_tmin", "S_tmax", "S_noise"});
        ChurnParams churn;
        churn.s_churn = get_number(c, "S_churn", cw, churn.s_churn);
        churn.s_tmin = get_number(c, "S_tmin", cw, churn.s_tmin);
        churn.s_tmax = get_number(c, "S_tmax", cw, churn.s_tmax);
        churn.s_noise = get_number(c, "S_noise", cw, churn.s_noise);
        spec.churn = churn;
    }
    return spec;
}

GridSpec parse_grid(json const& j, Schedule const& sched)
{
    std::string const w = "grid";
    require_object(j, w);
    reject_unknown(j, w, {"kind", "steps", "rho", "sigma_min", "sigma_max"});
    GridSpec g;
    auto const kind = get_string(j, "kind", w, "edm");
    if (kind == "edm")
    {
        g.kind = GridKind::edm_rho;
    }
    else if (kind == "linear_lambda")
    {
        g.kind = GridKind::linear_lambda;
    }
    else
    {
        throw ConfigError("grid.kind: expected edm or linear_lambda");
    }
    auto const steps = get_int(j, "steps", w, g.steps);
    if (steps < 2 || steps > 1000000)
    {
        throw ConfigError("grid.steps: must be between 2 and 1000000");
    }
    g.steps = static_cast<int>(steps);
    g.rho = get_number(j, "rho", w, g.rho);
    auto const dom = sched.domain();
    g.sigma_min = get_number(j, "sigma_min", w, sched.sigma(dom.t_end));
    g.sigma_max = get_number(j, "sigma_max", w, sched.sigma(dom.t_max));
    return g;
}

OrderSpec parse_order(json const& j)
{
    std::string const w = "order";
    require_object(j, w);
    reject_unknown(j, w,
                   {"levels", "base_steps", "reference_levels", "weak_steps",
                    "strong_paths", "weak_paths"});
    OrderSpec o;
    o.strong_paths = static_cast<std::size_t>(
        get_int(j, "strong_paths", w, static_cast<std::int64_t>(o.strong_paths)));
    o.weak_paths = static_cast<std::size_t>(
        get_int(j, "weak_paths", w, static_cast<std::int64_t>(o.weak_paths)));
    if (o.strong_paths < 2 || o.weak_paths < 2)
    {
        throw ConfigError("order: strong_paths and weak_paths must be >= 2");
    }
    o.levels = static_cast<int>(get_int(j, "levels", w, o.levels));
    o.base_steps = static_cast<int>(get_int(j, "base_steps", w, o.base_steps));
    o.reference_levels = static_cast<int>(
        get_int(j, "reference_levels", w, o.reference_levels));
    if (o.levels < 3 || o.levels > 12 || o.base_steps < 1
        || o.reference_levels < 1 || o.reference_levels > 6)
    {
        throw ConfigError("order: levels in [3, 12], base_steps >= 1, "
                          "reference_levels in [1, 6]");
    }
    if (j.contains("weak_steps"))
    {
        o.weak_steps.clear();
        for (double v : get_vector(j.at("weak_steps"), "order.weak_steps"))
        {
            if (v < 1 || v != std::floor(v))
            {
                throw ConfigError("order.weak_steps: expected positive integers");
            }
            o.weak_steps.push_back(static_cast<int>(v));
        }
    }
    return o;
}
}  // namespace

RunConfig parse_config(std::string const& json_text)
{
    json root;
    try
    {
        root = json::parse(json_text.empty() ? std::string("{}") : json_text);
    }
    catch (json::parse_error const& e)
    {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    require_object(root, "config");
    reject_unknown(root, "",
                   {"schedule", "data", "model", "solver", "grid", "seed",
                    "paths", "workers", "trajectories", "init", "out",
                    "order"});
    RunConfig cfg;
    cfg.schedule = parse_schedule(root.value("schedule", json::object()));

    if (root.contains("data") && root.contains("model"))
    {
        throw ConfigError("config: give either data or model, not both");
    }
    if (root.contains("model"))
    {
        std::string const w = "model";
        auto const& m = require_object(root.at("model"), w);
        reject_unknown(m, w, {"kind", "dim"});
        auto const kind = get_string(m, "kind", w, "zero");
        if (kind != "zero")
        {
            throw ConfigError("model.kind: only zero is supported; declare "
                              "mixtures under data");
        }
        auto const dim = get_int(m, "dim", w, 1);
        if (dim < 1)
        {
            throw ConfigError("model.dim: must be at least 1");
        }
        cfg.dim = static_cast<std::size_t>(dim);
    }
    else
    {
        cfg.data = root.contains("data") ? parse_data(root.at("data"))
                                         : DataDistribution::standard_normal(1);
        cfg.dim = cfg.data->dim();
    }

    cfg.solver = parse_solver(root.value("solver", json::object()));
    validate(cfg.solver, cfg.schedule);
    cfg.grid = parse_grid(root.value("grid", json::object()), cfg.schedule);

    if (root.contains("seed"))
    {
        auto const& s = root.at("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
        {
            throw ConfigError("seed: expected a non-negative integer");
        }
        cfg.seed = s.get<std::uint64_t>();
    }
    auto const paths = get_int(root, "paths", "", 1000);
    if (paths < 1 || paths > (std::int64_t{1} << 32))
    {
        throw ConfigError("paths: must be between 1 and 2^32");
    }
    cfg.paths = static_cast<std::size_t>(paths);
    auto const workers = get_int(root, "workers", "", 1);
    if (workers < 1 || workers > 1024)
    {
        throw ConfigError("workers: must be between 1 and 1024");
    }
    cfg.workers = static_cast<unsigned>(workers);
    cfg.trajectories = get_bool(root, "trajectories", "", false);
    auto const init = get_string(root, "init", "", "prior");
    if (init != "prior" && init != "exact")
    {
        throw ConfigError("init: expected prior or exact");
    }
    cfg.init = init == "prior" ? InitKind::prior : InitKind::exact;
    cfg.out = get_string(root, "out", "", "");
    cfg.order = parse_order(root.value("order", json::object()));

    // Cross-field check: the grid must be buildable on this schedule
    try
    {
        build_grid(cfg);
    }
    catch (GridError const&)
    {
        throw;
    }
    catch (Error const& e)
    {
        throw ConfigError(std::string("grid: ") + e.what());
    }
    return cfg;
}

std::string resolved_json(RunConfig const& cfg)
{
    json root;
    auto const& s = cfg.schedule;
    json sj{{"kind", to_string(s.kind())},
            {"t_end", s.domain().t_end},
            {"t_max", s.domain().t_max}};
    switch (s.kind())
    {
        case ScheduleKind::vp_linear:
            sj["beta_d"] = s.beta_d();
            sj["beta_m"] = s.beta_m();
            break;
        case ScheduleKind::vp_cosine:
            sj["s"] = s.cosine_shift();
            break;
        case ScheduleKind::edm:
            sj["sigma_data"] = s.sigma_data();
            break;
        case ScheduleKind::ve:
            break;
    }
    root["schedule"] = sj;
    if (cfg.data)
    {
        json dj = json::array();
        for (auto const& c : cfg.data->components())
        {
            dj.push_back({{"weight", c.weight}, {"mean", c.mean}, {"var", c.var}});
        }
        root["data"] = dj;
    }
    else
    {
        root["model"] = {{"kind", "zero"}, {"dim", cfg.dim}};
    }
    auto const& v = cfg.solver;
    json vj{{"family", to_string(v.family)},
            {"mode", to_string(v.mode)},
            {"r1", v.r1},
            {"r2", v.r2},
            {"c2", v.c2},
            {"ve_form", v.ve_form == VeOdeForm::a ? "a" : "b"},
            {"ell", v.ell},
            {"noise", v.noise}};
    if (v.churn)
    {
        vj["churn"] = {{"S_churn", v.churn->s_churn},
                       {"S_tmin", v.churn->s_tmin},
                       {"S_tmax", v.churn->s_tmax},
                       {"S_noise", v.churn->s_noise}};
    }
    root["solver"] = vj;
    root["grid"] = {{"kind", to_string(cfg.grid.kind)},
                    {"steps", cfg.grid.steps},
                    {"rho", cfg.grid.rho},
                    {"sigma_min", cfg.grid.sigma_min},
                    {"sigma_max", cfg.grid.sigma_max}};
    root["seed"] = cfg.seed;
    root["paths"] = cfg.paths;
    root["workers"] = cfg.workers;
    root["trajectories"] = cfg.trajectories;
    root["init"] = cfg.init == InitKind::prior ? "prior" : "exact";
    root["out"] = cfg.out;
    root["order"] = {{"levels", cfg.order.levels},
                     {"base_steps", cfg.order.base_steps},
                     {"reference_levels", cfg.order.reference_levels},
                     {"weak_steps", cfg.order.weak_steps},
                     {"strong_paths", cfg.order.strong_paths},
                     {"weak_paths", cfg.order.weak_paths}};
    return root.dump(2);
}

ScoreModel build_model(RunConfig const& cfg)
{
    if (cfg.data)
    {
        return ScoreModel(cfg.schedule, *cfg.data);
    }
    return ScoreModel::zero(cfg.schedule, cfg.dim);
}

StepGrid build_grid(RunConfig const& cfg)
{
    auto const& g = cfg.grid;
    if (g.kind == GridKind::edm_rho)
    {
        return edm_grid(g.steps, g.sigma_min, g.sigma_max, g.rho, cfg.schedule);
    }
    auto const dom = cfg.schedule.domain();
    return linear_lambda_grid(g.steps, dom.t_end, dom.t_max, cfg.schedule);
}

}  // namespace seeds
