// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
#include "seeds/seeds.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <string>

#include "seeds/config.hpp"
#include "seeds/error.hpp"
#include "seeds/harness.hpp"
#include "seeds/phi.hpp"

struct seeds_config
{
    seeds::RunConfig cfg;
};

struct seeds_samples
{
    seeds::Ensemble ens;
    std::vector<double> times;
};

struct seeds_order_report
{
    seeds::OrderEstimate est;
};

struct seeds_grid
{
    std::vector<double> times;
    std::vector<double> sigmas;
    std::vector<double> lambdas;
};

namespace
{
thread_local std::string last_error;

seeds_status fail(seeds_status code, char const* msg)
{
    last_error = msg;
    return code;
}

template<class F>
seeds_status guarded(F&& fn)
{
    try
    {
        fn();
        last_error.clear();
        return SEEDS_OK;
    }
    catch (seeds::Error const& e)
    {
        return fail(static_cast<seeds_status>(e.code()), e.what());
    }
    catch (std::bad_alloc const&)
    {
        return fail(SEEDS_ERR_INTERNAL, "out of memory");
    }
    catch (std::exception const& e)
    {
        return fail(SEEDS_ERR_INTERNAL, e.what());
    }
    catch (...)
    {
        return fail(SEEDS_ERR_INTERNAL, "unknown error");
    }
}

char* copy_string(std::string const& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out)
    {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

#define SEEDS_REQUIRE(cond)                                            \
    do                                                                 \
    {                                                                  \
        if (!(cond))                                                   \
        {                                                              \
            return fail(SEEDS_ERR_ARGUMENT, "null argument: " #cond); \
        }                                                              \
    } while (0)
}  // namespace

extern "C" {

char const* seeds_version(void)
{
    return "0.1.0";
}

char const* seeds_last_error(void)
{
    return last_error.c_str();
}

void seeds_string_free(char* str)
{
    std::free(str);
}

seeds_status seeds_config_parse(char const* json, seeds_config** out)
{
    SEEDS_REQUIRE(json && out);
    *out = nullptr;
    return guarded([&] { *out = new seeds_config{seeds::parse_config(json)}; });
}

seeds_status seeds_config_resolved_json(seeds_config const* cfg, char** out)
{
    SEEDS_REQUIRE(cfg && out);
    *out = nullptr;
    return guarded([&] { *out = copy_string(seeds::resolved_json(cfg->cfg)); });
}

void seeds_config_destroy(seeds_config* cfg)
{
    delete cfg;
}

seeds_status seeds_sample(seeds_config const* cfg, seeds_samples** out)
{
    SEEDS_REQUIRE(cfg && out);
    *out = nullptr;
    return guarded([&] {
        auto const& c = cfg->cfg;
        auto const model = seeds::build_model(c);
        auto const grid = seeds::build_grid(c);
        auto result = std::make_unique<seeds_samples>();
        result->ens = seeds::sample_ensemble(c.solver, model, grid, c.paths,
                                             c.seed, c.init, c.workers,
                                             c.trajectories);
        result->times = grid.times();
        *out = result.release();
    });
}

size_t seeds_samples_n_paths(seeds_samples const* s)
{
    return s ? s->ens.n_paths : 0;
}

size_t seeds_samples_dim(seeds_samples const* s)
{
    return s ? s->ens.dim : 0;
}

size_t seeds_samples_n_nodes(seeds_samples const* s)
{
    return s ? s->times.size() : 0;
}

uint64_t seeds_samples_nfe(seeds_samples const* s)
{
    return s ? s->ens.nfe : 0;
}

double const* seeds_samples_terminal(seeds_samples const* s)
{
    return s ? s->ens.terminal.data() : nullptr;
}

double const* seeds_samples_trajectories(seeds_samples const* s)
{
    return s && !s->ens.trajectories.empty() ? s->ens.trajectories.data()
                                              : nullptr;
}

double const* seeds_samples_times(seeds_samples const* s)
{
    return s ? s->times.data() : nullptr;
}

void seeds_samples_destroy(seeds_samples* s)
{
    delete s;
}

seeds_status seeds_order(seeds_config const* cfg,
                         seeds_order_kind kind,
                         seeds_order_report** out)
{
    SEEDS_REQUIRE(cfg && out);
    *out = nullptr;
    return guarded([&] {
        auto const& c = cfg->cfg;
        auto const model = seeds::build_model(c);
        auto const dom = c.schedule.domain();
        auto result = std::make_unique<seeds_order_report>();
        if (kind == SEEDS_ORDER_STRONG)
        {
            seeds::StrongOrderOptions opts;
            opts.levels = c.order.levels;
            opts.base_steps = c.order.base_steps;
            opts.reference_levels = c.order.reference_levels;
            opts.n_paths = c.order.strong_paths;
            opts.seed = c.seed;
            opts.workers = c.workers;
            result->est = seeds::strong_order(c.solver, model, dom.t_end,
                                              dom.t_max, opts);
        }
        else if (kind == SEEDS_ORDER_WEAK)
        {
            seeds::WeakOrderOptions opts;
            opts.steps = c.order.weak_steps;
            opts.n_paths = c.order.weak_paths;
            opts.seed = c.seed;
            opts.workers = c.workers;
            result->est = seeds::weak_order(c.solver, model, dom.t_end,
                                            dom.t_max, opts);
        }
        else
        {
            throw seeds::ConfigError("order kind must be strong or weak");
        }
        *out = result.release();
    });
}

size_t seeds_order_n_points(seeds_order_report const* r)
{
    return r ? r->est.points.size() : 0;
}

seeds_status seeds_order_point(seeds_order_report const* r,
                               size_t i,
                               double* h,
                               double* error,
                               double* se,
                               size_t* n_paths,
                               int* included)
{
    SEEDS_REQUIRE(r);
    if (i >= r->est.points.size())
    {
        return fail(SEEDS_ERR_ARGUMENT, "order point index out of range");
    }
    auto const& p = r->est.points[i];
    if (h)
        *h = p.h;
    if (error)
        *error = p.error;
    if (se)
        *se = p.se;
    if (n_paths)
        *n_paths = p.n_paths;
    if (included)
        *included = p.included ? 1 : 0;
    return SEEDS_OK;
}

double seeds_order_slope(seeds_order_report const* r)
{
    return r ? r->est.slope : std::numeric_limits<double>::quiet_NaN();
}

double seeds_order_slope_se(seeds_order_report const* r)
{
    return r ? r->est.slope_se : std::numeric_limits<double>::quiet_NaN();
}

double seeds_order_r2(seeds_order_report const* r)
{
    return r ? r->est.r2 : std::numeric_limits<double>::quiet_NaN();
}

int seeds_order_exact(seeds_order_report const* r)
{
    return r && r->est.exact ? 1 : 0;
}

size_t seeds_order_n_notes(seeds_order_report const* r)
{
    return r ? r->est.notes.size() : 0;
}

char const* seeds_order_note(seeds_order_report const* r, size_t i)
{
    return r && i < r->est.notes.size() ? r->est.notes[i].c_str() : nullptr;
}

void seeds_order_destroy(seeds_order_report* r)
{
    delete r;
}

seeds_status seeds_compare(seeds_config const* a,
                           seeds_config const* b,
                           double* max_rel_diff)
{
    SEEDS_REQUIRE(a && b && max_rel_diff);
    return guarded([&] {
        auto const& ca = a->cfg;
        auto const& cb = b->cfg;
        if (ca.schedule.describe() != cb.schedule.describe())
        {
            throw seeds::ConfigError("compare: schedules differ");
        }
        if (ca.seed != cb.seed)
        {
            throw seeds::ConfigError("compare: seeds differ");
        }
        auto same_data = [&] {
            if (!ca.data || !cb.data)
            {
                return !ca.data && !cb.data;
            }
            auto const& x = ca.data->components();
            auto const& y = cb.data->components();
            return std::equal(x.begin(), x.end(), y.begin(), y.end(),
                              [](auto const& p, auto const& q) {
                                  return p.weight == q.weight && p.mean == q.mean
                                         && p.var == q.var;
                              });
        };
        if (ca.dim != cb.dim || !same_data())
        {
            throw seeds::ConfigError("compare: models differ");
        }
        auto const ga = seeds::build_grid(ca);
        auto const gb = seeds::build_grid(cb);
        if (ga.times() != gb.times())
        {
            throw seeds::ConfigError("compare: grids differ");
        }
        auto const model = seeds::build_model(ca);
        *max_rel_diff = seeds::per_step_compare(ca.solver, cb.solver, model,
                                                ga, ca.seed)
                            .max_rel_diff;
    });
}

seeds_status seeds_grid_build(seeds_config const* cfg, seeds_grid** out)
{
    SEEDS_REQUIRE(cfg && out);
    *out = nullptr;
    return guarded([&] {
        auto const grid = seeds::build_grid(cfg->cfg);
        auto result = std::make_unique<seeds_grid>();
        result->times = grid.times();
        result->sigmas = grid.sigmas();
        result->lambdas = grid.lambdas(cfg->cfg.schedule,
                                       seeds::LambdaVariant::log_sigma);
        *out = result.release();
    });
}

size_t seeds_grid_n_nodes(seeds_grid const* g)
{
    return g ? g->times.size() : 0;
}

double const* seeds_grid_times(seeds_grid const* g)
{
    return g ? g->times.data() : nullptr;
}

double const* seeds_grid_sigmas(seeds_grid const* g)
{
    return g ? g->sigmas.data() : nullptr;
}

double const* seeds_grid_lambdas(seeds_grid const* g)
{
    return g ? g->lambdas.data() : nullptr;
}

void seeds_grid_destroy(seeds_grid* g)
{
    delete g;
}

seeds_status seeds_selftest(char** report, int* passed)
{
    SEEDS_REQUIRE(report && passed);
    *report = nullptr;
    return guarded([&] {
        auto const result = seeds::run_selftest();
        *report = copy_string(result.report);
        *passed = result.passed ? 1 : 0;
    });
}

seeds_status seeds_phi(int k, double h, double* out)
{
    SEEDS_REQUIRE(out);
    return guarded([&] { *out = seeds::phi(k, h); });
}

}  // extern "C"
