// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "seeds/seeds.h"

using nlohmann::json;

namespace
{
constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_acceptance = 2;

// Raised for anything the user can fix: bad files, bad flags, rejected configs
struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct Overrides
{
    std::optional<std::uint64_t> seed;
    std::optional<long long> paths;
    std::optional<long long> steps;
    std::optional<std::string> solver;
    std::optional<std::string> schedule;
    std::optional<std::string> mode;
    std::optional<unsigned> workers;
    std::optional<std::string> out;
    //! Order runs keep their own path counts under "order"
    std::string order_kind;
};

std::string read_file(std::string const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw UsageError("cannot read " + path);
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json load_config(std::string const& path, Overrides const& o)
{
    json j = json::object();
    if (!path.empty())
    {
        try
        {
            j = json::parse(read_file(path));
        }
        catch (json::parse_error const& e)
        {
            throw UsageError(path + ": " + e.what());
        }
        if (!j.is_object())
        {
            throw UsageError(path + ": config must be a JSON object");
        }
    }
    auto section = [&](char const* key) -> json& {
        if (!j.contains(key) || !j[key].is_object())
        {
            j[key] = json::object();
        }
        return j[key];
    };
    if (o.seed)
    {
        j["seed"] = *o.seed;
    }
    if (o.paths)
    {
        if (o.order_kind.empty())
        {
            j["paths"] = *o.paths;
        }
        else
        {
            section("order")[o.order_kind + "_paths"] = *o.paths;
        }
    }
    if (o.workers)
    {
        j["workers"] = *o.workers;
    }
    if (o.out)
    {
        j["out"] = *o.out;
    }
    if (o.steps)
    {
        section("grid")["steps"] = *o.steps;
    }
    if (o.solver)
    {
        section("solver")["family"] = *o.solver;
    }
    if (o.mode)
    {
        section("solver")["mode"] = *o.mode;
    }
    if (o.schedule)
    {
        auto& s = section("schedule");
        // Parameters of another schedule kind would be rejected as unknown
        if (s.value("kind", std::string()) != *o.schedule)
        {
            s = json{{"kind", *o.schedule}};
        }
    }
    return j;
}

class Config
{
  public:
    explicit Config(json const& j)
    {
        if (seeds_config_parse(j.dump().c_str(), &cfg_) != SEEDS_OK)
        {
            throw UsageError(seeds_last_error());
        }
    }
    Config(Config const&) = delete;
    Config& operator=(Config const&) = delete;
    ~Config() { seeds_config_destroy(cfg_); }

    seeds_config const* get() const { return cfg_; }

    json resolved() const
    {
        char* text = nullptr;
        check(seeds_config_resolved_json(cfg_, &text));
        json j = json::parse(text);
        seeds_string_free(text);
        return j;
    }

    static void check(seeds_status status)
    {
        if (status == SEEDS_ERR_INTERNAL)
        {
            throw std::runtime_error(seeds_last_error());
        }
        if (status != SEEDS_OK)
        {
            throw UsageError(seeds_last_error());
        }
    }

  private:
    seeds_config* cfg_ = nullptr;
};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Output
{
  public:
    explicit Output(std::string const& path)
    {
        if (!path.empty())
        {
            file_.open(path, std::ios::binary);
            if (!file_)
            {
                throw UsageError("cannot write " + path);
            }
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

  private:
    std::ofstream file_;
};

std::string with_suffix(std::string const& path, std::string const& suffix)
{
    auto const slash = path.find_last_of('/');
    auto const dot = path.find_last_of('.');
    bool const has_ext = dot != std::string::npos
                         && (slash == std::string::npos || dot > slash);
    return (has_ext ? path.substr(0, dot) : path) + suffix;
}

int cmd_sample(json const& j)
{
    Config const cfg(j);
    auto const resolved = cfg.resolved();
    seeds_samples* raw = nullptr;
    Config::check(seeds_sample(cfg.get(), &raw));
    std::unique_ptr<seeds_samples, void (*)(seeds_samples*)> s(raw, seeds_samples_destroy);

    std::size_t const n = seeds_samples_n_paths(s.get());
    std::size_t const d = seeds_samples_dim(s.get());
    std::size_t const nodes = seeds_samples_n_nodes(s.get());
    double const* term = seeds_samples_terminal(s.get());
    std::string const out = resolved.value("out", std::string());
    {
        Output o(out);
        auto& os = o.stream();
        os << "path";
        for (std::size_t k = 0; k < d; ++k)
        {
            os << ",x" << k;
        }
        os << '\n';
        for (std::size_t p = 0; p < n; ++p)
        {
            os << p;
            for (std::size_t k = 0; k < d; ++k)
            {
                os << ',' << num(term[p * d + k]);
            }
            os << '\n';
        }
    }
    if (double const* traj = seeds_samples_trajectories(s.get()))
    {
        if (out.empty())
        {
            throw UsageError("trajectories need --out to name the per-path files");
        }
        double const* times = seeds_samples_times(s.get());
        for (std::size_t p = 0; p < n; ++p)
        {
            char tag[32];
            std::snprintf(tag, sizeof tag, "_path%06zu.csv", p);
            Output o(with_suffix(out, tag));
            auto& os = o.stream();
            os << "node,t";
            for (std::size_t k = 0; k < d; ++k)
            {
                os << ",x" << k;
            }
            os << '\n';
            for (std::size_t i = 0; i < nodes; ++i)
            {
                os << i << ',' << num(times[i]);
                for (std::size_t k = 0; k < d; ++k)
                {
                    os << ',' << num(traj[(p * nodes + i) * d + k]);
                }
                os << '\n';
            }
        }
    }
    std::size_t const steps = nodes - 1;
    auto const nfe = seeds_samples_nfe(s.get());
    // stderr keeps stdout a clean CSV when no --out is given
    std::fprintf(stderr, "paths=%zu M=%zu nfe_per_path=%llu\n", n, steps,
                 static_cast<unsigned long long>(nfe));
    return exit_ok;
}

int cmd_order(json const& j, std::string const& kind, std::optional<double> threshold)
{
    Config const cfg(j);
    auto const resolved = cfg.resolved();
    seeds_order_kind const k
        = kind == "strong" ? SEEDS_ORDER_STRONG : SEEDS_ORDER_WEAK;
    seeds_order_report* raw = nullptr;
    Config::check(seeds_order(cfg.get(), k, &raw));
    std::unique_ptr<seeds_order_report, void (*)(seeds_order_report*)> r(
        raw, seeds_order_destroy);

    std::string const out = resolved.value("out", std::string());
    {
        Output o(out);
        auto& os = o.stream();
        os << "h,error,se,n_paths,included\n";
        for (std::size_t i = 0; i < seeds_order_n_points(r.get()); ++i)
        {
            double h = 0, err = 0, se = 0;
            std::size_t paths = 0;
            int included = 0;
            Config::check(seeds_order_point(r.get(), i, &h, &err, &se, &paths, &included));
            os << num(h) << ',' << num(err) << ',' << num(se) << ',' << paths << ','
               << included << '\n';
        }
    }
    double const slope = seeds_order_slope(r.get());
    json summary = {{"kind", kind},
                    {"solver", resolved["solver"]["family"]},
                    {"slope", slope},
                    {"slope_se", seeds_order_slope_se(r.get())},
                    {"r2", seeds_order_r2(r.get())},
                    {"exact", seeds_order_exact(r.get()) != 0}};
    json notes = json::array();
    for (std::size_t i = 0; i < seeds_order_n_notes(r.get()); ++i)
    {
        notes.push_back(seeds_order_note(r.get(), i));
    }
    summary["notes"] = notes;
    if (threshold)
    {
        summary["threshold"] = *threshold;
        summary["pass"] = slope >= *threshold;
    }
    if (out.empty())
    {
        std::cout << summary.dump() << '\n';
    }
    else
    {
        Output o(with_suffix(out, ".json"));
        o.stream() << summary.dump(2) << '\n';
    }
    return threshold && !(slope >= *threshold) ? exit_acceptance : exit_ok;
}

int cmd_compare(json const& a, json const& b, double threshold)
{
    Config const ca(a);
    Config const cb(b);
    double diff = 0;
    Config::check(seeds_compare(ca.get(), cb.get(), &diff));
    bool const pass = diff < threshold;
    std::printf("max_rel_diff=%.17g threshold=%.17g %s\n", diff, threshold,
                pass ? "PASS" : "FAIL");
    return pass ? exit_ok : exit_acceptance;
}

int cmd_grid(json const& j)
{
    Config const cfg(j);
    seeds_grid* raw = nullptr;
    Config::check(seeds_grid_build(cfg.get(), &raw));
    std::unique_ptr<seeds_grid, void (*)(seeds_grid*)> g(raw, seeds_grid_destroy);
    Output o(cfg.resolved().value("out", std::string()));
    auto& os = o.stream();
    os << "i,t,sigma,lambda\n";
    double const* t = seeds_grid_times(g.get());
    double const* s = seeds_grid_sigmas(g.get());
    double const* l = seeds_grid_lambdas(g.get());
    for (std::size_t i = 0; i < seeds_grid_n_nodes(g.get()); ++i)
    {
        os << i << ',' << num(t[i]) << ',' << num(s[i]) << ',' << num(l[i]) << '\n';
    }
    return exit_ok;
}

int cmd_selftest()
{
    char* report = nullptr;
    int passed = 0;
    Config::check(seeds_selftest(&report, &passed));
    std::fputs(report, stdout);
    seeds_string_free(report);
    return passed ? exit_ok : exit_acceptance;
}

void add_run_flags(CLI::App* cmd, std::string& config, Overrides& o, bool with_solver)
{
    cmd->add_option("--config", config, "JSON run configuration");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--paths", o.paths, "number of sample paths");
    cmd->add_option("--steps", o.steps, "grid size M");
    cmd->add_option("--schedule", o.schedule, "vp_linear|vp|vp_cosine|ve|edm");
    cmd->add_option("--workers", o.workers, "worker threads");
    cmd->add_option("--out", o.out, "output file (stdout when omitted)");
    if (with_solver)
    {
        cmd->add_option("--solver", o.solver, "solver family");
        cmd->add_option("--mode", o.mode, "np|dp");
    }
}
}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Exponential-integrator SDE samplers for diffusion models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", seeds_version());

    std::string config;
    Overrides o;
    bool dump_config = false;

    auto* sample = app.add_subcommand("sample", "sample paths and write terminal states");
    add_run_flags(sample, config, o, true);
    sample->add_flag("--dump-config", dump_config, "print the resolved config and exit");

    std::string kind = "strong";
    std::optional<double> order_threshold;
    auto* order = app.add_subcommand("order", "estimate strong or weak convergence order");
    order->add_option("kind", kind, "strong|weak")
        ->check(CLI::IsMember({"strong", "weak"}));
    add_run_flags(order, config, o, true);
    order->add_option("--threshold", order_threshold,
                      "minimum slope; exit 2 when the fit falls below it");

    std::string config_b;
    double compare_threshold = 1e-10;
    auto* compare = app.add_subcommand("compare", "per-step comparison of two configs");
    compare->add_option("config_a", config, "first config")->required();
    compare->add_option("config_b", config_b, "second config")->required();
    compare->add_option("--seed", o.seed, "master seed for both runs");
    compare->add_option("--steps", o.steps, "grid size M for both runs");
    compare->add_option("--schedule", o.schedule, "schedule for both runs");
    compare->add_option("--threshold", compare_threshold,
                        "PASS when the difference is below this")
        ->capture_default_str();

    auto* grid = app.add_subcommand("grid", "print the time grid");
    add_run_flags(grid, config, o, false);

    auto* selftest = app.add_subcommand("selftest", "run the invariant suite");

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& e)
    {
        int const code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try
    {
        if (*sample)
        {
            auto const j = load_config(config, o);
            if (dump_config)
            {
                std::cout << Config(j).resolved().dump(2) << '\n';
                return exit_ok;
            }
            return cmd_sample(j);
        }
        if (*order)
        {
            o.order_kind = kind;
            return cmd_order(load_config(config, o), kind, order_threshold);
        }
        if (*compare)
        {
            return cmd_compare(load_config(config, o), load_config(config_b, o),
                               compare_threshold);
        }
        if (*grid)
        {
            return cmd_grid(load_config(config, o));
        }
        if (*selftest)
        {
            return cmd_selftest();
        }
    }
    catch (UsageError const& e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_config;
    }
    catch (std::exception const& e)
    {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return exit_config;
    }
    return exit_ok;
}
