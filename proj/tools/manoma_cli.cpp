// SPDX-License-Identifier: Apache-2.0
//
// manoma: movable-antenna uplink NOMA sum-rate optimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// manoma command-line front end.
//
//   manoma validate --config run.cfg
//   manoma optimize --config run.cfg [--seed N] [--multistart N]
//   manoma sweep    --config run.cfg --sweep power|users [--points "0,5,10"] --out rates.csv
//
// Exit status: 0 success, 1 usage error, 2 config error, 3 infeasible
// single-run instance, 4 I/O error, 5 numerical error (degenerate channel).

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <manoma/config.hpp>
#include <manoma/sim.hpp>

namespace
{
    enum ExitCode : int
    {
        ok = 0,
        usage_error = 1,
        config_error = 2,
        infeasible = 3,
        io_error = 4,
        numerical_error = 5,
    };

    struct Flags
    {
        std::string config_path;
        std::optional<std::uint64_t> seed;
        std::optional<std::size_t> realizations;
        std::optional<std::size_t> multistart;
        std::optional<std::string> sweep;
        std::optional<std::string> points;
        std::string out;
        std::size_t workers = 0;
    };

    manoma::RunConfig resolve(const Flags &f)
    {
        manoma::RunConfig run = f.config_path.empty() ? manoma::RunConfig{} : manoma::load_config(f.config_path);
        if (f.seed)
            run.scenario.seed = *f.seed;
        if (f.realizations)
            run.scenario.realizations = *f.realizations;
        if (f.multistart)
            run.scenario.sca.multistart = *f.multistart;
        if (f.sweep)
            run.sweep = manoma::parse_sweep_kind(*f.sweep);
        if (f.points)
            run.points = manoma::parse_points(*f.points);
        manoma::validate_run(run);
        return run;
    }

    int cmd_validate(const Flags &f)
    {
        const manoma::RunConfig run = resolve(f);
        std::cout << manoma::to_config_text(run);
        return ok;
    }

    int cmd_optimize(const Flags &f)
    {
        const manoma::RunConfig run = resolve(f);
        const manoma::ScenarioConfig &cfg = run.scenario;
        const manoma::RealizationDraw draw = manoma::draw_realization(cfg, 0, cfg.num_users);
        const std::vector<manoma::RateRequirement> reqs(cfg.num_users, manoma::RateRequirement(cfg.r_min));
        const manoma::NomaSolution sol = manoma::solve_noma(draw.gains_ma, reqs, cfg.p_max_mw(), cfg.noise_mw());

        std::printf("# manoma optimize  seed=%llu  K=%zu  L=%zu  P_max=%.6g dBm  noise=%.6g dBm  A=%.6g lambda  "
                    "r_min=%.6g bps/Hz\n",
                    static_cast<unsigned long long>(cfg.seed), cfg.num_users, cfg.paths_per_user, cfg.p_max_dbm,
                    cfg.noise_dbm, cfg.region_side, cfg.r_min);
        std::printf("%-5s %12s %12s %16s %16s %6s %14s %14s %6s\n", "user", "x_lambda", "y_lambda", "gain_origin",
                    "gain_optimized", "rank", "power_mw", "rate_bps_hz", "iters");
        for (std::size_t k = 0; k < cfg.num_users; ++k)
        {
            const auto &opt = draw.optimized[k];
            std::printf("%-5zu %12.9f %12.9f %16.9e %16.9e %6zu %14.9g %14.9f %6zu\n", k + 1, opt.position.x,
                        opt.position.y, draw.gains_fpa[k], draw.gains_ma[k], sol.order.rank(k) + 1, sol.powers[k],
                        sol.rates[k], opt.iterations);
        }
        std::printf("sum_rate_bps_hz = %.12g\n", sol.sum_rate);
        if (!sol.feasible)
        {
            std::printf("INFEASIBLE: %s\n", sol.diagnostic.c_str());
            std::fprintf(stderr, "manoma: infeasible instance: %s\n", sol.diagnostic.c_str());
            return infeasible;
        }
        std::printf("feasible = true\n");
        return ok;
    }

    int cmd_sweep(const Flags &f)
    {
        const manoma::RunConfig run = resolve(f);
        if (!run.sweep)
            throw manoma::ConfigError("sweep: give --sweep power|users or a 'sweep' key in the config");
        if (f.out.empty())
            throw manoma::ConfigError("--out: output path required");

        std::ofstream csv(f.out, std::ios::binary);
        if (!csv)
            throw std::ios_base::failure("cannot write output file '" + f.out + "'");
        const std::string manifest_path = f.out + ".manifest";
        std::ofstream manifest(manifest_path, std::ios::binary);
        if (!manifest)
            throw std::ios_base::failure("cannot write manifest file '" + manifest_path + "'");

        const std::size_t step = std::max<std::size_t>(1, run.scenario.realizations / 10);
        auto progress = [step](std::size_t done, std::size_t total) {
            if (done % step == 0 || done == total)
                std::fprintf(stderr, "realization %zu/%zu\n", done, total);
        };

        const auto start = std::chrono::steady_clock::now();
        const auto points = manoma::run_sweep(run, f.workers, progress);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        csv << manoma::sweep_csv(points, run.scenario);
        manifest << manoma::sweep_manifest(run, points, seconds);
        csv.flush();
        manifest.flush();
        if (!csv || !manifest)
            throw std::ios_base::failure("failed writing '" + f.out + "' or its manifest");
        std::fprintf(stderr, "wrote %s and %s\n", f.out.c_str(), manifest_path.c_str());
        return ok;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Movable-antenna uplink NOMA sum-rate optimizer and Monte Carlo simulator"};
    app.require_subcommand(1);
    Flags flags;

    auto add_common = [&flags](CLI::App *sub) {
        sub->add_option("--config", flags.config_path, "Config file (key = value with unit suffixes)");
        sub->add_option("--seed", flags.seed, "Base RNG seed (overrides config)");
        sub->add_option("--realizations", flags.realizations, "Monte Carlo realizations (overrides config)");
        sub->add_option("--multistart", flags.multistart, "Extra random SCA starts per user (overrides config)");
        sub->add_option("--sweep", flags.sweep, "Sweep kind: power or users")->check(CLI::IsMember({"power", "users"}));
        sub->add_option("--points", flags.points, "Comma-separated sweep points (dBm or user counts)");
        sub->add_option("--out", flags.out, "Output CSV path");
        sub->add_option("--workers", flags.workers, "Worker threads, 0 = all cores (results do not depend on it)");
    };

    CLI::App *validate = app.add_subcommand("validate", "Parse a config, apply defaults and print it");
    CLI::App *optimize = app.add_subcommand("optimize", "Optimize one channel realization and print the solution");
    CLI::App *sweep = app.add_subcommand("sweep", "Run a P_max or user-count sweep and write CSV plus manifest");
    for (CLI::App *sub : {validate, optimize, sweep})
        add_common(sub);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        return usage_error;
    }

    try
    {
        if (*validate)
            return cmd_validate(flags);
        if (*optimize)
            return cmd_optimize(flags);
        return cmd_sweep(flags);
    }
    catch (const manoma::ConfigError &e)
    {
        std::fprintf(stderr, "manoma: config error: %s\n", e.what());
        return config_error;
    }
    catch (const std::ios_base::failure &e)
    {
        std::fprintf(stderr, "manoma: I/O error: %s\n", e.what());
        return io_error;
    }
    catch (const manoma::DegenerateChannelError &e)
    {
        std::fprintf(stderr, "manoma: numerical error: %s\n", e.what());
        return numerical_error;
    }
    catch (const std::invalid_argument &e)
    {
        std::fprintf(stderr, "manoma: config error: %s\n", e.what());
        return config_error;
    }
}
