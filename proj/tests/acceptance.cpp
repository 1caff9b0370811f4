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

// Acceptance suite. Each criterion prints one PASS/FAIL line with its measured
// value; the exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <manoma/config.hpp>
#include <manoma/noma.hpp>
#include <manoma/noma_oracle.hpp>
#include <manoma/positioner.hpp>
#include <manoma/sim.hpp>

#include "test_support.hpp"

using namespace manoma;
namespace ts = testing_support;

namespace
{
    struct Outcome
    {
        bool pass = false;
        std::string detail;
    };

    int failures = 0;

    void criterion(int id, const char *name, double budget_seconds, const std::function<Outcome()> &body)
    {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o = body();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (budget_seconds > 0.0 && secs > budget_seconds)
        {
            o.pass = false;
            o.detail += " [runtime budget " + std::to_string(budget_seconds) + " s exceeded]";
        }
        if (!o.pass)
            ++failures;
        std::printf("[%s] %2d %-34s %7.2f s  %s\n", o.pass ? "PASS" : "FAIL", id, name, secs, o.detail.c_str());
        std::fflush(stdout);
    }

    std::string fmt(const char *f, double a, double b = 0.0, double c = 0.0)
    {
        char buf[256];
        std::snprintf(buf, sizeof buf, f, a, b, c);
        return buf;
    }

    // Long-double reference surrogate for the gradient oracle.
    long double surrogate_ld(const UserChannel &ch, const Position &z_ref, long double x, long double y)
    {
        using cld = std::complex<long double>;
        const long double two_pi = 2.0L * 3.141592653589793238462643383279502884L;
        cld h_ref = 0.0L, h = 0.0L;
        for (std::size_t n = 0; n < ch.num_paths(); ++n)
        {
            const auto &a = ch.angles()[n];
            const long double ux = std::sin(static_cast<long double>(a.theta)) * std::cos(static_cast<long double>(a.phi));
            const long double uy = std::cos(static_cast<long double>(a.theta));
            const complex f = ch.prv()[static_cast<Eigen::Index>(n)];
            const cld fc(f.real(), -f.imag());
            h_ref += fc * std::polar(1.0L, two_pi * (z_ref.x * ux + z_ref.y * uy));
            h += fc * std::polar(1.0L, two_pi * (x * ux + y * uy));
        }
        return (std::conj(h_ref) * h).real();
    }

    Position random_point(std::mt19937_64 &rng, double half)
    {
        std::uniform_real_distribution<double> c(-half, half);
        const double x = c(rng);
        return {x, c(rng)};
    }

    // Realistic power-control instance: origin gains of sampled channels.
    struct PcInstance
    {
        std::vector<double> gains;
        std::vector<RateRequirement> reqs;
        double p_max = 0.0;
        double noise = 0.0;
    };

    PcInstance random_pc_instance(std::mt19937_64 &rng, std::size_t K, double r_hi)
    {
        const ChannelModel model{5, 3.9, 80.0, 100.0};
        std::uniform_real_distribution<double> p_dbm(0.0, 20.0), rate(0.05, r_hi);
        PcInstance in;
        in.noise = dbm_to_mw(-80.0);
        in.p_max = dbm_to_mw(p_dbm(rng));
        for (std::size_t k = 0; k < K; ++k)
        {
            in.gains.push_back(channel_gain({0.0, 0.0}, sample_user_channel(model, rng)));
            in.reqs.emplace_back(rate(rng));
        }
        return in;
    }

    bool non_decreasing(const std::vector<double> &v)
    {
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i] < v[i - 1])
                return false;
        return true;
    }

    double ls_slope(const std::vector<double> &x, const std::vector<double> &y)
    {
        const double n = static_cast<double>(x.size());
        const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
        const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            sxy += (x[i] - mx) * (y[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
        }
        return sxy / sxx;
    }

    constexpr std::size_t idx(Scheme s) { return static_cast<std::size_t>(s); }
}

int main()
{
    std::printf("manoma acceptance suite (version %s)\n", std::string(version).c_str());

    criterion(1, "gradient vs finite differences", 5.0, [] {
        // rel. error = |analytic - fd| / max(|fd|, 1e-6 * 2 pi sum|b_q|); fd in long double, step 1e-6
        std::mt19937_64 rng(1001);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i)
        {
            const UserChannel ch = ts::random_channel(rng, 1 + i % 8);
            const Position z = random_point(rng, 1.0);
            const Vector2 g = surrogate_gradient(z, ch);
            const long double h = 1e-6L;
            const double fx = static_cast<double>((surrogate_ld(ch, z, z.x + h, z.y) - surrogate_ld(ch, z, z.x - h, z.y))
                                                  / (2.0L * h));
            const double fy = static_cast<double>((surrogate_ld(ch, z, z.x, z.y + h) - surrogate_ld(ch, z, z.x, z.y - h))
                                                  / (2.0L * h));
            const Vector2 fd(fx, fy);
            const double scale = std::max(fd.norm(), 1e-6 * 2.0 * pi * ts::reference_b_magnitude_sum(ch, z));
            worst = std::max(worst, (g - fd).norm() / scale);
        }
        return Outcome{worst < 1e-6, fmt("max rel. error %.3e over 1000 instances (tol 1e-6)", worst)};
    });

    criterion(2, "Hessian majorant delta", 10.0, [] {
        std::mt19937_64 rng(1002);
        int violations = 0;
        double worst_ratio = 0.0;
        for (int i = 0; i < 1000; ++i)
        {
            const UserChannel ch = ts::random_channel(rng, 1 + i % 8);
            const Position z_ref = random_point(rng, 1.0);
            const double delta = lipschitz_delta(z_ref, ch);
            const double lam = ts::fd_hessian_max_eigenvalue(ch, z_ref, random_point(rng, 1.0), 1e-4);
            violations += lam > delta;
            worst_ratio = std::max(worst_ratio, lam / delta);
        }
        return Outcome{violations == 0,
                       fmt("%.0f violations in 1000; max lambda_max/delta = %.4f", violations, worst_ratio)};
    });

    criterion(3, "minorization chain", 0.0, [] {
        std::mt19937_64 rng(1003);
        double min_slack = 1e300, max_gap = 0.0;
        for (int i = 0; i < 1000; ++i)
        {
            const UserChannel ch = ts::random_channel(rng, 1 + i % 8);
            const Position z_ref = random_point(rng, 1.0);
            const Position z = random_point(rng, 1.0);
            const SurrogateModel m(z_ref, ch);
            const double F = ts::reference_gain(ch, z);
            const double Fbar = m.linear_value(z);
            min_slack = std::min(min_slack, F - (2.0 * Fbar - m.reference_gain()));
            min_slack = std::min(min_slack, Fbar - (m.quadratic_value(z) + m.quadratic_offset()));
            const double F_ref = ts::reference_gain(ch, z_ref);
            const double Fbar_ref = m.linear_value(z_ref);
            max_gap = std::max(max_gap, std::abs(F_ref - (2.0 * Fbar_ref - m.reference_gain())));
            max_gap = std::max(max_gap, std::abs(Fbar_ref - (m.quadratic_value(z_ref) + m.quadratic_offset())));
        }
        return Outcome{min_slack >= -1e-9 && max_gap < 1e-9,
                       fmt("min slack %.3e (>= -1e-9), max gap at expansion point %.3e (< 1e-9)", min_slack, max_gap)};
    });

    criterion(4, "SCA ascent + local optimality", 120.0, [] {
        std::mt19937_64 rng(1004);
        const ChannelModel model{3, 3.9, 80.0, 100.0};
        const MoveRegion region{2.0};
        ScaParams params;
        params.multistart = 10;
        int within = 0, ascent_violations = 0;
        double worst = 1.0;
        for (int i = 0; i < 100; ++i)
        {
            const UserChannel ch = sample_user_channel(model, rng);
            std::mt19937_64 starts(stream_seed(1004, static_cast<std::uint64_t>(i), 0, 1));
            // Ascent is checked on every individual run, not just the best one.
            std::uniform_real_distribution<double> c(-1.0, 1.0);
            for (int s = 0; s < 3; ++s)
            {
                const ScaResult run = optimize_position(ch, region, params, Position{c(starts), c(starts)});
                ascent_violations += !non_decreasing(run.gain_trace);
            }
            const ScaResult r = optimize_position(ch, region, params, Position{}, starts);
            ascent_violations += !non_decreasing(r.gain_trace);
            const GridResult g = grid_oracle(ch, region, 0.01);
            within += r.gain >= 0.98 * g.gain;
            worst = std::min(worst, r.gain / g.gain);
        }
        return Outcome{ascent_violations == 0 && within >= 90,
                       fmt("%.0f/100 within 2%% of grid (need >= 90); ascent violations %.0f; worst ratio %.4f", within,
                           ascent_violations, worst)};
    });

    criterion(5, "closed-form power control vs oracle", 0.0, [] {
        std::mt19937_64 rng(1005);
        int feasible = 0, infeasible = 0, verdict_mismatch = 0, draws = 0;
        double worst = 0.0;
        while (feasible < 200 && draws < 100000)
        {
            ++draws;
            const std::size_t K = 2 + static_cast<std::size_t>(draws % 2);
            const PcInstance in = random_pc_instance(rng, K, 3.0);
            const NomaSolution closed = solve_noma(in.gains, in.reqs, in.p_max, in.noise);
            const NomaSolution bf = brute_force_allocation(in.gains, alphas_of(in.reqs), in.p_max, in.noise);
            if (closed.feasible != bf.feasible)
            {
                ++verdict_mismatch;
                continue;
            }
            if (!bf.feasible)
            {
                ++infeasible;
                continue;
            }
            ++feasible;
            const double a = closed.received_power(in.gains), b = bf.received_power(in.gains);
            worst = std::max(worst, std::abs(a - b) / b);
        }
        std::string d = fmt("feasible %.0f, infeasible %.0f, verdict mismatches %.0f; ", feasible, infeasible,
                            verdict_mismatch);
        d += fmt("max rel. objective error %.3e (tol 1e-6)", worst);
        return Outcome{feasible >= 200 && verdict_mismatch == 0 && worst < 1e-6, d};
    });

    criterion(6, "telescoping sum-rate identity", 0.0, [] {
        std::mt19937_64 rng(1006);
        std::exponential_distribution<double> gain(1.0);
        std::uniform_real_distribution<double> power(0.0, 10.0);
        double worst = 0.0;
        for (int i = 0; i < 10000; ++i)
        {
            const std::size_t K = 1 + static_cast<std::size_t>(i % 10);
            std::vector<double> g(K), p(K);
            std::vector<std::size_t> seq(K);
            std::iota(seq.begin(), seq.end(), std::size_t{0});
            std::shuffle(seq.begin(), seq.end(), rng);
            for (std::size_t k = 0; k < K; ++k)
            {
                g[k] = gain(rng);
                p[k] = power(rng);
            }
            const auto r = sinr_and_rates(g, DecodingOrder::from_sequence(seq), p, 0.3);
            worst = std::max(worst, std::abs(std::accumulate(r.begin(), r.end(), 0.0) - sum_rate_closed_form(g, p, 0.3)));
        }
        return Outcome{worst < 1e-9, fmt("max |sum R_k - log2(1+sum g P/noise)| = %.3e (tol 1e-9)", worst)};
    });

    criterion(7, "minimum-rate tightness", 0.0, [] {
        std::mt19937_64 rng(1007);
        int feasible = 0, tight_users = 0, draws = 0;
        double worst = 0.0;
        while (feasible < 200 && draws < 100000)
        {
            ++draws;
            const std::size_t K = 2 + static_cast<std::size_t>(draws % 7);
            const PcInstance in = random_pc_instance(rng, K, 1.5);
            const NomaSolution sol = solve_noma(in.gains, in.reqs, in.p_max, in.noise);
            if (!sol.feasible)
                continue;
            ++feasible;
            // Users after the first non-saturated one are assigned their minimum power.
            bool saturated = true;
            for (std::size_t n = 1; n < K; ++n)
            {
                saturated = saturated && sol.powers[sol.order.user_at(n - 1)] == in.p_max;
                if (saturated)
                    continue;
                const std::size_t k = sol.order.user_at(n);
                ++tight_users;
                worst = std::max(worst, std::abs(sol.rates[k] - in.reqs[k].r_min));
            }
        }
        std::string d = fmt("%.0f feasible instances, %.0f minimum-power users, ", feasible, tight_users);
        d += fmt("max |R_k - r_min| = %.3e (tol 1e-8)", worst);
        return Outcome{feasible >= 200 && tight_users > 0 && worst < 1e-8, d};
    });

    criterion(8, "P_max sweep ordering", 600.0, [] {
        ScenarioConfig cfg; // K=6, L=5, r_min=0.25, alpha=3.9, noise -80 dBm, A=2, d in [80,100]
        cfg.realizations = 1000;
        cfg.seed = 2024;
        const std::vector<double> pts{0.0, 5.0, 10.0, 15.0, 20.0};

        // Per-realization bound check on the same draws the sweep uses.
        int bound_violations = 0;
        for (std::size_t i = 0; i < cfg.realizations; ++i)
        {
            const RealizationDraw d = draw_realization(cfg, i, cfg.num_users);
            for (double p : pts)
            {
                const RealizationRates r = evaluate_schemes(d, dbm_to_mw(p), cfg.noise_mw(), cfg.r_min);
                for (Scheme s : all_schemes)
                    bound_violations += r.sum_rate[idx(s)] > r.sum_rate[idx(Scheme::UpperBound)] + 1e-12;
            }
        }

        const auto sweep = sweep_power(cfg, pts, 0);
        bool ordered = true, monotone = true;
        std::string d;
        for (Scheme s : all_schemes)
        {
            std::vector<double> means;
            for (const auto &pt : sweep)
                means.push_back(pt.stats[idx(s)].mean);
            monotone = monotone && non_decreasing(means);
        }
        for (const auto &pt : sweep)
        {
            const auto &st = pt.stats;
            ordered = ordered && st[idx(Scheme::NomaMa)].mean > st[idx(Scheme::NomaFpa)].mean
                      && st[idx(Scheme::NomaFpa)].mean > st[idx(Scheme::OmaMa)].mean
                      && st[idx(Scheme::OmaMa)].mean > st[idx(Scheme::OmaFpa)].mean;
            d += fmt("| %.0f dBm: %.3f ", pt.value, st[idx(Scheme::NomaMa)].mean);
            d += fmt("%.3f %.3f ", st[idx(Scheme::NomaFpa)].mean, st[idx(Scheme::OmaMa)].mean);
            d += fmt("%.3f ub %.3f ", st[idx(Scheme::OmaFpa)].mean, st[idx(Scheme::UpperBound)].mean);
        }
        std::string head = std::string("ordering ") + (ordered ? "ok" : "BROKEN") + ", monotone "
                           + (monotone ? "ok" : "BROKEN") + fmt(", bound violations %.0f ", bound_violations);
        return Outcome{ordered && monotone && bound_violations == 0, head + d};
    });

    criterion(9, "user-count sweep shape", 600.0, [] {
        ScenarioConfig cfg;
        cfg.realizations = 1000;
        cfg.seed = 2025;
        cfg.p_max_dbm = 10.0;
        const std::vector<std::size_t> ks{2, 4, 6, 8};
        const auto sweep = sweep_users(cfg, ks, 0);
        std::vector<double> x, noma, oma;
        for (const auto &pt : sweep)
        {
            x.push_back(pt.value);
            noma.push_back(pt.stats[idx(Scheme::NomaMa)].mean);
            oma.push_back(pt.stats[idx(Scheme::OmaMa)].mean);
        }
        const double s_noma = ls_slope(x, noma), s_oma = ls_slope(x, oma);
        const bool ok = non_decreasing(noma) && std::abs(s_oma) < 0.2 * std::abs(s_noma);
        std::string d = fmt("NOMA-MA slope %.4f, OMA-MA slope %.4f (ratio %.3f < 0.2); ", s_noma, s_oma,
                            std::abs(s_oma / s_noma));
        d += "NOMA-MA means";
        for (double m : noma)
            d += fmt(" %.3f", m);
        return Outcome{ok, d};
    });

    criterion(10, "determinism", 0.0, [] {
        RunConfig run;
        run.scenario.realizations = 60;
        run.scenario.seed = 77;
        run.scenario.sca.multistart = 2;
        bool same = true;
        for (SweepKind kind : {SweepKind::Power, SweepKind::Users})
        {
            run.sweep = kind;
            run.points = kind == SweepKind::Power ? std::vector<double>{0.0, 10.0, 20.0} : std::vector<double>{1, 3, 6};
            const std::string a = sweep_csv(run_sweep(run, 1), run.scenario);
            const std::string b = sweep_csv(run_sweep(run, 1), run.scenario);
            const std::string c = sweep_csv(run_sweep(run, 4), run.scenario);
            const RunConfig from_manifest = parse_config_text(sweep_manifest(run, run_sweep(run, 2), 0.0));
            const std::string m = sweep_csv(run_sweep(from_manifest, 3), from_manifest.scenario);
            same = same && a == b && a == c && a == m;
        }
        return Outcome{same, same ? "CSV byte-identical across runs, 1/2/3/4 workers and manifest replay"
                                  : "CSV output differs"};
    });

    std::printf("%d criteria failed\n", failures);
    return failures;
}
