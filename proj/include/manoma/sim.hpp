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

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <thread>
#include <vector>

#include "channel.hpp"
#include "noma.hpp"
#include "positioner.hpp"

namespace manoma
{
    inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

    struct ScenarioConfig
    {
        std::size_t num_users = 6;
        std::size_t paths_per_user = 5;
        double p_max_dbm = 10.0;
        double noise_dbm = -80.0;
        double pathloss_exponent = 3.9;
        double distance_min = 80.0; // m
        double distance_max = 100.0;
        double region_side = 2.0; // wavelengths
        double r_min = 0.25;      // bps/Hz, every user
        std::size_t realizations = 1000;
        std::uint64_t seed = 1;
        ScaParams sca;

        void validate() const
        {
            if (num_users < 1)
                throw std::invalid_argument("num_users must be >= 1");
            if (paths_per_user < 1)
                throw std::invalid_argument("paths_per_user must be >= 1");
            if (!std::isfinite(p_max_dbm))
                throw std::invalid_argument("p_max must be finite");
            if (!std::isfinite(noise_dbm))
                throw std::invalid_argument("noise must be finite");
            if (!std::isfinite(pathloss_exponent))
                throw std::invalid_argument("pathloss_exponent must be finite");
            if (!(distance_min > 0.0) || !std::isfinite(distance_max))
                throw std::invalid_argument("distance_range must be positive and finite");
            if (distance_min > distance_max)
                throw std::invalid_argument("distance_range: minimum exceeds maximum");
            if (!(region_side >= 0.0) || !std::isfinite(region_side))
                throw std::invalid_argument("region_side must be finite and >= 0");
            if (!(r_min >= 0.0) || !std::isfinite(r_min))
                throw std::invalid_argument("r_min must be finite and >= 0");
            if (realizations < 1)
                throw std::invalid_argument("realizations must be >= 1");
            sca.validate();
        }

        ChannelModel channel_model() const
        {
            return {paths_per_user, pathloss_exponent, distance_min, distance_max};
        }
        MoveRegion region() const { return {region_side}; }
        double noise_mw() const { return dbm_to_mw(noise_dbm); }
        double p_max_mw() const { return dbm_to_mw(p_max_dbm); }
    };

    enum class Scheme : std::size_t
    {
        NomaMa,
        NomaFpa,
        OmaMa,
        OmaFpa,
        UpperBound,
    };

    inline constexpr std::size_t scheme_count = 5;
    inline constexpr std::array<Scheme, scheme_count> all_schemes = {Scheme::NomaMa, Scheme::NomaFpa, Scheme::OmaMa,
                                                                     Scheme::OmaFpa, Scheme::UpperBound};

    inline constexpr std::string_view scheme_label(Scheme s)
    {
        switch (s)
        {
        case Scheme::NomaMa:
            return "NOMA-MA";
        case Scheme::NomaFpa:
            return "NOMA-FPA";
        case Scheme::OmaMa:
            return "OMA-MA";
        case Scheme::OmaFpa:
            return "OMA-FPA";
        case Scheme::UpperBound:
            return "UPPER-BOUND";
        }
        return "?";
    }

    template <class T>
    using PerScheme = std::array<T, scheme_count>;

    /// Equal time shares, each user at full power in its slot.
    inline double oma_sum_rate(std::span<const double> gains, double p_max, double noise)
    {
        if (gains.empty())
            return 0.0;
        double s = 0.0;
        for (double g : gains)
            s += std::log2(1.0 + g * p_max / noise);
        return s / static_cast<double>(gains.size());
    }

    /// log2(1 + sum_k (sum_n |f_kn|)^2 p_max / noise); independent of positions.
    inline double upper_bound(std::span<const UserChannel> channels, double p_max, double noise)
    {
        double s = 0.0;
        for (const auto &ch : channels)
            s += max_gain_bound(ch);
        return std::log2(1.0 + s * p_max / noise);
    }

    // One channel draw with positions already optimized; independent of P_max.
    struct RealizationDraw
    {
        std::vector<UserChannel> channels;
        std::vector<ScaResult> optimized;
        std::vector<double> gains_ma;
        std::vector<double> gains_fpa;

        std::size_t num_users() const { return channels.size(); }

        /// First k users; valid because per-user streams do not depend on K.
        RealizationDraw prefix(std::size_t k) const
        {
            RealizationDraw d;
            d.channels.assign(channels.begin(), channels.begin() + static_cast<std::ptrdiff_t>(k));
            d.optimized.assign(optimized.begin(), optimized.begin() + static_cast<std::ptrdiff_t>(k));
            d.gains_ma.assign(gains_ma.begin(), gains_ma.begin() + static_cast<std::ptrdiff_t>(k));
            d.gains_fpa.assign(gains_fpa.begin(), gains_fpa.begin() + static_cast<std::ptrdiff_t>(k));
            return d;
        }
    };

    namespace stream
    {
        inline constexpr std::uint64_t channel = 0;
        inline constexpr std::uint64_t multistart = 1;
    }

    /// Samples realization `index` for users 0..num_users-1 and optimizes each
    /// user's antenna position from the origin.
    inline RealizationDraw draw_realization(const ScenarioConfig &cfg, std::uint64_t index, std::size_t num_users)
    {
        RealizationDraw d;
        d.channels.reserve(num_users);
        const ChannelModel model = cfg.channel_model();
        const MoveRegion region = cfg.region();
        for (std::size_t k = 0; k < num_users; ++k)
        {
            std::mt19937_64 rng(stream_seed(cfg.seed, index, k, stream::channel));
            d.channels.push_back(sample_user_channel(model, rng));
        }
        for (std::size_t k = 0; k < num_users; ++k)
        {
            std::mt19937_64 rng(stream_seed(cfg.seed, index, k, stream::multistart));
            d.optimized.push_back(optimize_position(d.channels[k], region, cfg.sca, Position{}, rng));
            d.gains_ma.push_back(d.optimized.back().gain);
            d.gains_fpa.push_back(channel_gain(Position{}, d.channels[k]));
        }
        return d;
    }

    struct RealizationRates
    {
        PerScheme<double> sum_rate{};
        PerScheme<bool> feasible{};
    };

    inline RealizationRates evaluate_schemes(const RealizationDraw &d, double p_max_mw, double noise_mw, double r_min)
    {
        const std::vector<RateRequirement> reqs(d.num_users(), RateRequirement(r_min));
        RealizationRates out;
        out.feasible.fill(true);

        const NomaSolution ma = solve_noma(d.gains_ma, reqs, p_max_mw, noise_mw);
        const NomaSolution fpa = solve_noma(d.gains_fpa, reqs, p_max_mw, noise_mw);
        auto put = [&](Scheme s, double v, bool ok = true) {
            out.sum_rate[static_cast<std::size_t>(s)] = v;
            out.feasible[static_cast<std::size_t>(s)] = ok;
        };
        put(Scheme::NomaMa, ma.sum_rate, ma.feasible);
        put(Scheme::NomaFpa, fpa.sum_rate, fpa.feasible);
        put(Scheme::OmaMa, oma_sum_rate(d.gains_ma, p_max_mw, noise_mw));
        put(Scheme::OmaFpa, oma_sum_rate(d.gains_fpa, p_max_mw, noise_mw));
        put(Scheme::UpperBound, upper_bound(d.channels, p_max_mw, noise_mw));
        return out;
    }

    inline RealizationRates run_realization(const ScenarioConfig &cfg, std::uint64_t index)
    {
        const RealizationDraw d = draw_realization(cfg, index, cfg.num_users);
        return evaluate_schemes(d, cfg.p_max_mw(), cfg.noise_mw(), cfg.r_min);
    }

    struct SchemeStats
    {
        double mean = std::numeric_limits<double>::quiet_NaN();
        double stddev = std::numeric_limits<double>::quiet_NaN();
        std::size_t included = 0;
        std::size_t infeasible = 0;

        double infeasible_fraction() const
        {
            const std::size_t n = included + infeasible;
            return n == 0 ? 0.0 : static_cast<double>(infeasible) / static_cast<double>(n);
        }
    };

    /// Means and sample standard deviations over feasible realizations, summed in index order.
    inline PerScheme<SchemeStats> aggregate(std::span<const RealizationRates> rows)
    {
        PerScheme<SchemeStats> out{};
        for (std::size_t s = 0; s < scheme_count; ++s)
        {
            double sum = 0.0;
            for (const auto &r : rows)
            {
                if (r.feasible[s])
                {
                    sum += r.sum_rate[s];
                    ++out[s].included;
                }
                else
                    ++out[s].infeasible;
            }
            if (out[s].included == 0)
                continue;
            const double mean = sum / static_cast<double>(out[s].included);
            double ss = 0.0;
            for (const auto &r : rows)
                if (r.feasible[s])
                    ss += (r.sum_rate[s] - mean) * (r.sum_rate[s] - mean);
            out[s].mean = mean;
            out[s].stddev = out[s].included > 1 ? std::sqrt(ss / static_cast<double>(out[s].included - 1)) : 0.0;
        }
        return out;
    }

    using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

    /// Runs body(i) for i in [0, n) on `workers` threads (0 = hardware concurrency).
    /// The first exception thrown by any task is rethrown on the caller.
    inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)> &body,
                             const ProgressCallback &progress = {})
    {
        if (workers == 0)
            workers = std::max(1u, std::thread::hardware_concurrency());
        workers = std::min(workers, std::max<std::size_t>(n, 1));

        std::atomic<std::size_t> next{0};
        std::atomic<std::size_t> done{0};
        std::atomic<bool> failed{false};
        std::exception_ptr error;
        std::mutex mutex;

        auto work = [&] {
            for (;;)
            {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load())
                    return;
                try
                {
                    body(i);
                }
                catch (...)
                {
                    std::lock_guard lock(mutex);
                    if (!error)
                        error = std::current_exception();
                    failed = true;
                    return;
                }
                const std::size_t d = done.fetch_add(1) + 1;
                if (progress)
                {
                    std::lock_guard lock(mutex);
                    progress(d, n);
                }
            }
        };

        if (workers == 1)
            work();
        else
        {
            std::vector<std::jthread> pool;
            pool.reserve(workers);
            for (std::size_t w = 0; w < workers; ++w)
                pool.emplace_back(work);
        }
        if (error)
            std::rethrow_exception(error);
    }

    struct SweepPoint
    {
        double value = 0.0; // P_max in dBm or K
        PerScheme<SchemeStats> stats{};
    };

    inline PerScheme<SchemeStats> monte_carlo(const ScenarioConfig &cfg, std::size_t workers = 0,
                                              const ProgressCallback &progress = {})
    {
        cfg.validate();
        std::vector<RealizationRates> rows(cfg.realizations);
        parallel_for(
            cfg.realizations, workers, [&](std::size_t i) { rows[i] = run_realization(cfg, i); }, progress);
        return aggregate(rows);
    }

    /// P_max sweep over identical channel draws (positions do not depend on P_max,
    /// so each draw is optimized once and evaluated at every point).
    inline std::vector<SweepPoint> sweep_power(const ScenarioConfig &cfg, std::span<const double> p_max_dbm,
                                               std::size_t workers = 0, const ProgressCallback &progress = {})
    {
        cfg.validate();
        const std::size_t P = p_max_dbm.size();
        std::vector<std::vector<RealizationRates>> rows(P, std::vector<RealizationRates>(cfg.realizations));
        const double noise = cfg.noise_mw();
        parallel_for(
            cfg.realizations, workers,
            [&](std::size_t i) {
                const RealizationDraw d = draw_realization(cfg, i, cfg.num_users);
                for (std::size_t p = 0; p < P; ++p)
                    rows[p][i] = evaluate_schemes(d, dbm_to_mw(p_max_dbm[p]), noise, cfg.r_min);
            },
            progress);

        std::vector<SweepPoint> out(P);
        for (std::size_t p = 0; p < P; ++p)
            out[p] = {p_max_dbm[p], aggregate(rows[p])};
        return out;
    }

    /// User-count sweep at cfg.p_max_dbm; each smaller-K draw is a prefix of the largest.
    inline std::vector<SweepPoint> sweep_users(const ScenarioConfig &cfg, std::span<const std::size_t> k_list,
                                               std::size_t workers = 0, const ProgressCallback &progress = {})
    {
        cfg.validate();
        if (k_list.empty())
            return {};
        for (std::size_t k : k_list)
            if (k < 1)
                throw std::invalid_argument("sweep_users: user counts must be >= 1");
        const std::size_t k_max = *std::max_element(k_list.begin(), k_list.end());
        const std::size_t N = k_list.size();
        std::vector<std::vector<RealizationRates>> rows(N, std::vector<RealizationRates>(cfg.realizations));
        const double p_max = cfg.p_max_mw();
        const double noise = cfg.noise_mw();
        parallel_for(
            cfg.realizations, workers,
            [&](std::size_t i) {
                const RealizationDraw full = draw_realization(cfg, i, k_max);
                for (std::size_t n = 0; n < N; ++n)
                    rows[n][i] = evaluate_schemes(full.prefix(k_list[n]), p_max, noise, cfg.r_min);
            },
            progress);

        std::vector<SweepPoint> out(N);
        for (std::size_t n = 0; n < N; ++n)
            out[n] = {static_cast<double>(k_list[n]), aggregate(rows[n])};
        return out;
    }
}
