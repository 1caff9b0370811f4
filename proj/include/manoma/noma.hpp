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
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "channel.hpp"

namespace manoma
{
    /// Gains below this are treated as a dead link rather than divided by.
    inline constexpr double min_usable_gain = 1e-30;

    /// Slack allowed when comparing an achieved rate to its requirement.
    inline constexpr double rate_tolerance = 1e-9;

    struct RateRequirement
    {
        double r_min = 0.0; // bps/Hz

        RateRequirement() = default;
        explicit RateRequirement(double r) : r_min(r)
        {
            if (!(r >= 0.0) || !std::isfinite(r))
                throw std::invalid_argument("RateRequirement: r_min must be finite and >= 0");
        }

        /// SINR threshold 2^r_min - 1
        double alpha() const { return std::exp2(r_min) - 1.0; }
    };

    inline std::vector<double> alphas_of(std::span<const RateRequirement> reqs)
    {
        std::vector<double> a(reqs.size());
        std::transform(reqs.begin(), reqs.end(), a.begin(), [](const RateRequirement &r) { return r.alpha(); });
        return a;
    }

    // SIC decoding order. rank(k) is the 0-based position at which user k is
    // decoded; user_at(n) is the user decoded n-th. Users decoded later interfere
    // with users decoded earlier.
    class DecodingOrder
    {
    public:
        DecodingOrder() = default;

        static DecodingOrder from_ranks(std::vector<std::size_t> ranks)
        {
            DecodingOrder o;
            o.sequence_.assign(ranks.size(), ranks.size());
            for (std::size_t k = 0; k < ranks.size(); ++k)
            {
                if (ranks[k] >= ranks.size() || o.sequence_[ranks[k]] != ranks.size())
                    throw std::invalid_argument("DecodingOrder: ranks are not a permutation");
                o.sequence_[ranks[k]] = k;
            }
            o.ranks_ = std::move(ranks);
            return o;
        }

        static DecodingOrder from_sequence(const std::vector<std::size_t> &sequence)
        {
            std::vector<std::size_t> ranks(sequence.size(), sequence.size());
            for (std::size_t n = 0; n < sequence.size(); ++n)
            {
                if (sequence[n] >= sequence.size())
                    throw std::invalid_argument("DecodingOrder: sequence is not a permutation");
                ranks[sequence[n]] = n;
            }
            return from_ranks(std::move(ranks));
        }

        static DecodingOrder identity(std::size_t k)
        {
            std::vector<std::size_t> r(k);
            std::iota(r.begin(), r.end(), std::size_t{0});
            return from_ranks(std::move(r));
        }

        std::size_t size() const { return ranks_.size(); }
        std::size_t rank(std::size_t user) const { return ranks_.at(user); }
        std::size_t user_at(std::size_t position) const { return sequence_.at(position); }
        const std::vector<std::size_t> &ranks() const { return ranks_; }
        const std::vector<std::size_t> &sequence() const { return sequence_; }

        friend bool operator==(const DecodingOrder &, const DecodingOrder &) = default;

    private:
        std::vector<std::size_t> ranks_;
        std::vector<std::size_t> sequence_;
    };

    struct NomaSolution
    {
        DecodingOrder order;
        std::vector<double> powers; // mW
        std::vector<double> rates;  // bps/Hz
        double sum_rate = 0.0;
        bool feasible = false;
        std::string diagnostic;

        /// sum_k |h_k|^2 P_k, the quantity the power control maximizes
        double received_power(std::span<const double> gains) const
        {
            double s = 0.0;
            for (std::size_t k = 0; k < gains.size(); ++k)
                s += gains[k] * powers.at(k);
            return s;
        }
    };

    /// Per-user SIC rates log2(1 + SINR_k) with
    /// SINR_k = g_k P_k / (sum over users decoded after k of g_i P_i + noise).
    inline std::vector<double> sinr_and_rates(std::span<const double> gains, const DecodingOrder &order,
                                              std::span<const double> powers, double noise)
    {
        const std::size_t K = gains.size();
        if (order.size() != K || powers.size() != K)
            throw std::invalid_argument("sinr_and_rates: gains, order and powers differ in size");
        if (!(noise > 0.0))
            throw std::invalid_argument("sinr_and_rates: noise must be positive");
        for (std::size_t k = 0; k < K; ++k)
            if (!(gains[k] >= 0.0) || !(powers[k] >= 0.0))
                throw std::invalid_argument("sinr_and_rates: gains and powers must be >= 0");

        // Walk from the last-decoded user back, accumulating interference.
        std::vector<double> rates(K);
        double interference = 0.0;
        for (std::size_t n = K; n-- > 0;)
        {
            const std::size_t k = order.user_at(n);
            const double signal = gains[k] * powers[k];
            rates[k] = std::log2(1.0 + signal / (interference + noise));
            interference += signal;
        }
        return rates;
    }

    inline double sum_rate_closed_form(std::span<const double> gains, std::span<const double> powers, double noise)
    {
        double s = 0.0;
        for (std::size_t k = 0; k < gains.size(); ++k)
            s += gains[k] * powers[k];
        return std::log2(1.0 + s / noise);
    }

    /// Decreasing order of g_k (1 + 1/alpha_k), ties by user index. Users with
    /// alpha_k = 0 (no rate requirement) have an unbounded key and are decoded
    /// first, among themselves by decreasing gain.
    inline DecodingOrder decoding_order(std::span<const double> gains, std::span<const double> alphas)
    {
        if (gains.size() != alphas.size())
            throw std::invalid_argument("decoding_order: gains and alphas differ in size");
        std::vector<std::size_t> seq(gains.size());
        std::iota(seq.begin(), seq.end(), std::size_t{0});
        auto key = [&](std::size_t k) { return gains[k] * (1.0 + 1.0 / alphas[k]); };
        std::stable_sort(seq.begin(), seq.end(), [&](std::size_t a, std::size_t b) {
            const bool free_a = alphas[a] == 0.0;
            const bool free_b = alphas[b] == 0.0;
            if (free_a != free_b)
                return free_a;
            if (free_a)
                return gains[a] > gains[b];
            return key(a) > key(b);
        });
        return DecodingOrder::from_sequence(seq);
    }

    /// Minimum powers c_k = noise alpha_k / g_k * prod_{i>k} (alpha_i + 1) that meet
    /// every rate requirement with equality. Inputs are in decoding order.
    inline std::vector<double> minimum_powers(std::span<const double> gains, std::span<const double> alphas,
                                              double noise)
    {
        const std::size_t K = gains.size();
        std::vector<double> c(K);
        double tail = 1.0;
        for (std::size_t k = K; k-- > 0;)
        {
            c[k] = noise * alphas[k] / gains[k] * tail;
            tail *= alphas[k] + 1.0;
        }
        return c;
    }

    /// Closed-form optimal powers for users already relabeled into decoding
    /// order (index 0 decoded first). The first user transmits at p_max; while
    /// every earlier user is saturated, user k gets min(p_max, b_k), where b_k is
    /// the largest power that keeps every earlier user's requirement satisfied
    /// when all later users sit at their minimum power c_j; afterwards users get c_k.
    inline std::vector<double> power_allocation(std::span<const double> gains, std::span<const double> alphas,
                                                double p_max, double noise)
    {
        const std::size_t K = gains.size();
        if (alphas.size() != K)
            throw std::invalid_argument("power_allocation: gains and alphas differ in size");
        for (double g : gains)
            if (!(g >= min_usable_gain))
                throw DegenerateChannelError("power_allocation: channel gain below usable floor");

        const std::vector<double> c = minimum_powers(gains, alphas, noise);
        std::vector<double> later_received(K + 1, 0.0); // sum_{j>=k} g_j c_j
        for (std::size_t k = K; k-- > 0;)
            later_received[k] = later_received[k + 1] + gains[k] * c[k];

        std::vector<double> P(K);
        if (K == 0)
            return P;
        P[0] = p_max;
        bool saturated = true;
        for (std::size_t k = 1; k < K; ++k)
        {
            if (!saturated)
            {
                P[k] = c[k];
                continue;
            }
            double b = std::numeric_limits<double>::infinity();
            double between = 0.0; // sum_{q=i+1}^{k-1} g_q p_max
            for (std::size_t i = k; i-- > 0;)
            {
                if (alphas[i] > 0.0)
                {
                    const double candidate = (gains[i] * p_max / alphas[i] - between - later_received[k + 1] - noise)
                                             / gains[k];
                    b = std::min(b, candidate);
                }
                between += gains[i] * p_max;
            }
            P[k] = std::min(p_max, b);
            saturated = P[k] == p_max;
        }
        return P;
    }

    struct FeasibilityReport
    {
        bool feasible = true;
        std::string diagnostic;
    };

    /// Checks the power box and every rate requirement; the diagnostic names the
    /// first violated constraint (users numbered from 1).
    inline FeasibilityReport check_feasibility(const NomaSolution &solution, std::span<const RateRequirement> reqs,
                                               double p_max)
    {
        const std::size_t K = solution.powers.size();
        if (reqs.size() != K || solution.rates.size() != K)
            throw std::invalid_argument("check_feasibility: size mismatch");
        for (std::size_t k = 0; k < K; ++k)
        {
            const double P = solution.powers[k];
            if (!(P >= 0.0 && P <= p_max * (1.0 + 1e-12)))
            {
                std::ostringstream os;
                os << "user " << k + 1 << ": power " << P << " mW outside [0, P_max=" << p_max << " mW]";
                return {false, os.str()};
            }
        }
        for (std::size_t k = 0; k < K; ++k)
        {
            if (solution.rates[k] < reqs[k].r_min - rate_tolerance)
            {
                std::ostringstream os;
                os << "user " << k + 1 << ": min-rate power exceeds P_max (rate " << solution.rates[k]
                   << " bps/Hz < r_min " << reqs[k].r_min << " bps/Hz)";
                return {false, os.str()};
            }
        }
        return {};
    }

    inline void finalize_solution(NomaSolution &sol, std::span<const double> gains, double noise)
    {
        sol.rates = sinr_and_rates(gains, sol.order, sol.powers, noise);
        sol.sum_rate = std::accumulate(sol.rates.begin(), sol.rates.end(), 0.0);
    }

    /// Decoding order and power control for given gains: order by key, relabel,
    /// allocate, map back to user indices, then verify every constraint.
    inline NomaSolution solve_noma(std::span<const double> gains, std::span<const RateRequirement> reqs, double p_max,
                                   double noise)
    {
        const std::size_t K = gains.size();
        if (reqs.size() != K)
            throw std::invalid_argument("solve_noma: gains and requirements differ in size");
        if (!(p_max >= 0.0) || !(noise > 0.0))
            throw std::invalid_argument("solve_noma: p_max must be >= 0 and noise > 0");

        const std::vector<double> alphas = alphas_of(reqs);
        NomaSolution sol;
        sol.order = decoding_order(gains, alphas);

        std::vector<double> g_ord(K), a_ord(K);
        for (std::size_t n = 0; n < K; ++n)
        {
            g_ord[n] = gains[sol.order.user_at(n)];
            a_ord[n] = alphas[sol.order.user_at(n)];
        }
        const std::vector<double> p_ord = power_allocation(g_ord, a_ord, p_max, noise);

        sol.powers.assign(K, 0.0);
        for (std::size_t n = 0; n < K; ++n)
            sol.powers[sol.order.user_at(n)] = std::clamp(p_ord[n], 0.0, p_max);
        finalize_solution(sol, gains, noise);

        FeasibilityReport report = check_feasibility(sol, reqs, p_max);
        sol.feasible = report.feasible;
        sol.diagnostic = std::move(report.diagnostic);
        return sol;
    }
}
