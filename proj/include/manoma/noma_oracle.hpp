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
#include <bit>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "noma.hpp"

// Reference solver for the power-control problem: every decoding order, each
// with an exact linear program solved by vertex enumeration. Exponential in K,
// intended for checking the closed form on small instances.

namespace manoma
{
    class UnsupportedSizeError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    inline constexpr std::size_t brute_force_max_users = 4;

    namespace detail
    {
        // max sum g_k P_k  s.t.  A P <= rhs  (SINR rows, upper and lower bounds).
        // Powers are scaled by 1/p_max and SINR rows by 1/noise for conditioning.
        inline std::optional<std::vector<double>> solve_order_lp(std::span<const double> gains,
                                                                 std::span<const double> alphas,
                                                                 const DecodingOrder &order, double p_max,
                                                                 double noise)
        {
            const auto K = static_cast<Eigen::Index>(gains.size());
            const Eigen::Index rows = 3 * K;
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, K);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
            const double snr = p_max / noise;
            for (Eigen::Index k = 0; k < K; ++k)
            {
                const auto uk = static_cast<std::size_t>(k);
                A(k, k) = -gains[uk] * snr;
                for (Eigen::Index i = 0; i < K; ++i)
                    if (order.rank(static_cast<std::size_t>(i)) > order.rank(uk))
                        A(k, i) = alphas[uk] * gains[static_cast<std::size_t>(i)] * snr;
                rhs[k] = -alphas[uk];
                A(K + k, k) = 1.0;
                rhs[K + k] = 1.0;
                A(2 * K + k, k) = -1.0;
                rhs[2 * K + k] = 0.0;
            }

            Eigen::VectorXd objective(K);
            for (Eigen::Index k = 0; k < K; ++k)
                objective[k] = gains[static_cast<std::size_t>(k)];

            std::optional<Eigen::VectorXd> best;
            double best_value = -1.0;
            const unsigned limit = 1u << rows;
            for (unsigned mask = 0; mask < limit; ++mask)
            {
                if (std::popcount(mask) != K)
                    continue;
                Eigen::MatrixXd M(K, K);
                Eigen::VectorXd r(K);
                Eigen::Index filled = 0;
                for (Eigen::Index row = 0; row < rows; ++row)
                    if (mask & (1u << row))
                    {
                        M.row(filled) = A.row(row);
                        r[filled] = rhs[row];
                        ++filled;
                    }
                Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
                if (lu.rank() < K)
                    continue;
                const Eigen::VectorXd x = lu.solve(r);
                bool ok = true;
                for (Eigen::Index row = 0; row < rows && ok; ++row)
                {
                    const double lhs = A.row(row).dot(x);
                    const double scale = A.row(row).cwiseAbs().dot(x.cwiseAbs()) + std::abs(rhs[row]) + 1.0;
                    ok = lhs <= rhs[row] + 1e-10 * scale;
                }
                if (!ok)
                    continue;
                const double value = objective.dot(x);
                if (!best || value > best_value)
                {
                    best = x;
                    best_value = value;
                }
            }
            if (!best)
                return std::nullopt;
            std::vector<double> powers(static_cast<std::size_t>(K));
            for (Eigen::Index k = 0; k < K; ++k)
                powers[static_cast<std::size_t>(k)] = std::clamp((*best)[k], 0.0, 1.0) * p_max;
            return powers;
        }
    }

    /// Best feasible (order, powers) over all K! decoding orders; `feasible` is
    /// false when no order admits a feasible power vector.
    inline NomaSolution brute_force_allocation(std::span<const double> gains, std::span<const double> alphas,
                                               double p_max, double noise)
    {
        const std::size_t K = gains.size();
        if (K > brute_force_max_users)
            throw UnsupportedSizeError("brute_force_allocation: at most 4 users supported");
        if (alphas.size() != K)
            throw std::invalid_argument("brute_force_allocation: gains and alphas differ in size");

        NomaSolution best;
        best.order = DecodingOrder::identity(K);
        best.powers.assign(K, p_max);
        double best_value = -1.0;

        std::vector<std::size_t> seq(K);
        std::iota(seq.begin(), seq.end(), std::size_t{0});
        do
        {
            const DecodingOrder order = DecodingOrder::from_sequence(seq);
            const auto powers = detail::solve_order_lp(gains, alphas, order, p_max, noise);
            if (!powers)
                continue;
            double value = 0.0;
            for (std::size_t k = 0; k < K; ++k)
                value += gains[k] * (*powers)[k];
            if (value > best_value)
            {
                best_value = value;
                best.order = order;
                best.powers = *powers;
                best.feasible = true;
            }
        } while (std::next_permutation(seq.begin(), seq.end()));

        finalize_solution(best, gains, noise);
        if (!best.feasible)
            best.diagnostic = "no decoding order admits a feasible power vector";
        return best;
    }
}
