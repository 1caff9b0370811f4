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
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "channel.hpp"

/*
Per-user antenna position optimization.

The gain F(z) = |f^H g(z)|^2 = g(z)^H B g(z), with B = f f^H, is maximized over
the square region by successive convex approximation. At an expansion point
z_ref two minorizers are stacked:

  F(z)    >= 2 Fbar(z) - F(z_ref),            Fbar(z) = Re{ b^H g(z) },  b = B g(z_ref)
  Fbar(z) >= Fbar(z_ref) + grad^T (z - z_ref) - delta/2 |z - z_ref|^2

where delta = 8 pi^2 sum_q |b_q| dominates the Hessian of Fbar. The second bound
is a separable concave quadratic, so its maximizer over the box is the clamped
Newton point z_ref + grad / delta. Both bounds are tight at z_ref, so each step
cannot decrease F.
*/

namespace manoma
{
    using Vector2 = Eigen::Vector2d;

    /// Stopping rule and restarts for optimize_position.
    /// `threshold` is relative: iteration stops once (gain_new - gain) < threshold * gain.
    struct ScaParams
    {
        double threshold = 1e-5;
        std::size_t max_iterations = 2000;
        std::size_t multistart = 0;

        void validate() const
        {
            if (!(threshold >= 0.0))
                throw std::invalid_argument("ScaParams: threshold must be >= 0");
            if (max_iterations < 1)
                throw std::invalid_argument("ScaParams: max_iterations must be >= 1");
        }
    };

    struct ScaResult
    {
        Position position;
        double gain = 0.0;
        std::size_t iterations = 0;
        std::vector<double> gain_trace; // true gain at z^0, z^1, ... of the returned run
    };

    /// B = f f^H
    inline ComplexMatrix coupling_matrix(const UserChannel &ch)
    {
        return ch.prv() * ch.prv().adjoint();
    }

    inline Vector2 direction_cosines(const PathAngles &p)
    {
        return {std::sin(p.theta) * std::cos(p.phi), std::cos(p.theta)};
    }

    // Linear (Fbar) and quadratic (Ftilde) minorizers expanded at one point.
    class SurrogateModel
    {
    public:
        SurrogateModel(const Position &ref, const UserChannel &ch)
            : ref_(ref), ch_(&ch)
        {
            const ComplexVector g_ref = field_response_vector(ref, ch);
            b_ = coupling_matrix(ch) * g_ref;
            ref_gain_ = g_ref.dot(b_).real();
            magnitude_sum_ = b_.cwiseAbs().sum();
            delta_ = 8.0 * pi * pi * magnitude_sum_;
            gradient_ = gradient_at(ref);
        }

        const Position &reference() const { return ref_; }
        const ComplexVector &b() const { return b_; }

        /// F(z_ref), "constant1" of the first bound.
        double reference_gain() const { return ref_gain_; }
        double delta() const { return delta_; }
        const Vector2 &gradient() const { return gradient_; }

        /// Fbar(z) = Re{ b^H g(z) }
        double linear_value(const Position &z) const
        {
            return b_.dot(field_response_vector(z, *ch_)).real();
        }

        /// Gradient of Fbar at an arbitrary z (the expansion point stays fixed through b).
        Vector2 gradient_at(const Position &z) const
        {
            Vector2 grad = Vector2::Zero();
            const auto &angles = ch_->angles();
            for (std::size_t q = 0; q < angles.size(); ++q)
            {
                const complex bq = b_[static_cast<Eigen::Index>(q)];
                const double kappa = 2.0 * pi * propagation_delta(z, angles[q]) - std::arg(bq);
                grad -= 2.0 * pi * std::abs(bq) * std::sin(kappa) * direction_cosines(angles[q]);
            }
            return grad;
        }

        /// Ftilde(z) = -delta/2 |z|^2 + (grad + delta z_ref)^T z
        double quadratic_value(const Position &z) const
        {
            const Vector2 zv(z.x, z.y);
            return -0.5 * delta_ * zv.squaredNorm() + (gradient_ + delta_ * ref_vec()).dot(zv);
        }

        /// "constant2": Fbar(z_ref) - (grad + delta/2 z_ref)^T z_ref
        double quadratic_offset() const
        {
            return linear_value(ref_) - (gradient_ + 0.5 * delta_ * ref_vec()).dot(ref_vec());
        }

        /// Maximizer of Ftilde over the region.
        Position maximize(const MoveRegion &region) const
        {
            if (delta_ == 0.0)
                return ref_;
            const double h = region.half();
            return {std::clamp(ref_.x + gradient_.x() / delta_, -h, h),
                    std::clamp(ref_.y + gradient_.y() / delta_, -h, h)};
        }

    private:
        Vector2 ref_vec() const { return {ref_.x, ref_.y}; }

        Position ref_;
        const UserChannel *ch_;
        ComplexVector b_;
        double ref_gain_ = 0.0;
        double magnitude_sum_ = 0.0;
        double delta_ = 0.0;
        Vector2 gradient_ = Vector2::Zero();
    };

    inline void require_nondegenerate(const UserChannel &ch)
    {
        if (ch.prv().cwiseAbs().maxCoeff() == 0.0)
            throw DegenerateChannelError("channel has an all-zero path response");
    }

    inline Vector2 surrogate_gradient(const Position &z_ref, const UserChannel &ch)
    {
        return SurrogateModel(z_ref, ch).gradient();
    }

    /// delta = 8 pi^2 sum_q |b_q|, an upper bound on the Hessian of Fbar.
    inline double lipschitz_delta(const Position &z_ref, const UserChannel &ch)
    {
        require_nondegenerate(ch);
        return SurrogateModel(z_ref, ch).delta();
    }

    /// One SCA update: exact maximizer of the quadratic surrogate over the box.
    inline Position sca_step(const Position &z_ref, const UserChannel &ch, const MoveRegion &region)
    {
        require_nondegenerate(ch);
        return SurrogateModel(z_ref, ch).maximize(region);
    }

    /// Single SCA run from `init`. A step that would lower the true gain (only
    /// possible through rounding at a stationary point) ends the run instead.
    inline ScaResult optimize_position(const UserChannel &ch, const MoveRegion &region, const ScaParams &params,
                                       const Position &init = {})
    {
        params.validate();
        require_nondegenerate(ch);
        if (!region.contains(init))
            throw std::invalid_argument("optimize_position: initial point outside the moving region");

        ScaResult result;
        result.position = init;
        result.gain = channel_gain(init, ch);
        result.gain_trace.push_back(result.gain);

        while (result.iterations < params.max_iterations)
        {
            const Position next = SurrogateModel(result.position, ch).maximize(region);
            ++result.iterations;
            const double next_gain = channel_gain(next, ch);
            if (next_gain < result.gain)
                break;
            const double increase = next_gain - result.gain;
            result.position = next;
            result.gain = next_gain;
            result.gain_trace.push_back(next_gain);
            if (increase < params.threshold * next_gain || increase == 0.0)
                break;
        }
        return result;
    }

    /// Run from `init` plus `params.multistart` uniform random starts; best gain wins,
    /// earlier runs win ties.
    template <class URBG>
    ScaResult optimize_position(const UserChannel &ch, const MoveRegion &region, const ScaParams &params,
                                const Position &init, URBG &rng)
    {
        ScaResult best = optimize_position(ch, region, params, init);
        if (params.multistart == 0 || region.side == 0.0)
            return best;

        std::uniform_real_distribution<double> coord(-region.half(), region.half());
        for (std::size_t s = 0; s < params.multistart; ++s)
        {
            const double x = coord(rng);
            const double y = coord(rng);
            ScaResult run = optimize_position(ch, region, params, Position{x, y});
            if (run.gain > best.gain)
                best = std::move(run);
        }
        return best;
    }

    struct GridResult
    {
        Position position;
        double gain = 0.0;
    };

    /// Grid coordinates along one axis: origin-anchored multiples of `step` plus both edges.
    inline std::vector<double> grid_axis(double half, double step)
    {
        if (!(step > 0.0))
            throw std::invalid_argument("grid_axis: step must be positive");
        const auto n = static_cast<long>(std::floor(half / step + 1e-9));
        std::vector<double> axis;
        axis.reserve(static_cast<std::size_t>(2 * n + 3));
        if (n * step < half - 1e-12)
            axis.push_back(-half);
        for (long i = -n; i <= n; ++i)
            axis.push_back(static_cast<double>(i) * step);
        if (n * step < half - 1e-12)
            axis.push_back(half);
        return axis;
    }

    /// Exhaustive search of |h(z)|^2 on the grid; row-major scan, first maximum wins.
    inline GridResult grid_oracle(const UserChannel &ch, const MoveRegion &region, double step)
    {
        const std::vector<double> axis = grid_axis(region.half(), step);
        GridResult best{{axis.front(), axis.front()}, -1.0};
        for (double y : axis)
            for (double x : axis)
            {
                const double gain = channel_gain({x, y}, ch);
                if (gain > best.gain)
                    best = {{x, y}, gain};
            }
        return best;
    }
}
