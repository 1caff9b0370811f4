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

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace manoma
{
    using complex = std::complex<double>;
    using ComplexVector = Eigen::VectorXcd;
    using ComplexMatrix = Eigen::MatrixXcd;

    inline constexpr double pi = std::numbers::pi;

    /// Raised when a channel has an identically-zero path response, so the
    /// gain is zero everywhere and position optimization has nothing to do.
    class DegenerateChannelError : public std::domain_error
    {
    public:
        using std::domain_error::domain_error;
    };

    /// Elevation (theta) and azimuth (phi) angle of departure of one path, radians in [0, pi].
    struct PathAngles
    {
        double theta = 0.0;
        double phi = 0.0;
    };

    /// Antenna coordinate relative to the region center, in carrier wavelengths.
    struct Position
    {
        double x = 0.0;
        double y = 0.0;

        friend bool operator==(const Position &, const Position &) = default;
    };

    /// Square moving region [-side/2, side/2]^2 centered on the reference point.
    struct MoveRegion
    {
        double side = 0.0;

        double half() const { return 0.5 * side; }

        bool contains(const Position &z, double tol = 1e-12) const
        {
            return std::abs(z.x) <= half() + tol && std::abs(z.y) <= half() + tol;
        }
    };

    // Multipath description of one user's link: per-path departure angles, the
    // path-response vector (PRV) seen at the base station and the user distance.
    class UserChannel
    {
    public:
        UserChannel(std::vector<PathAngles> angles, ComplexVector prv, double distance = 1.0)
            : angles_(std::move(angles)), prv_(std::move(prv)), distance_(distance)
        {
            if (angles_.empty())
                throw std::invalid_argument("UserChannel: at least one path is required");
            if (static_cast<Eigen::Index>(angles_.size()) != prv_.size())
                throw std::invalid_argument("UserChannel: angles and path responses differ in length");
            if (!(distance_ > 0.0))
                throw std::invalid_argument("UserChannel: distance must be positive");
            for (const auto &a : angles_)
                if (!(a.theta >= 0.0 && a.theta <= pi && a.phi >= 0.0 && a.phi <= pi))
                    throw std::invalid_argument("UserChannel: path angles must lie in [0, pi]");
        }

        std::size_t num_paths() const { return angles_.size(); }
        const std::vector<PathAngles> &angles() const { return angles_; }
        const ComplexVector &prv() const { return prv_; }
        double distance() const { return distance_; }

    private:
        std::vector<PathAngles> angles_;
        ComplexVector prv_;
        double distance_;
    };

    /// Extra path length of a path at position z relative to the origin, in wavelengths.
    inline double propagation_delta(const Position &z, const PathAngles &p)
    {
        return z.x * std::sin(p.theta) * std::cos(p.phi) + z.y * std::cos(p.theta);
    }

    /// Transmit field-response vector: entry p is exp(j 2 pi rho_p(z)).
    inline ComplexVector field_response_vector(const Position &z, const UserChannel &ch)
    {
        const auto &angles = ch.angles();
        ComplexVector g(static_cast<Eigen::Index>(angles.size()));
        for (std::size_t p = 0; p < angles.size(); ++p)
            g[static_cast<Eigen::Index>(p)] = std::polar(1.0, 2.0 * pi * propagation_delta(z, angles[p]));
        return g;
    }

    /// h = f^H g(z)
    inline complex channel_coefficient(const Position &z, const UserChannel &ch)
    {
        return ch.prv().dot(field_response_vector(z, ch)); // Eigen's dot conjugates the left operand
    }

    inline double channel_gain(const Position &z, const UserChannel &ch)
    {
        return std::norm(channel_coefficient(z, ch));
    }

    /// Position-independent ceiling on the gain, (sum_n |f_n|)^2.
    inline double max_gain_bound(const UserChannel &ch)
    {
        const double s = ch.prv().cwiseAbs().sum();
        return s * s;
    }

    /// Parameters of the random geometry model used by sample_user_channel.
    struct ChannelModel
    {
        std::size_t paths = 5;
        double pathloss_exponent = 3.9;
        double distance_min = 80.0;
        double distance_max = 100.0;
    };

    /// Draws one user's channel: distance uniform on [d_min, d_max], angles
    /// uniform on [0, pi], PRV entries i.i.d. CN(0, d^-alpha / L).
    template <class URBG>
    UserChannel sample_user_channel(const ChannelModel &model, URBG &rng)
    {
        if (model.paths == 0)
            throw std::invalid_argument("sample_user_channel: paths must be >= 1");
        if (!(model.distance_min > 0.0) || model.distance_min > model.distance_max)
            throw std::invalid_argument("sample_user_channel: invalid distance range");

        const double d = model.distance_min == model.distance_max
                             ? model.distance_min
                             : std::uniform_real_distribution<double>(model.distance_min, model.distance_max)(rng);
        const double L = static_cast<double>(model.paths);
        const double component_sd = std::sqrt(std::pow(d, -model.pathloss_exponent) / (2.0 * L));

        std::uniform_real_distribution<double> angle(0.0, pi);
        std::normal_distribution<double> normal(0.0, component_sd);

        std::vector<PathAngles> angles(model.paths);
        ComplexVector prv(static_cast<Eigen::Index>(model.paths));
        for (std::size_t p = 0; p < model.paths; ++p)
        {
            angles[p].theta = angle(rng);
            angles[p].phi = angle(rng);
            const double re = normal(rng);
            const double im = normal(rng);
            prv[static_cast<Eigen::Index>(p)] = complex(re, im);
        }
        return UserChannel(std::move(angles), std::move(prv), d);
    }

    // splitmix64 finalizer; used to derive independent per-stream seeds.
    inline std::uint64_t mix_seed(std::uint64_t x)
    {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    /// Seed for the random stream identified by (base seed, realization, user, purpose).
    /// Streams are keyed by user index so a K-user draw is a prefix of any larger-K draw.
    inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t realization, std::uint64_t user,
                                     std::uint64_t purpose = 0)
    {
        std::uint64_t s = mix_seed(seed);
        s = mix_seed(s ^ realization);
        s = mix_seed(s ^ (user + 0x100000000ULL));
        return mix_seed(s ^ (purpose + 0x200000000ULL));
    }
}
