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

/*
Run configuration files.

Flat `key = value` text, one entry per line, `#` starts a comment. Values may be
double-quoted. Physical quantities carry a mandatory unit suffix:

    num_users          = 6
    paths_per_user     = 5
    p_max              = "10 dBm"          # or "10 mW"
    noise              = "-80 dBm"         # or "1e-8 mW"
    pathloss_exponent  = 3.9
    distance_range     = "[80, 100] m"
    region_side        = "2 lambda"
    r_min              = "0.25 bps/Hz"
    realizations       = 1000
    seed               = 1
    sca_threshold      = 1e-5              # relative gain increase
    sca_max_iterations = 2000
    multistart         = 0
    sweep              = "power"           # or "users"
    points             = "0, 2.5, 5"       # dBm for power sweeps, K for user sweeps

Every key is optional; missing keys take the defaults of ScenarioConfig.
Serialization writes every key, so a written file reproduces a run exactly.
*/

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sim.hpp"

namespace manoma
{
    inline constexpr std::string_view version = "0.1.0";

    /// Bad config content; the message names the offending key.
    class ConfigError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    enum class SweepKind
    {
        Power,
        Users,
    };

    inline std::string_view sweep_name(SweepKind k) { return k == SweepKind::Power ? "power" : "users"; }

    inline std::vector<double> default_points(SweepKind k)
    {
        if (k == SweepKind::Power)
            return {0.0, 2.5, 5.0, 7.5, 10.0, 12.5, 15.0, 17.5, 20.0};
        return {2.0, 4.0, 6.0, 8.0, 10.0};
    }

    struct RunConfig
    {
        ScenarioConfig scenario;
        std::optional<SweepKind> sweep;
        std::vector<double> points; // empty: defaults for the sweep kind

        std::vector<double> resolved_points() const
        {
            return points.empty() && sweep ? default_points(*sweep) : points;
        }
    };

    namespace detail
    {
        inline std::string_view trim(std::string_view s)
        {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string_view::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        }

        inline double parse_number(std::string_view text, std::string_view key)
        {
            text = trim(text);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc() || ptr != text.data() + text.size() || text.empty() || !std::isfinite(v))
                throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(text) + "'");
            return v;
        }

        inline std::uint64_t parse_unsigned(std::string_view text, std::string_view key)
        {
            text = trim(text);
            std::uint64_t v = 0;
            const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
                throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" + std::string(text)
                                  + "'");
            return v;
        }

        /// Splits "<number> <unit>"; the unit is mandatory.
        inline std::pair<std::string_view, std::string_view> split_unit(std::string_view text, std::string_view key)
        {
            text = trim(text);
            const auto sp = text.find_last_of(" \t");
            if (sp == std::string_view::npos)
                throw ConfigError(std::string(key) + ": missing unit suffix in '" + std::string(text) + "'");
            return {trim(text.substr(0, sp)), trim(text.substr(sp + 1))};
        }

        inline double parse_quantity(std::string_view text, std::string_view key,
                                     std::initializer_list<std::string_view> units, std::string_view *unit_out = nullptr)
        {
            const auto [num, unit] = split_unit(text, key);
            for (auto u : units)
                if (unit == u)
                {
                    if (unit_out)
                        *unit_out = u;
                    return parse_number(num, key);
                }
            std::string allowed;
            for (auto u : units)
                allowed += (allowed.empty() ? "" : ", ") + std::string(u);
            throw ConfigError(std::string(key) + ": unit '" + std::string(unit) + "' not accepted (use " + allowed
                              + ")");
        }

        /// Power in dBm from "<x> dBm" or "<x> mW".
        inline double parse_power_dbm(std::string_view text, std::string_view key)
        {
            std::string_view unit;
            const double v = parse_quantity(text, key, {"dBm", "mW"}, &unit);
            if (unit == "dBm")
                return v;
            if (!(v > 0.0))
                throw ConfigError(std::string(key) + ": power in mW must be positive");
            return 10.0 * std::log10(v);
        }

        inline std::vector<double> parse_list(std::string_view text, std::string_view key)
        {
            std::vector<double> out;
            text = trim(text);
            if (text.empty())
                return out;
            std::size_t start = 0;
            while (start <= text.size())
            {
                const auto comma = text.find(',', start);
                const auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                      : comma - start);
                out.push_back(parse_number(item, key));
                if (comma == std::string_view::npos)
                    break;
                start = comma + 1;
            }
            return out;
        }

        /// Shortest text that parses back to exactly `v`.
        inline std::string format_number(double v)
        {
            char buf[64];
            const auto res = std::to_chars(buf, buf + sizeof buf, v);
            return std::string(buf, res.ptr);
        }
    }

    /// Parses a single `--points` style list ("0, 5, 10").
    inline std::vector<double> parse_points(std::string_view text) { return detail::parse_list(text, "points"); }

    inline SweepKind parse_sweep_kind(std::string_view text)
    {
        if (text == "power")
            return SweepKind::Power;
        if (text == "users")
            return SweepKind::Users;
        throw ConfigError("sweep: expected 'power' or 'users', got '" + std::string(text) + "'");
    }

    /// Checks sweep points against the sweep kind and the scenario invariants.
    inline void validate_run(const RunConfig &run)
    {
        try
        {
            run.scenario.validate();
        }
        catch (const std::invalid_argument &e)
        {
            throw ConfigError(e.what());
        }
        if (run.sweep == SweepKind::Users)
            for (double k : run.points)
                if (!(k >= 1.0) || k != std::floor(k))
                    throw ConfigError("points: user counts must be integers >= 1");
        if (run.sweep == SweepKind::Power)
            for (double p : run.points)
                if (!std::isfinite(p))
                    throw ConfigError("points: power values must be finite");
    }

    inline RunConfig parse_config(std::istream &in)
    {
        RunConfig run;
        ScenarioConfig &c = run.scenario;
        std::map<std::string, int> seen;
        std::string raw;
        int line_no = 0;
        while (std::getline(in, raw))
        {
            ++line_no;
            std::string_view line = raw;
            bool in_quotes = false;
            for (std::size_t i = 0; i < line.size(); ++i)
            {
                if (line[i] == '"')
                    in_quotes = !in_quotes;
                else if (line[i] == '#' && !in_quotes)
                {
                    line = line.substr(0, i);
                    break;
                }
            }
            line = detail::trim(line);
            if (line.empty())
                continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
            const std::string key(detail::trim(line.substr(0, eq)));
            std::string_view value = detail::trim(line.substr(eq + 1));
            if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
                value = value.substr(1, value.size() - 2);
            if (seen[key]++)
                throw ConfigError(key + ": given more than once (line " + std::to_string(line_no) + ")");

            if (key == "num_users")
                c.num_users = detail::parse_unsigned(value, key);
            else if (key == "paths_per_user")
                c.paths_per_user = detail::parse_unsigned(value, key);
            else if (key == "p_max")
                c.p_max_dbm = detail::parse_power_dbm(value, key);
            else if (key == "noise")
                c.noise_dbm = detail::parse_power_dbm(value, key);
            else if (key == "pathloss_exponent")
                c.pathloss_exponent = detail::parse_number(value, key);
            else if (key == "distance_range")
            {
                const auto [range, unit] = detail::split_unit(value, key);
                if (unit != "m")
                    throw ConfigError(key + ": unit '" + std::string(unit) + "' not accepted (use m)");
                if (range.size() < 2 || range.front() != '[' || range.back() != ']')
                    throw ConfigError(key + ": expected \"[min, max] m\"");
                const auto bounds = detail::parse_list(range.substr(1, range.size() - 2), key);
                if (bounds.size() != 2)
                    throw ConfigError(key + ": expected exactly two bounds");
                if (bounds[0] > bounds[1])
                    throw ConfigError(key + ": minimum " + detail::format_number(bounds[0]) + " exceeds maximum "
                                      + detail::format_number(bounds[1]));
                c.distance_min = bounds[0];
                c.distance_max = bounds[1];
            }
            else if (key == "region_side")
                c.region_side = detail::parse_quantity(value, key, {"lambda", "wavelengths"});
            else if (key == "r_min")
                c.r_min = detail::parse_quantity(value, key, {"bps/Hz"});
            else if (key == "realizations")
                c.realizations = detail::parse_unsigned(value, key);
            else if (key == "seed")
                c.seed = detail::parse_unsigned(value, key);
            else if (key == "sca_threshold")
                c.sca.threshold = detail::parse_number(value, key);
            else if (key == "sca_max_iterations")
                c.sca.max_iterations = detail::parse_unsigned(value, key);
            else if (key == "multistart")
                c.sca.multistart = detail::parse_unsigned(value, key);
            else if (key == "sweep")
                run.sweep = parse_sweep_kind(value);
            else if (key == "points")
                run.points = detail::parse_list(value, key);
            else
                throw ConfigError(key + ": unknown key (line " + std::to_string(line_no) + ")");
        }
        validate_run(run);
        return run;
    }

    inline RunConfig parse_config_text(const std::string &text)
    {
        std::istringstream in(text);
        return parse_config(in);
    }

    inline RunConfig load_config(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::ios_base::failure("cannot read config file '" + path + "'");
        return parse_config(in);
    }

    /// Every key with its resolved value, in the format parse_config reads.
    inline std::string to_config_text(const RunConfig &run)
    {
        const ScenarioConfig &c = run.scenario;
        using detail::format_number;
        std::ostringstream os;
        os << "num_users = " << c.num_users << "\n"
           << "paths_per_user = " << c.paths_per_user << "\n"
           << "p_max = \"" << format_number(c.p_max_dbm) << " dBm\"\n"
           << "noise = \"" << format_number(c.noise_dbm) << " dBm\"\n"
           << "pathloss_exponent = " << format_number(c.pathloss_exponent) << "\n"
           << "distance_range = \"[" << format_number(c.distance_min) << ", " << format_number(c.distance_max)
           << "] m\"\n"
           << "region_side = \"" << format_number(c.region_side) << " lambda\"\n"
           << "r_min = \"" << format_number(c.r_min) << " bps/Hz\"\n"
           << "realizations = " << c.realizations << "\n"
           << "seed = " << c.seed << "\n"
           << "sca_threshold = " << format_number(c.sca.threshold) << "\n"
           << "sca_max_iterations = " << c.sca.max_iterations << "\n"
           << "multistart = " << c.sca.multistart << "\n";
        if (run.sweep)
        {
            os << "sweep = \"" << sweep_name(*run.sweep) << "\"\n";
            os << "points = \"";
            const auto pts = run.resolved_points();
            for (std::size_t i = 0; i < pts.size(); ++i)
                os << (i ? ", " : "") << format_number(pts[i]);
            os << "\"\n";
        }
        return os.str();
    }

    inline const char *csv_header =
        "sweep_value,scheme,mean_sum_rate_bps_hz,std_sum_rate,infeasible_fraction,realizations,seed";

    /// One row per (sweep point, scheme), schemes in fixed order.
    inline std::string sweep_csv(std::span<const SweepPoint> points, const ScenarioConfig &cfg)
    {
        auto num = [](double v) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.12g", v);
            return std::string(buf);
        };
        std::ostringstream os;
        os << csv_header << "\n";
        for (const auto &pt : points)
            for (Scheme s : all_schemes)
            {
                const SchemeStats &st = pt.stats[static_cast<std::size_t>(s)];
                os << num(pt.value) << ',' << scheme_label(s) << ',' << num(st.mean) << ',' << num(st.stddev) << ','
                   << num(st.infeasible_fraction()) << ',' << cfg.realizations << ',' << cfg.seed << "\n";
            }
        return os.str();
    }

    /// Side-car manifest: commented metadata followed by the resolved config,
    /// which parse_config accepts as-is.
    inline std::string sweep_manifest(const RunConfig &run, std::span<const SweepPoint> points, double wall_seconds)
    {
        std::ostringstream os;
        os << "# manoma run manifest\n"
           << "# version: " << version << "\n"
           << "# wall_clock_seconds: " << detail::format_number(wall_seconds) << "\n";
        for (const auto &pt : points)
        {
            os << "# infeasible_fraction sweep_value=" << detail::format_number(pt.value);
            for (Scheme s : all_schemes)
                os << ' ' << scheme_label(s) << '=' << detail::format_number(
                                                          pt.stats[static_cast<std::size_t>(s)].infeasible_fraction());
            os << "\n";
        }
        os << to_config_text(run);
        return os.str();
    }

    /// Runs the sweep a RunConfig describes.
    inline std::vector<SweepPoint> run_sweep(const RunConfig &run, std::size_t workers = 0,
                                             const ProgressCallback &progress = {})
    {
        if (!run.sweep)
            throw ConfigError("sweep: no sweep kind given");
        const auto pts = run.resolved_points();
        if (*run.sweep == SweepKind::Power)
            return sweep_power(run.scenario, pts, workers, progress);
        std::vector<std::size_t> ks(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i)
            ks[i] = static_cast<std::size_t>(pts[i]);
        return sweep_users(run.scenario, ks, workers, progress);
    }
}
