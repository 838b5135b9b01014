// config.hpp — run configuration shared by the command-line tool: a plain
// `key = value` file format with `#` comments, merged with flag values.
// State indices are 1-based here and converted at the library boundary.

#pragma once

#include "qmc/errors.hpp"
#include "qmc/linalg.hpp"
#include "qmc/model.hpp"
#include "qmc/rng.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qmc {

enum class Command { Evolve, Sample, OracleCheck, Period, Fit, Sweep, Verify, Certify };

inline std::string_view to_string(Command c) noexcept {
    switch (c) {
        case Command::Evolve: return "evolve";
        case Command::Sample: return "sample";
        case Command::OracleCheck: return "oracle-check";
        case Command::Period: return "period";
        case Command::Fit: return "fit";
        case Command::Sweep: return "sweep";
        case Command::Verify: return "verify";
        case Command::Certify: return "certify";
    }
    return "?";
}

// Unset list fields mean "use the default" (or the table preset for sweeps).
struct RunConfig {
    Command command{Command::Evolve};
    std::vector<double> p;
    std::vector<double> zeta;
    std::vector<double> lambda;
    std::vector<std::size_t> dim;
    GraphKind graph{GraphKind::FullyConnected};
    ScheduleForm schedule{ScheduleForm::Exponential};
    std::size_t start{1};
    std::optional<std::uint64_t> t;
    std::uint64_t samples{10000};
    std::uint64_t seed{kDefaultSeed};
    std::string out;  // empty: standard output
    unsigned workers{1};
    std::optional<int> table;
    double switchover{0.5};

    [[nodiscard]] double p_value() const { return single(p, 0.0, "p"); }
    [[nodiscard]] double zeta_value() const { return single(zeta, 1.0, "zeta"); }
    [[nodiscard]] double lambda_value() const { return single(lambda, 1.0, "lambda"); }
    [[nodiscard]] std::size_t dim_value() const { return single(dim, std::size_t{2}, "dim"); }

    // Defaults mirror the experiments each command reproduces.
    [[nodiscard]] std::uint64_t horizon() const {
        if (t) return *t;
        switch (command) {
            case Command::Evolve: return 5000;
            case Command::Sample: return 50;
            case Command::OracleCheck: return 6;
            case Command::Period: return p_value() > 0.0 ? 2000 : 50000;
            case Command::Fit: return 2000;
            case Command::Sweep: return 2000;
            case Command::Verify: return 0;
            case Command::Certify: return 2000;
        }
        return 0;
    }

    [[nodiscard]] std::size_t start_index() const noexcept { return start - 1; }

    [[nodiscard]] GeneratorSpec generator() const { return {graph, dim_value(), lambda_value(), std::nullopt}; }
    [[nodiscard]] ScheduleParams schedule_params() const { return {zeta_value(), schedule}; }

private:
    template <class T>
    static T single(const std::vector<T>& v, T fallback, const char* key) {
        if (v.empty()) return fallback;
        if (v.size() > 1) throw ConfigError(std::string("'") + key + "' takes a single value for this command");
        return v.front();
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = s.find(',', pos);
        out.push_back(trim(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

inline double parse_real(std::string_view key, std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
        throw ConfigError("'" + std::string(key) + "': not a number: '" + std::string(s) + "'");
    return v;
}

inline std::uint64_t parse_unsigned(std::string_view key, std::string_view s) {
    std::uint64_t v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end)
        throw ConfigError("'" + std::string(key) + "': not a nonnegative integer: '" + std::string(s) + "'");
    return v;
}

[[noreturn]] inline void domain(std::string_view key, const std::string& what) {
    throw DomainError("'" + std::string(key) + "': " + what);
}

}  // namespace detail

// Keys accepted both in files and as `--key` flags.
inline constexpr std::array<std::string_view, 14> kConfigKeys{
    "p", "zeta", "lambda", "dim", "graph", "schedule", "start",
    "t", "samples", "seed", "out", "workers", "table", "switchover"};

// Applies one setting; list-valued keys (p, zeta, lambda, dim) accept
// comma-separated values.
inline void apply_setting(RunConfig& cfg, std::string_view key, std::string_view raw) {
    using namespace detail;
    const auto value = trim(raw);
    if (key == "p" || key == "zeta" || key == "lambda") {
        std::vector<double> vals;
        for (auto item : split_list(value)) {
            const double v = parse_real(key, item);
            if (key == "p" && !(v >= 0.0 && v <= 1.0)) domain(key, "must lie in [0, 1]");
            if (key == "zeta" && !(v >= 0.0)) domain(key, "must be >= 0");
            if (key == "lambda" && !(v > 0.0)) domain(key, "must be > 0");
            vals.push_back(v);
        }
        (key == "p" ? cfg.p : key == "zeta" ? cfg.zeta : cfg.lambda) = std::move(vals);
    } else if (key == "dim") {
        std::vector<std::size_t> vals;
        for (auto item : split_list(value)) {
            const auto v = parse_unsigned(key, item);
            if (v < 2 || v > kMaxDim) domain(key, "must be in [2, 64]");
            vals.push_back(static_cast<std::size_t>(v));
        }
        cfg.dim = std::move(vals);
    } else if (key == "graph") {
        if (value == "full") cfg.graph = GraphKind::FullyConnected;
        else if (value == "cyclic") cfg.graph = GraphKind::Cyclic;
        else throw ConfigError("'graph': expected full or cyclic, got '" + std::string(value) + "'");
    } else if (key == "schedule") {
        if (value == "exp") cfg.schedule = ScheduleForm::Exponential;
        else if (value == "sqrt2x2") cfg.schedule = ScheduleForm::TwoByTwoSqrt;
        else throw ConfigError("'schedule': expected exp or sqrt2x2, got '" + std::string(value) + "'");
    } else if (key == "start") {
        const auto v = parse_unsigned(key, value);
        if (v < 1) domain(key, "states are numbered from 1");
        cfg.start = static_cast<std::size_t>(v);
    } else if (key == "t") {
        cfg.t = parse_unsigned(key, value);
    } else if (key == "samples") {
        const auto v = parse_unsigned(key, value);
        if (v < 1) domain(key, "must be >= 1");
        cfg.samples = v;
    } else if (key == "seed") {
        cfg.seed = parse_unsigned(key, value);
    } else if (key == "out") {
        cfg.out = std::string(value);
    } else if (key == "workers") {
        const auto v = parse_unsigned(key, value);
        if (v < 1 || v > 1024) domain(key, "must be in [1, 1024]");
        cfg.workers = static_cast<unsigned>(v);
    } else if (key == "table") {
        const auto v = parse_unsigned(key, value);
        if (v < 1 || v > 6) domain(key, "must be in 1..6");
        cfg.table = static_cast<int>(v);
    } else if (key == "switchover") {
        const double v = parse_real(key, value);
        if (!(v >= 0.0 && v <= 1.0)) domain(key, "must lie in [0, 1]");
        cfg.switchover = v;
    } else {
        throw ConfigError("unknown key '" + std::string(key) + "'");
    }
}

// Parses `key = value` lines onto `base`. Errors carry the line number.
inline RunConfig parse_config(std::istream& in, RunConfig base = {}) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view s = line;
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        const auto where = "line " + std::to_string(lineno) + ": ";
        if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
        const auto key = detail::trim(s.substr(0, eq));
        const auto value = detail::trim(s.substr(eq + 1));
        if (key.empty() || value.empty()) throw ConfigError(where + "expected 'key = value'");
        if (key == "config") throw ConfigError(where + "config files cannot include other files");
        try {
            apply_setting(base, key, value);
        } catch (const DomainError& e) {
            throw DomainError(where + e.what());
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    return base;
}

inline RunConfig parse_config_file(const std::string& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    return parse_config(in, std::move(base));
}

}  // namespace qmc
