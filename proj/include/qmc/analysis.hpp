// analysis.hpp — periodicity and decay analysis of site-probability series:
// the closed-form 2×2 pure probability, period prediction and detection,
// exponential / rational decay regression, and table-style parameter sweeps.

#pragma once

#include "qmc/csv.hpp"
#include "qmc/errors.hpp"
#include "qmc/model.hpp"
#include "qmc/summation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace qmc {

// ---------------------------------------------------------------- closed form

// P_n(1,1) for G = λ·[[1,1],[1,1]] and p = 0:
//   1 − 2|b11|²|b12|²·(1 − cos((λ1 − λ2)·S_n)),  λ1 − λ2 = 2λ,  |b11|²|b12|² = 1/4.
inline double closed_form_p11(double lambda, double zeta, std::uint64_t n) {
    const double s = angle_sum(zeta, 0, n);
    return 1.0 - 0.5 * (1.0 - std::cos(2.0 * lambda * s));
}

// P_n(2,1) = 1 − P_n(1,1)
inline double closed_form_p21(double lambda, double zeta, std::uint64_t n) {
    return 1.0 - closed_form_p11(lambda, zeta, n);
}

// closed_form_p11 for n = 0..t in O(t).
inline std::vector<double> closed_form_series(double lambda, double zeta, std::uint64_t t) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(t) + 1);
    out.push_back(1.0);
    CompensatedSum s;
    for (std::uint64_t n = 1; n <= t; ++n) {
        s.add(step_angle(zeta, n));
        out.push_back(1.0 - 0.5 * (1.0 - std::cos(2.0 * lambda * s.value())));
    }
    return out;
}

// -------------------------------------------------------------------- periods

// A period of the oscillation, measured in steps, starting at step `anchor`.
// (Named `length` because T_n already denotes the geometric gaps.)
struct PeriodEstimate {
    std::uint64_t anchor{0};
    double length{0.0};
};

inline constexpr double kZetaSnap = 1e-9;

// Asymptotic period after step n of cos(Δ·S_n):
//   ζ < 2:  [(1 − ζ/2)·2π/Δ + n^{1−ζ/2}]^{1/(1−ζ/2)} − n
//   ζ = 2:  n·(e^{2π/Δ} − 1)
inline PeriodEstimate predict_period(double delta_lambda, double zeta, std::uint64_t n) {
    if (!(delta_lambda > 0.0)) throw DomainError("predict_period: eigenvalue gap must be > 0");
    if (!(zeta >= 0.0)) throw DomainError("predict_period: zeta must be >= 0");
    if (zeta > 2.0 + kZetaSnap) throw DomainError("predict_period: zeta > 2 has no period (angle series converges)");
    const double c = 2.0 * std::numbers::pi / delta_lambda;
    const double nd = static_cast<double>(n);
    if (std::abs(zeta - 2.0) <= kZetaSnap) return {n, nd * std::expm1(c)};
    if (n == 0) {
        // S_n starts at 0; one full turn needs n^{1−ζ/2} = (1−ζ/2)c.
        const double a = 1.0 - 0.5 * zeta;
        return {n, std::pow(a * c, 1.0 / a)};
    }
    // Written with expm1/log1p so the ζ → 2 limit stays accurate:
    // bracket − 1 = a·c + (n^a − 1), length = n·expm1(log1p(bracket − 1)/a − ln n).
    const double a = 1.0 - 0.5 * zeta;
    const double ln_n = std::log(nd);
    const double x = a * c + std::expm1(a * ln_n);
    return {n, nd * std::expm1(std::log1p(x) / a - ln_n)};
}

struct ScalingReport {
    double ratio{0.0};
    bool pass{false};
};

// Compares the period at gap c·Δ with the Δ period divided by c; the two
// agree when the period scales like 1/λ.
inline ScalingReport lambda_scaling_check(double zeta, std::uint64_t n, double c, double delta_lambda = 2.0) {
    if (!(c > 0.0)) throw DomainError("lambda_scaling_check: scale factor must be > 0");
    const double scaled = predict_period(delta_lambda * c, zeta, n).length;
    const double reference = predict_period(delta_lambda, zeta, n).length / c;
    ScalingReport rep;
    rep.ratio = scaled / reference;
    rep.pass = std::abs(rep.ratio - 1.0) <= 0.05;
    return rep;
}

inline constexpr double kPlateauTolerance = 1e-12;

// Interior strict local maxima; a plateau of equal values (within 1e-12)
// higher than both neighbours counts once, at its midpoint rounded down.
inline std::vector<std::size_t> local_maxima(std::span<const double> s) {
    std::vector<std::size_t> out;
    const std::size_t n = s.size();
    std::size_t a = 1;
    while (a + 1 < n) {
        std::size_t b = a;
        while (b + 1 < n && std::abs(s[b + 1] - s[a]) <= kPlateauTolerance) ++b;
        if (b + 1 < n && s[a] - s[a - 1] > kPlateauTolerance && s[b] - s[b + 1] > kPlateauTolerance)
            out.push_back(a + (b - a) / 2);
        a = b + 1;
    }
    return out;
}

// Periods between consecutive local maxima, anchored at the earlier one.
inline std::vector<PeriodEstimate> detect_periods(std::span<const double> series) {
    if (series.size() < 3) throw DomainError("detect_periods: series needs at least 3 points");
    const auto peaks = local_maxima(series);
    std::vector<PeriodEstimate> out;
    for (std::size_t k = 0; k + 1 < peaks.size(); ++k)
        out.push_back({peaks[k], static_cast<double>(peaks[k + 1] - peaks[k])});
    return out;
}

struct PeriodRatio {
    std::uint64_t anchor{0};
    double detected{0.0};
    double predicted{0.0};
    double ratio{0.0};
};

inline std::vector<PeriodRatio> period_ratios(std::span<const double> series, double delta_lambda, double zeta) {
    if (zeta > 2.0 + kZetaSnap) throw DomainError("period analysis needs zeta <= 2 (angle series converges otherwise)");
    std::vector<PeriodRatio> out;
    for (const auto& pe : detect_periods(series)) {
        const double pred = predict_period(delta_lambda, zeta, pe.anchor).length;
        out.push_back({pe.anchor, pe.length, pred, pe.length / pred});
    }
    return out;
}

// CSV with header `anchor,detected,predicted,ratio`.
inline void write_period_csv(std::ostream& os, std::span<const PeriodRatio> rows) {
    os << "anchor,detected,predicted,ratio\n";
    for (const auto& r : rows)
        os << r.anchor << ',' << csv::num(r.detected) << ',' << csv::num(r.predicted) << ',' << csv::num(r.ratio)
           << '\n';
}

// ---------------------------------------------------------------- decay fits

enum class DecayModel { Exponential, Rational };

inline std::string_view to_string(DecayModel m) noexcept {
    return m == DecayModel::Exponential ? "exponential" : "rational";
}

struct DecayPoint {
    double t{0.0};
    double value{0.0};
};

struct FitResult {
    DecayModel model{DecayModel::Exponential};
    double c{0.0};
    double r{0.0};
    double baseline{0.0};
    double r_squared{0.0};
    double adjusted_r_squared{0.0};
    std::size_t n_points{0};
    bool converged{false};
    int iterations{0};

    [[nodiscard]] double predict(double t) const noexcept {
        const double shape = model == DecayModel::Exponential ? std::exp(-r * t) : std::pow(t, -r);
        return c * shape + baseline;
    }
};

struct FitOptions {
    int max_iterations{200};
    double param_tolerance{1e-10};
    double initial_damping{1e-3};
};

inline constexpr std::size_t kFitParameters = 2;

// Local maxima of a trajectory series as fit points; step 0 joins them when
// the series starts on a peak (it does for every basis-state start).
inline std::vector<DecayPoint> peak_points(std::span<const double> series, bool include_start = true) {
    std::vector<DecayPoint> pts;
    if (include_start && series.size() >= 2 && series[0] - series[1] > kPlateauTolerance) pts.push_back({0.0, series[0]});
    for (auto k : local_maxima(series)) pts.push_back({static_cast<double>(k), series[k]});
    return pts;
}

// Raw series values at steps first..last.
inline std::vector<DecayPoint> raw_points(std::span<const double> series, std::size_t first, std::size_t last) {
    std::vector<DecayPoint> pts;
    for (std::size_t n = first; n <= last && n < series.size(); ++n) pts.push_back({static_cast<double>(n), series[n]});
    return pts;
}

// Fits value ≈ c·e^{−rt} + 1/m or c·t^{−r} + 1/m by damped least squares
// (Levenberg–Marquardt with Marquardt scaling) from a log-linear start.
inline FitResult fit_decay(std::span<const DecayPoint> points, DecayModel model, std::size_t m,
                           const FitOptions& opt = {}) {
    if (m < 1) throw DomainError("fit_decay: dimension must be >= 1");
    const double baseline = 1.0 / static_cast<double>(m);

    std::vector<double> ts, ys;
    for (const auto& pt : points) {
        if (model == DecayModel::Rational && !(pt.t > 0.0)) continue;
        ts.push_back(pt.t);
        ys.push_back(pt.value - baseline);
    }
    const std::size_t n = ts.size();
    if (n < kFitParameters + 2) throw DomainError("fit_decay: need at least 4 usable points");
    if (std::all_of(ys.begin(), ys.end(), [](double y) { return std::abs(y) <= 1e-14; }))
        throw DegenerateFitError("fit_decay: every value sits at the baseline");

    auto abscissa = [model](double t) { return model == DecayModel::Exponential ? t : std::log(t); };

    // log-linear start: ln(y) = ln(c) − r·x over the points above baseline
    double c = 0.0, r = 0.0;
    {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        std::size_t k = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(ys[i] > 1e-15)) continue;
            const double x = abscissa(ts[i]);
            const double ly = std::log(ys[i]);
            sx += x, sy += ly, sxx += x * x, sxy += x * ly;
            ++k;
        }
        const double kd = static_cast<double>(k);
        const double den = kd * sxx - sx * sx;
        if (k >= 2 && std::abs(den) > 0.0) {
            const double slope = (kd * sxy - sx * sy) / den;
            r = -slope;
            c = std::exp((sy - slope * sx) / kd);
        } else {
            c = *std::max_element(ys.begin(), ys.end());
            r = 0.0;
        }
    }

    auto shape = [&](double rr, double t) { return model == DecayModel::Exponential ? std::exp(-rr * t) : std::pow(t, -rr); };
    auto cost_of = [&](double cc, double rr) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = ys[i] - cc * shape(rr, ts[i]);
            s += e * e;
        }
        return s;
    };

    double cost = cost_of(c, r);
    double mu = opt.initial_damping;
    bool converged = cost == 0.0;
    int it = 0;
    for (; it < opt.max_iterations && !converged; ++it) {
        // J rows: ∂res/∂c = −f, ∂res/∂r = c·x·f
        double a11 = 0, a12 = 0, a22 = 0, g1 = 0, g2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = shape(r, ts[i]);
            const double j1 = -f;
            const double j2 = c * abscissa(ts[i]) * f;
            const double res = ys[i] - c * f;
            a11 += j1 * j1, a12 += j1 * j2, a22 += j2 * j2;
            g1 += j1 * res, g2 += j2 * res;
        }
        bool accepted = false;
        while (!accepted) {
            const double b11 = a11 * (1.0 + mu), b22 = a22 * (1.0 + mu);
            const double det = b11 * b22 - a12 * a12;
            if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
                mu *= 10.0;
                if (mu > 1e30) break;
                continue;
            }
            const double dc = -(b22 * g1 - a12 * g2) / det;
            const double dr = -(b11 * g2 - a12 * g1) / det;
            const double rel = std::max(std::abs(dc) / (std::abs(c) + 1e-300), std::abs(dr) / (std::abs(r) + 1e-300));
            const double trial = cost_of(c + dc, r + dr);
            if (std::isfinite(trial) && trial <= cost) {
                c += dc;
                r += dr;
                cost = trial;
                mu = std::max(mu / 10.0, 1e-15);
                accepted = true;
                if (rel < opt.param_tolerance || cost == 0.0) converged = true;
            } else {
                if (rel < opt.param_tolerance) {
                    converged = true;  // stationary to working precision
                    break;
                }
                mu *= 10.0;
                if (mu > 1e30) break;
            }
        }
        if (!accepted && !converged) break;  // stalled
    }

    FitResult fit;
    fit.model = model;
    fit.c = c;
    fit.r = r;
    fit.baseline = baseline;
    fit.n_points = n;
    fit.converged = converged;
    fit.iterations = it;

    double mean = 0.0;
    for (double y : ys) mean += y;
    mean /= static_cast<double>(n);
    double ss_tot = 0.0;
    for (double y : ys) ss_tot += (y - mean) * (y - mean);
    if (!(ss_tot > 0.0)) throw DegenerateFitError("fit_decay: values have no variance");
    const double r2 = std::clamp(1.0 - cost / ss_tot, 0.0, 1.0);
    fit.r_squared = r2;
    const double nd = static_cast<double>(n);
    fit.adjusted_r_squared = 1.0 - (1.0 - r2) * (nd - 1.0) / (nd - static_cast<double>(kFitParameters) - 1.0);
    return fit;
}

// Local maxima are compared with adjusted R² (the two models see different
// point counts once t = 0 is dropped for the rational fit); raw series with R².
enum class SelectionScore { AdjustedR2, R2 };

struct ModelSelection {
    DecayModel selected{DecayModel::Exponential};
    std::optional<FitResult> exponential;
    std::optional<FitResult> rational;

    [[nodiscard]] const FitResult& best() const { return selected == DecayModel::Exponential ? *exponential : *rational; }
};

inline ModelSelection model_selection(std::span<const DecayPoint> points, std::size_t m, SelectionScore score,
                                      const FitOptions& opt = {}) {
    ModelSelection sel;
    std::string first_error;
    try {
        sel.exponential = fit_decay(points, DecayModel::Exponential, m, opt);
    } catch (const Error& e) {
        first_error = e.what();
    }
    try {
        sel.rational = fit_decay(points, DecayModel::Rational, m, opt);
    } catch (const Error& e) {
        if (first_error.empty()) first_error = e.what();
    }
    if (!sel.exponential && !sel.rational) throw DegenerateFitError("model_selection: both fits failed: " + first_error);
    auto value = [score](const FitResult& f) {
        return score == SelectionScore::AdjustedR2 ? f.adjusted_r_squared : f.r_squared;
    };
    if (!sel.rational) {
        sel.selected = DecayModel::Exponential;
    } else if (!sel.exponential) {
        sel.selected = DecayModel::Rational;
    } else {
        sel.selected = value(*sel.rational) > value(*sel.exponential) ? DecayModel::Rational : DecayModel::Exponential;
    }
    return sel;
}

// --------------------------------------------------------------------- sweeps

struct SweepGrid {
    std::vector<double> p_values;
    std::vector<double> zeta_values;
    std::vector<double> lambda_values;
    std::vector<std::size_t> dims{2};
    GraphKind graph{GraphKind::FullyConnected};
    ScheduleForm form{ScheduleForm::Exponential};
    std::uint64_t horizon{2000};
    std::size_t initial_state{0};
    double raw_switchover{0.5};  // p at or above this fits raw probabilities
    std::size_t raw_window{200};   // raw fits use steps 1..raw_window

    void validate() const {
        if (p_values.empty() || zeta_values.empty() || lambda_values.empty() || dims.empty())
            throw ConfigError("sweep grid lists must be non-empty");
        for (double p : p_values)
            if (!(p >= 0.0 && p <= 1.0)) throw DomainError("sweep grid: p must lie in [0, 1]");
        for (double z : zeta_values)
            if (!(z >= 0.0)) throw DomainError("sweep grid: zeta must be >= 0");
        for (double l : lambda_values)
            if (!(l > 0.0)) throw DomainError("sweep grid: lambda must be > 0");
        for (auto d : dims) {
            if (d < 2 || d > kMaxDim) throw DomainError("sweep grid: dim must be in [2, 64]");
            if (initial_state >= d) throw DomainError("sweep grid: initial state out of range");
        }
        if (graph == GraphKind::Custom) throw ConfigError("sweep grid: custom generators are not swept");
    }

    [[nodiscard]] std::size_t size() const noexcept {
        return p_values.size() * zeta_values.size() * lambda_values.size() * dims.size();
    }
};

enum class SweepStatus { Ok, FitFailed, Degenerate };

inline std::string_view to_string(SweepStatus s) noexcept {
    switch (s) {
        case SweepStatus::Ok: return "ok";
        case SweepStatus::FitFailed: return "fit_failed";
        case SweepStatus::Degenerate: return "degenerate";
    }
    return "?";
}

struct SweepRow {
    double p{0.0};
    double zeta{0.0};
    double lambda{0.0};
    std::size_t dim{2};
    GraphKind graph{GraphKind::FullyConnected};
    std::optional<DecayModel> model;
    double c{std::nan("")};
    double r{std::nan("")};
    double r2{std::nan("")};
    double adj_r2{std::nan("")};
    double final_deviation{std::nan("")};
    SweepStatus status{SweepStatus::Ok};
};

// One grid cell: exact evolution, then a decay fit of P_n(i, i).
inline SweepRow run_cell(const SweepGrid& grid, double p, double zeta, double lambda, std::size_t dim) {
    SweepRow row;
    row.p = p;
    row.zeta = zeta;
    row.lambda = lambda;
    row.dim = dim;
    row.graph = grid.graph;
    const GeneratorSpec spec{grid.graph, dim, lambda, std::nullopt};
    const ScheduleParams sched{zeta, grid.form};
    const auto traj = evolve(DensityMatrix::basis(dim, grid.initial_state), spec, sched, DecoherenceParams(p), grid.horizon);

    const auto& last = traj.steps.back().probabilities;
    double dev = 0.0;
    for (double x : last) dev = std::max(dev, std::abs(x - 1.0 / static_cast<double>(dim)));
    row.final_deviation = dev;

    const auto series = traj.series(grid.initial_state);
    const bool raw = p >= grid.raw_switchover;
    const auto pts = raw ? raw_points(series, 1, std::min<std::size_t>(grid.raw_window, series.size() - 1))
                         : peak_points(series, true);
    try {
        const auto sel = model_selection(pts, dim, raw ? SelectionScore::R2 : SelectionScore::AdjustedR2);
        const auto& best = sel.best();
        row.model = sel.selected;
        row.c = best.c;
        row.r = best.r;
        row.r2 = best.r_squared;
        row.adj_r2 = best.adjusted_r_squared;
        row.status = best.converged ? SweepStatus::Ok : SweepStatus::FitFailed;
    } catch (const DegenerateFitError&) {
        row.status = SweepStatus::Degenerate;
    } catch (const DomainError&) {
        row.status = SweepStatus::Degenerate;
    } catch (const Error&) {
        row.status = SweepStatus::FitFailed;
    }
    return row;
}

// Rows in grid order (λ, dim, p, ζ from outermost to innermost), independent
// of how many workers compute them.
inline std::vector<SweepRow> run_sweep(const SweepGrid& grid, unsigned workers = 1) {
    grid.validate();
    struct Cell {
        double p, zeta, lambda;
        std::size_t dim;
    };
    std::vector<Cell> cells;
    cells.reserve(grid.size());
    for (double l : grid.lambda_values)
        for (auto d : grid.dims)
            for (double p : grid.p_values)
                for (double z : grid.zeta_values) cells.push_back({p, z, l, d});

    std::vector<SweepRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < cells.size(); k = next++) {
            const auto& c = cells[k];
            rows[k] = run_cell(grid, c.p, c.zeta, c.lambda, c.dim);
        }
    };
    workers = std::max(1u, workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return rows;
}

inline constexpr std::array<double, 10> kTableZetas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

// Grids of the published decay-rate tables: 1–3 are small-p local-maxima
// fits at λ = 0.2, 0.35, 0.5; 4–6 are p near 1 raw fits over 200 steps at
// λ = 0.5, 0.35, 0.2.
inline SweepGrid table_grid(int table) {
    SweepGrid g;
    g.zeta_values.assign(kTableZetas.begin(), kTableZetas.end());
    g.dims = {2};
    switch (table) {
        case 1: g.lambda_values = {0.2}; break;
        case 2: g.lambda_values = {0.35}; break;
        case 3: g.lambda_values = {0.5}; break;
        case 4: g.lambda_values = {0.5}; break;
        case 5: g.lambda_values = {0.35}; break;
        case 6: g.lambda_values = {0.2}; break;
        default: throw ConfigError("table must be in 1..6");
    }
    if (table <= 3) {
        g.p_values = {0.005, 0.01, 0.015, 0.02, 0.025};
        g.horizon = 2000;
    } else {
        g.p_values = table == 4 ? std::vector<double>{0.7, 0.8, 0.9, 1.0} : std::vector<double>{0.6, 0.7, 0.8, 0.9, 1.0};
        g.horizon = 200;
        g.raw_window = 200;
    }
    return g;
}

// CSV with header `p,zeta,lambda,dim,graph,model,c,r,r2,adj_r2,final_deviation,status`.
inline void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
    os << "p,zeta,lambda,dim,graph,model,c,r,r2,adj_r2,final_deviation,status\n";
    for (const auto& r : rows) {
        os << csv::num(r.p) << ',' << csv::num(r.zeta) << ',' << csv::num(r.lambda) << ',' << r.dim << ','
           << to_string(r.graph) << ',' << (r.model ? to_string(*r.model) : std::string_view("none")) << ','
           << csv::num(r.c) << ',' << csv::num(r.r) << ',' << csv::num(r.r2) << ',' << csv::num(r.adj_r2) << ','
           << csv::num(r.final_deviation) << ',' << to_string(r.status) << '\n';
    }
}

}  // namespace qmc
