#include "qmc/analysis.hpp"
#include "qmc/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace qmc;

TEST(ClosedForm, SeriesMatchesPointwise) {
    const auto s = closed_form_series(0.7, 1.3, 300);
    ASSERT_EQ(s.size(), 301u);
    EXPECT_EQ(s[0], 1.0);
    for (std::uint64_t n = 0; n <= 300; n += 13) EXPECT_NEAR(s[n], closed_form_p11(0.7, 1.3, n), 1e-14);
}

TEST(ClosedForm, ZetaZeroIsPeriodicCosine) {
    // S_n = n, so P = cos²(λ n)
    for (std::uint64_t n = 0; n < 50; ++n)
        EXPECT_NEAR(closed_form_p11(0.3, 0.0, n), std::pow(std::cos(0.3 * static_cast<double>(n)), 2), 1e-14);
}

TEST(ClosedForm, ConvergentAngleSeriesFreezesOscillation) {
    // ζ > 2: S_n converges, so the probability settles (tail of S_n ~ n^{1-ζ/2}).
    const auto s = closed_form_series(1.0, 4.0, 20000);
    EXPECT_LT(std::abs(s[20000] - s[10000]), 1e-4);
    const auto slow = closed_form_series(1.0, 3.0, 20000);
    EXPECT_LT(std::abs(slow[20000] - slow[10000]), 2e-2);
}

TEST(PredictPeriod, ZetaTwoIsGeometric) {
    const auto pe = predict_period(2.0, 2.0, 100);
    EXPECT_NEAR(pe.length, 100 * (std::exp(std::numbers::pi) - 1), 1e-9);
    EXPECT_EQ(pe.anchor, 100u);
}

TEST(PredictPeriod, ContinuousAcrossTheSnap) {
    const double at2 = predict_period(2.0, 2.0, 1000).length;
    const double near = predict_period(2.0, 2.0 - 1e-7, 1000).length;
    EXPECT_NEAR(near / at2, 1.0, 1e-5);
    EXPECT_DOUBLE_EQ(predict_period(2.0, 2.0 + 5e-10, 1000).length, at2);
}

TEST(PredictPeriod, DirectFormulaAgreesWithStableForm) {
    for (double zeta : {0.0, 0.5, 1.0, 1.5})
        for (std::uint64_t n : {1u, 50u, 10000u}) {
            const double a = 1 - zeta / 2;
            const double c = 2 * std::numbers::pi / 2.0;
            const double nd = static_cast<double>(n);
            const double direct = std::pow(a * c + std::pow(nd, a), 1 / a) - nd;
            EXPECT_NEAR(predict_period(2.0, zeta, n).length / direct, 1.0, 1e-12) << zeta << " " << n;
        }
    EXPECT_NEAR(predict_period(2.0, 0.0, 7).length, std::numbers::pi, 1e-12);  // constant angle: 2π/Δ
}

TEST(PredictPeriod, Errors) {
    EXPECT_THROW(predict_period(2.0, 2.5, 10), DomainError);
    EXPECT_THROW(predict_period(0.0, 1.0, 10), DomainError);
}

TEST(PredictPeriod, LambdaScaling) {
    // ζ = 0 is exactly 1/λ; large n approaches it for 0 < ζ < 2.
    EXPECT_NEAR(lambda_scaling_check(0.0, 10, 3.0).ratio, 1.0, 1e-12);
    const auto r = lambda_scaling_check(1.0, 100000, 2.0);
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.ratio, 1.0, 0.01);
    EXPECT_FALSE(lambda_scaling_check(1.8, 10, 4.0).pass);
}

TEST(LocalMaxima, StrictAndPlateaus) {
    const std::vector<double> s{0, 1, 0, 2, 2, 2, 1, 3, 3, 0, 5};
    EXPECT_EQ(local_maxima(s), (std::vector<std::size_t>{1, 4, 7}));
    const std::vector<double> flat{1, 1, 1, 1};
    EXPECT_TRUE(local_maxima(flat).empty());
    const std::vector<double> shoulder{0, 1, 1, 2, 0};
    EXPECT_EQ(local_maxima(shoulder), (std::vector<std::size_t>{3}));
}

TEST(DetectPeriods, RecoversCosinePeriod) {
    std::vector<double> s;
    for (int n = 0; n < 1000; ++n) s.push_back(std::cos(2 * std::numbers::pi * n / 50.0 + 0.1));
    const auto pes = detect_periods(s);
    ASSERT_GE(pes.size(), 18u);
    for (const auto& pe : pes) EXPECT_EQ(pe.length, 50.0);
    EXPECT_TRUE(detect_periods(std::vector<double>{1, 2, 3, 4}).empty());
    EXPECT_THROW(detect_periods(std::vector<double>{1, 2}), DomainError);
}

TEST(DetectPeriods, ClosedFormRatiosApproachOne) {
    const auto s = closed_form_series(1.0, 1.0, 200000);
    const auto rows = period_ratios(s, 2.0, 1.0);
    ASSERT_FALSE(rows.empty());
    for (const auto& r : rows)
        if (r.anchor >= 20000) {
            EXPECT_NEAR(r.ratio, 1.0, 0.02);
        }
}

namespace {
std::vector<DecayPoint> synth(DecayModel model, double c, double r, double base, int n0, int n1, int step = 1) {
    std::vector<DecayPoint> pts;
    for (int t = n0; t <= n1; t += step) {
        const double x = static_cast<double>(t);
        pts.push_back({x, base + c * (model == DecayModel::Exponential ? std::exp(-r * x) : std::pow(x, -r))});
    }
    return pts;
}
}  // namespace

TEST(Fit, RecoversExponential) {
    const auto pts = synth(DecayModel::Exponential, 0.45, 0.004, 0.5, 0, 2000, 40);
    const auto f = fit_decay(pts, DecayModel::Exponential, 2);
    EXPECT_TRUE(f.converged);
    EXPECT_NEAR(f.c, 0.45, 1e-9);
    EXPECT_NEAR(f.r, 0.004, 1e-12);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
    EXPECT_LE(f.adjusted_r_squared, f.r_squared);
    EXPECT_NEAR(f.predict(100.0), 0.5 + 0.45 * std::exp(-0.4), 1e-9);
}

TEST(Fit, RecoversRationalAndDropsNonPositiveTimes) {
    auto pts = synth(DecayModel::Rational, 0.6, 0.3, 1.0 / 3.0, 1, 200);
    pts.insert(pts.begin(), DecayPoint{0.0, 1.0});
    const auto f = fit_decay(pts, DecayModel::Rational, 3);
    EXPECT_TRUE(f.converged);
    EXPECT_EQ(f.n_points, 200u);
    EXPECT_NEAR(f.c, 0.6, 1e-9);
    EXPECT_NEAR(f.r, 0.3, 1e-9);
}

TEST(Fit, NoisyDataHasLowerRSquared) {
    auto pts = synth(DecayModel::Exponential, 0.4, 0.02, 0.5, 0, 300, 3);
    RngStream rng(1);
    for (auto& p : pts) p.value += 0.02 * (rng.uniform() - 0.5);
    const auto f = fit_decay(pts, DecayModel::Exponential, 2);
    EXPECT_TRUE(f.converged);
    EXPECT_LT(f.r_squared, 1.0);
    EXPECT_GT(f.r_squared, 0.9);
    EXPECT_NEAR(f.r, 0.02, 0.002);
    const double n = static_cast<double>(f.n_points);
    EXPECT_NEAR(f.adjusted_r_squared, 1 - (1 - f.r_squared) * (n - 1) / (n - 3), 1e-15);
}

TEST(Fit, Errors) {
    EXPECT_THROW(fit_decay(synth(DecayModel::Exponential, 0.4, 0.1, 0.5, 0, 2), DecayModel::Exponential, 2), DomainError);
    const std::vector<DecayPoint> flat{{1, 0.5}, {2, 0.5}, {3, 0.5}, {4, 0.5}, {5, 0.5}};
    EXPECT_THROW(fit_decay(flat, DecayModel::Exponential, 2), DegenerateFitError);
    EXPECT_THROW(fit_decay(flat, DecayModel::Rational, 2), NumericalError);
}

TEST(ModelSelection, PicksGeneratingModel) {
    const auto e = synth(DecayModel::Exponential, 0.45, 0.01, 0.5, 1, 400, 4);
    EXPECT_EQ(model_selection(e, 2, SelectionScore::AdjustedR2).selected, DecayModel::Exponential);
    const auto r = synth(DecayModel::Rational, 0.5, 0.4, 0.5, 1, 400, 4);
    EXPECT_EQ(model_selection(r, 2, SelectionScore::R2).selected, DecayModel::Rational);
}

TEST(PeakPoints, IncludesStartPeak) {
    const std::vector<double> s{1.0, 0.6, 0.8, 0.5, 0.7, 0.6};
    const auto pts = peak_points(s);
    ASSERT_EQ(pts.size(), 3u);
    EXPECT_EQ(pts[0].t, 0.0);
    EXPECT_EQ(pts[1].t, 2.0);
    EXPECT_EQ(peak_points(s, false).size(), 2u);
}

TEST(Sweep, SmallPDecayRateNearHalfP) {
    SweepGrid g;
    g.p_values = {0.01};
    g.zeta_values = {0.5};
    g.lambda_values = {0.35};
    const auto rows = run_sweep(g);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].status, SweepStatus::Ok);
    EXPECT_EQ(rows[0].model, DecayModel::Exponential);
    EXPECT_NEAR(rows[0].r, 0.005, 0.0005);
    EXPECT_GT(rows[0].adj_r2, 0.9);
}

TEST(Sweep, OrderAndDeterminismAcrossWorkers) {
    SweepGrid g;
    g.p_values = {0.01, 0.8};
    g.zeta_values = {0.3, 0.9};
    g.lambda_values = {0.2};
    g.dims = {2, 3};
    g.horizon = 300;
    const auto a = run_sweep(g, 1);
    const auto b = run_sweep(g, 3);
    ASSERT_EQ(a.size(), 8u);
    std::ostringstream sa, sb;
    write_sweep_csv(sa, a);
    write_sweep_csv(sb, b);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(a[0].dim, 2u);
    EXPECT_EQ(a[0].p, 0.01);
    EXPECT_EQ(a[1].zeta, 0.9);
    EXPECT_EQ(a[4].dim, 3u);
    EXPECT_EQ(sa.str().substr(0, sa.str().find('\n')), "p,zeta,lambda,dim,graph,model,c,r,r2,adj_r2,final_deviation,status");
}

TEST(Sweep, UndampedCellIsReportedNotThrown) {
    SweepGrid g;
    g.p_values = {0.0};
    g.zeta_values = {3.0};  // convergent angle series: almost no oscillation
    g.lambda_values = {0.2};
    g.horizon = 100;
    const auto rows = run_sweep(g);
    EXPECT_NE(rows[0].status, SweepStatus::Ok);
}

TEST(Sweep, GridValidation) {
    SweepGrid g;
    EXPECT_THROW(run_sweep(g), ConfigError);
    g.p_values = {1.5};
    g.zeta_values = {1};
    g.lambda_values = {1};
    EXPECT_THROW(run_sweep(g), DomainError);
}

TEST(Tables, PresetShapes) {
    EXPECT_EQ(table_grid(1).lambda_values, std::vector<double>{0.2});
    EXPECT_EQ(table_grid(3).p_values.size(), 5u);
    EXPECT_EQ(table_grid(4).p_values.size(), 4u);
    EXPECT_EQ(table_grid(6).lambda_values, std::vector<double>{0.2});
    EXPECT_EQ(table_grid(6).horizon, 200u);
    EXPECT_EQ(table_grid(2).zeta_values.size(), 10u);
    EXPECT_THROW(table_grid(7), ConfigError);
}
