#include <gtest/gtest.h>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <tvcox/simulate.hpp>

using namespace tvcox;
using sim::CoefTag;

TEST(TrueBeta, Forms)
{
    EXPECT_NEAR(sim::true_beta({CoefTag::sin_tv, 0}, 2.0, 0.0), -1.0, 1e-15);
    EXPECT_EQ(sim::true_beta({CoefTag::poly_exp_tv, 0}, 0.0, 0.0), 0.0);
    EXPECT_NEAR(sim::true_beta({CoefTag::poly_exp_tv, 0}, 3.0, 0.0), -std::exp(1.5), 1e-12);
    EXPECT_EQ(sim::true_beta({CoefTag::constant, -1.0}, 1.7, 0.0), -1.0);
    for (double t = 0.0; t < 3.0; t += 0.1) EXPECT_EQ(sim::true_beta({CoefTag::gamma_sin_tv, 0}, t, 0.0), 0.0);
    EXPECT_NEAR(sim::true_beta({CoefTag::gamma_sin_tv, 0}, 2.0 / 3.0, 2.0), 2.0, 1e-12);
    EXPECT_THROW(sim::parse_tag("cubic"), Error);
    EXPECT_EQ(sim::parse_tag("poly_exp_tv"), CoefTag::poly_exp_tv);
}

TEST(ScenarioSpec, Layouts)
{
    const auto s1 = sim::ScenarioSpec::make(1, 100, 6, 1, 0.0, 1);
    EXPECT_EQ(s1.coefficients[0].value, 1.0);
    EXPECT_EQ(s1.coefficients[1].tag, CoefTag::sin_tv);
    EXPECT_EQ(s1.coefficients[2].value, -1.0);
    EXPECT_EQ(s1.coefficients[3].tag, CoefTag::poly_exp_tv);
    EXPECT_EQ(s1.coefficients[4].value, 0.0);
    EXPECT_EQ(s1.coefficients[5].value, 0.0);
    const auto s3 = sim::ScenarioSpec::make(3, 100, 2, 1, 1.5, 1);
    EXPECT_EQ(s3.coefficients[1].tag, CoefTag::gamma_sin_tv);
    EXPECT_THROW(sim::ScenarioSpec::make(3, 100, 3, 1, 1.0, 1), Error);
    EXPECT_THROW(sim::ScenarioSpec::make(1, 100, 2, 1, 3.5, 1), Error);
    EXPECT_THROW(sim::ScenarioSpec::make(1, 3, 2, 5, 0.0, 1), Error);
    EXPECT_THROW(sim::ScenarioSpec::make(4, 100, 2, 1, 0.0, 1), Error);
}

TEST(Covariates, ArOneCorrelations)
{
    auto spec = sim::ScenarioSpec::make(1, 100000, 4, 1, 0.0, 5);
    auto rng = sim::make_rng(spec.seed);
    const auto X = sim::draw_covariates(spec, rng);
    const Eigen::MatrixXd c = X.rowwise() - X.colwise().mean();
    const Eigen::MatrixXd cov = (c.transpose() * c) / (X.rows() - 1.0);
    for (int a = 0; a < 4; ++a) {
        EXPECT_NEAR(cov(a, a), 1.0, 0.02);
        for (int b = a + 1; b < 4; ++b) {
            const double r = cov(a, b) / std::sqrt(cov(a, a) * cov(b, b));
            EXPECT_NEAR(r, std::pow(0.6, b - a), 0.015);
        }
    }
    auto one = sim::ScenarioSpec::make(1, 100000, 1, 1, 0.0, 6);
    auto rng1 = sim::make_rng(one.seed);
    const auto x1 = sim::draw_covariates(one, rng1);
    EXPECT_NEAR(x1.col(0).mean(), 0.0, 0.02);
    EXPECT_NEAR((x1.col(0).array() - x1.col(0).mean()).square().mean(), 1.0, 0.02);
}

TEST(Covariates, BernoulliPrevalences)
{
    const std::vector<double> even{0.05, 0.10, 0.15, 0.20};
    for (size_t p = 0; p < 4; ++p) EXPECT_NEAR(sim::bernoulli_prevalences(4)[p], even[p], 1e-15);
    auto spec = sim::ScenarioSpec::make(2, 100000, 4, 1, 0.0, 7);
    auto rng = sim::make_rng(spec.seed);
    const auto X = sim::draw_covariates(spec, rng);
    const auto prev = sim::bernoulli_prevalences(4);
    for (int p = 0; p < 4; ++p) {
        EXPECT_NEAR(X.col(p).mean(), prev[static_cast<size_t>(p)], 0.01);
        EXPECT_TRUE(((X.col(p).array() == 0.0) || (X.col(p).array() == 1.0)).all());
    }
}

TEST(SurvivalTimes, ZeroEffectsGiveExponentialDeaths)
{
    auto spec = sim::ScenarioSpec::make(1, 10, 2, 1, 0.0, 1);
    for (auto& c : spec.coefficients) c = {CoefTag::constant, 0.0};
    const sim::HazardIntegrator hz(spec, 60.0);
    auto rng = sim::make_rng(99);
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(2, 0.3);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += sim::draw_survival_time(x, hz, rng).death;
    EXPECT_NEAR(sum / n / 2.0, 1.0, 0.02);
}

TEST(SurvivalTimes, InversionAccuracy)
{
    const auto spec = sim::ScenarioSpec::make(1, 10, 4, 1, 0.0, 1);
    const sim::HazardIntegrator hz(spec);
    Eigen::VectorXd x(4);
    x << 0.5, -1.0, 0.3, 1.2;
    const double total = hz.cumulative(x, 3.0);
    for (double target : {1e-6, 0.01 * total, 0.4 * total, 0.999 * total}) {
        const double d = hz.invert(x, target);
        ASSERT_TRUE(std::isfinite(d));
        EXPECT_NEAR(hz.cumulative(x, d), target, 1e-8);
    }
    EXPECT_EQ(hz.invert(x, 0.0), 0.0);
    EXPECT_TRUE(std::isinf(hz.invert(x, 1e6)));
    // trapezoid on the 0.001 grid against a fine Simpson reference
    const double t = 2.3;
    double ref = 0.0;
    const int m = 20000;
    for (int i = 0; i <= m; ++i) {
        const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        ref += w * hz.hazard(x, t * i / m);
    }
    ref *= t / m / 3.0;
    EXPECT_NEAR(hz.cumulative(x, t), ref, 1e-6 * ref);
}

TEST(SurvivalTimes, ConstantEffectsMatchClosedFormLaw)
{
    auto spec = sim::ScenarioSpec::make(1, 10, 2, 1, 0.0, 1);
    spec.coefficients = {{CoefTag::constant, 0.8}, {CoefTag::constant, -0.5}};
    const sim::HazardIntegrator hz(spec, 40.0);
    Eigen::VectorXd x(2);
    x << 0.7, 0.4;
    const double rate = 0.5 * std::exp(0.8 * 0.7 - 0.5 * 0.4);
    auto rng = sim::make_rng(3);
    const int n = 100000;
    std::vector<double> d(n);
    for (auto& v : d) v = sim::draw_survival_time(x, hz, rng).death;
    std::sort(d.begin(), d.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        const double F = 1.0 - std::exp(-rate * d[static_cast<size_t>(i)]);
        ks = std::max({ks, std::abs(F - static_cast<double>(i) / n), std::abs(F - static_cast<double>(i + 1) / n)});
    }
    // DKW band at alpha = 0.01
    EXPECT_LT(ks, std::sqrt(std::log(2.0 / 0.01) / (2.0 * n)));
}

TEST(SurvivalTimes, ZeroHazardCensorsEveryone)
{
    auto spec = sim::ScenarioSpec::make(1, 10, 1, 1, 0.0, 1);
    spec.coefficients = {{CoefTag::constant, -800.0}};
    const sim::HazardIntegrator hz(spec);
    auto rng = sim::make_rng(8);
    const Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
    for (int i = 0; i < 1000; ++i) {
        const auto draw = sim::draw_survival_time(x, hz, rng);
        EXPECT_EQ(draw.status, 0);
        EXPECT_LT(draw.time, 3.0);
    }
}

TEST(Generate, CensoringMechanicsAndProportion)
{
    auto spec = sim::ScenarioSpec::make(1, 20000, 2, 1, 0.0, 11);
    for (auto& c : spec.coefficients) c = {CoefTag::constant, 0.0};
    const auto ds = sim::generate(spec);
    for (size_t i = 0; i < ds.n(); ++i) {
        if (ds.status[i] == 1) EXPECT_LT(ds.time[i], 3.0);
        EXPECT_LE(ds.time[i], 3.0);
    }
    // P(C < D) = int_0^3 (1/3) exp(-0.5 c) dc = (2/3)(1 - e^{-1.5})
    const double expected = (2.0 / 3.0) * (1.0 - std::exp(-1.5));
    const double censored = 1.0 - static_cast<double>(ds.n_events()) / ds.n();
    EXPECT_NEAR(censored, expected, 0.015);
}

TEST(Generate, RoundRobinStrataAndDeterminism)
{
    const auto spec = sim::ScenarioSpec::make(2, 1000, 3, 5, 0.0, 42);
    const auto a = sim::generate(spec);
    EXPECT_EQ(a.J(), 5);
    std::vector<int> sizes(5, 0);
    for (int s : a.stratum) sizes[static_cast<size_t>(s)]++;
    EXPECT_EQ(sizes, std::vector<int>(5, 200));
    EXPECT_EQ(a.stratum_labels[0], "1");
    std::ostringstream x, y;
    survdata::write_csv(a, x);
    survdata::write_csv(sim::generate(spec), y);
    EXPECT_EQ(x.str(), y.str());
    auto other = spec;
    other.seed = 43;
    std::ostringstream z;
    survdata::write_csv(sim::generate(other), z);
    EXPECT_NE(x.str(), z.str());
}

TEST(Metrics, ExactAndOffsetCurves)
{
    const auto spec = sim::ScenarioSpec::make(1, 10, 4, 1, 0.0, 1);
    const auto grid = sim::metric_grid();
    ASSERT_EQ(grid.size(), 100u);
    EXPECT_EQ(grid.front(), 0.05);
    EXPECT_NEAR(grid.back(), 2.8, 1e-15);
    const auto truth = sim::true_curves(spec, grid);
    sim::MetricsAccumulator exact(truth);
    exact.add(truth, 1.0);
    exact.add(truth, 3.0);
    const auto r0 = exact.report();
    EXPECT_EQ(r0.mean_abs_bias, 0.0);
    EXPECT_EQ(r0.mean_imse, 0.0);
    EXPECT_EQ(r0.mean_seconds, 2.0);
    sim::MetricsAccumulator off(truth);
    off.add((truth.array() + 0.1).matrix(), 0.0);
    const auto r1 = off.report();
    EXPECT_NEAR(r1.mean_abs_bias, 0.1, 1e-12);
    EXPECT_NEAR(r1.mean_imse, 0.01, 1e-12);
    EXPECT_TRUE(std::isnan(r1.rejection_rate));
    off.add_test(true);
    off.add_test(false);
    EXPECT_EQ(off.report().rejection_rate, 0.5);
}

TEST(Metrics, FittedCurvesTrackTruth)
{
    const auto spec = sim::ScenarioSpec::make(1, 2000, 4, 1, 0.0, 17);
    FitOptions opts;
    opts.config.loglik_tol = 0.0;
    const auto m = fit_model(sim::generate(spec), opts);
    const auto grid = sim::metric_grid();
    sim::MetricsAccumulator acc(sim::true_curves(spec, grid));
    acc.add(sim::fitted_curves(m, grid), m.fit.seconds);
    const auto r = acc.report();
    EXPECT_LT(r.mean_imse, 0.1);
    EXPECT_LT(r.mean_abs_bias, 0.15);
}
