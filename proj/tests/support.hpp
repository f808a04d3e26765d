#pragma once
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>
#include <tvcox/model.hpp>
#include <tvcox/partial_likelihood.hpp>
#include <tvcox/splinebasis.hpp>
#include <tvcox/survdata.hpp>

namespace testing_support {

using namespace tvcox;

/// (T, delta, X) = (1,1,1), (2,1,0), (3,0,1); one stratum.
inline survdata::SurvivalDataset d0()
{
    Eigen::MatrixXd X(3, 1);
    X << 1, 0, 1;
    return survdata::make_dataset({1.0, 2.0, 3.0}, {1, 1, 0}, {"a", "a", "a"}, X, {"x"});
}

/// Constant basis B = 1 (degree 0, K = 1) on [0, 3].
inline spline::SplineSpec constant_spec()
{
    return spline::SplineSpec(0, {}, 0.0, 3.0);
}

/// Bisection root of a decreasing function on [lo, hi].
inline double bisect(const std::function<double(double)>& f, double lo, double hi)
{
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// D0 score as a closed form in theta.
inline double d0_score(double t)
{
    const double u = std::exp(t);
    return 1.0 - 2.0 * u / (2.0 * u + 1.0) - u / (1.0 + u);
}

struct Instance
{
    survdata::SurvivalDataset data;
    spline::SplineSpec spec;
    survdata::RiskIndex index;
    spline::BasisMatrix basis;
    CoefficientMatrix theta;
};

/// Random stratified data with ties; covariates normal, times exponential.
inline survdata::SurvivalDataset random_dataset(std::mt19937_64& rng, size_t n, int P, int J, bool ties = true)
{
    std::normal_distribution<double> z(0.0, 1.0);
    std::exponential_distribution<double> ex(1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), P);
    std::vector<double> time(n);
    std::vector<int> status(n);
    std::vector<std::string> strata(n);
    for (size_t i = 0; i < n; ++i) {
        for (int p = 0; p < P; ++p) X(static_cast<Eigen::Index>(i), p) = z(rng);
        double t = ex(rng) * std::exp(-0.5 * X(static_cast<Eigen::Index>(i), 0));
        if (ties) t = std::ceil(t * 20.0) / 20.0;
        time[i] = t + 0.01;
        status[i] = u(rng) < 0.75 ? 1 : 0;
        strata[i] = std::to_string(i % static_cast<size_t>(J));
    }
    status[0] = 1;
    return survdata::make_dataset(std::move(time), std::move(status), strata, std::move(X), {});
}

inline Instance random_instance(std::uint64_t seed, size_t n, int P, int K, int J = 2, double theta_scale = 0.3)
{
    std::mt19937_64 rng(seed);
    Instance inst;
    inst.data = random_dataset(rng, n, P, J);
    const int degree = std::min(3, K - 1);
    inst.spec = spline::make_spec(degree, K, event_times_of(inst.data));
    inst.index = survdata::build_risk_index(inst.data);
    inst.basis = likelihood::event_basis(inst.spec, inst.index);
    std::normal_distribution<double> z(0.0, theta_scale);
    inst.theta.resize(P, K);
    for (Eigen::Index i = 0; i < inst.theta.size(); ++i) inst.theta.data()[i] = z(rng);
    return inst;
}

} // namespace testing_support
