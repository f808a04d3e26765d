#pragma once
#include <vector>
#include <tvcox/optimizers.hpp>
#include <tvcox/partial_likelihood.hpp>
#include <tvcox/splinebasis.hpp>
#include <tvcox/survdata.hpp>

namespace tvcox {

struct FitOptions
{
    int K = 5;
    int degree = 3;
    optim::Optimizer optimizer = optim::Optimizer::mmsa;
    optim::MmsaConfig config;
    bool standardize = true;
};

/// Everything needed to test, plot and re-evaluate a fit. Coefficients in
/// `fit.theta` live on the standardized covariate scale.
struct ModelFit
{
    optim::FitResult fit;
    spline::SplineSpec spec;
    survdata::Standardization transform;
    survdata::RiskIndex index;
    spline::BasisMatrix basis;
    std::vector<std::string> covariate_names;

    /// theta on the original covariate scale (row p divided by scale_p).
    CoefficientMatrix theta_original() const
    {
        CoefficientMatrix out = fit.theta;
        for (Eigen::Index p = 0; p < out.rows(); ++p) out.row(p) /= transform.scale[p];
        return out;
    }
};

inline std::vector<double> event_times_of(const survdata::SurvivalDataset& ds)
{
    std::vector<double> out;
    for (size_t i = 0; i < ds.n(); ++i) {
        if (ds.status[i] == 1) out.push_back(ds.time[i]);
    }
    return out;
}

/// Prepares the working data (standardized covariates, index, basis) for a
/// given spline spec without fitting.
inline ModelFit prepare_model(const survdata::SurvivalDataset& data, const spline::SplineSpec& spec, bool standardize)
{
    ModelFit m;
    m.spec = spec;
    m.covariate_names = data.covariate_names;
    if (standardize) {
        auto [std_data, tr] = survdata::standardize(data);
        m.transform = std::move(tr);
        m.index = survdata::build_risk_index(std_data);
    } else {
        m.transform = survdata::Standardization::identity(data.P());
        m.index = survdata::build_risk_index(data);
    }
    m.basis = likelihood::event_basis(spec, m.index);
    return m;
}

inline ModelFit fit_model(const survdata::SurvivalDataset& data, const FitOptions& opts)
{
    data.validate();
    const auto spec = spline::make_spec(opts.degree, opts.K, event_times_of(data));
    ModelFit m = prepare_model(data, spec, opts.standardize);
    m.fit = optim::run(opts.optimizer, m.index, m.basis, opts.config);
    return m;
}

} // namespace tvcox
