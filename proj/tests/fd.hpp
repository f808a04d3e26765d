#pragma once
#include <algorithm>
#include <cmath>
#include <tvcox/partial_likelihood.hpp>

// Finite-difference oracles for the likelihood derivatives.
namespace fd {

using tvcox::CoefficientMatrix;

inline constexpr double step = 1e-5;

inline Eigen::VectorXd gradient(
    const tvcox::survdata::RiskIndex& index,
    const tvcox::spline::BasisMatrix& basis,
    const CoefficientMatrix& theta
)
{
    Eigen::VectorXd out(theta.size());
    CoefficientMatrix work = theta;
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        const double x = work.data()[j];
        work.data()[j] = x + step;
        const double up = tvcox::likelihood::loglik(index, basis, work);
        work.data()[j] = x - step;
        const double down = tvcox::likelihood::loglik(index, basis, work);
        work.data()[j] = x;
        out[j] = (up - down) / (2 * step);
    }
    return out;
}

/// Central differences of the analytic gradient, symmetrized.
inline Eigen::MatrixXd hessian(
    const tvcox::survdata::RiskIndex& index,
    const tvcox::spline::BasisMatrix& basis,
    const CoefficientMatrix& theta
)
{
    const auto n = theta.size();
    Eigen::MatrixXd out(n, n);
    CoefficientMatrix work = theta;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double x = work.data()[j];
        work.data()[j] = x + step;
        const Eigen::VectorXd up = tvcox::likelihood::gradient(index, basis, work);
        work.data()[j] = x - step;
        const Eigen::VectorXd down = tvcox::likelihood::gradient(index, basis, work);
        work.data()[j] = x;
        out.col(j) = (up - down) / (2 * step);
    }
    return 0.5 * (out + out.transpose());
}

/// max_j |a_j - b_j| / max(|a_j|, 1): relative error, absolute below unit scale.
template <class A, class B>
double max_relative_error(const A& a, const B& b)
{
    const auto diff = (a - b).array().abs();
    const auto denom = a.array().abs().max(1.0);
    return (diff / denom).maxCoeff();
}

} // namespace fd
