#pragma once
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>
#include <Eigen/Dense>
#include <tvcox/error.hpp>
#include <tvcox/splinebasis.hpp>
#include <tvcox/survdata.hpp>

namespace tvcox {

/// P x K coefficient matrix; row p holds theta_p. The flattened parameter
/// vector is row-major, so block p occupies entries [p*K, (p+1)*K).
using CoefficientMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const Eigen::VectorXd> vec(const CoefficientMatrix& theta)
{
    return {theta.data(), theta.size()};
}

inline Eigen::Map<Eigen::VectorXd> vec(CoefficientMatrix& theta)
{
    return {theta.data(), theta.size()};
}

inline CoefficientMatrix unvec(const Eigen::VectorXd& v, int P, int K)
{
    return Eigen::Map<const CoefficientMatrix>(v.data(), P, K);
}

namespace likelihood {

inline constexpr Eigen::Index default_hessian_guard = 2000;

struct EvalOptions
{
    bool gradient = true;
    bool block_hessians = true;
    bool full_hessian = false;
    Eigen::Index hessian_guard = default_hessian_guard;
};

struct LikelihoodReport
{
    double loglik = 0.0;
    Eigen::VectorXd gradient;                   // length P*K
    std::vector<Eigen::MatrixXd> block_hessians; // P blocks, K x K
    Eigen::MatrixXd full_hessian;               // P*K x P*K when requested

    Eigen::Ref<const Eigen::VectorXd> gradient_block(int p, int K) const
    {
        return gradient.segment(static_cast<Eigen::Index>(p) * K, K);
    }
};

struct ScoreResiduals
{
    Eigen::MatrixXd psi;             // one row per event, P*K columns
    std::vector<size_t> event_rows;  // original row index of each event, ascending
    Eigen::MatrixXd V;               // sum of psi psi^T
};

/// Basis values at the index's distinct event times, the row layout every
/// kernel below expects.
inline spline::BasisMatrix event_basis(const spline::SplineSpec& spec, const survdata::RiskIndex& index)
{
    return spline::evaluate_batch(spec, index.event_times);
}

namespace detail {

inline void check_inputs(
    const survdata::RiskIndex& index,
    const spline::BasisMatrix& basis,
    const CoefficientMatrix& theta
)
{
    if (basis.values.rows() != static_cast<Eigen::Index>(index.event_times.size())) {
        throw Error(ErrorCode::invalid_spec, "basis must be evaluated at the index's event times");
    }
    if (theta.rows() != index.P || theta.cols() != basis.values.cols()) {
        throw Error(ErrorCode::invalid_spec,
            "theta is " + std::to_string(theta.rows()) + "x" + std::to_string(theta.cols()) +
            ", expected " + std::to_string(index.P) + "x" + std::to_string(basis.values.cols()));
    }
    if (!theta.allFinite()) {
        throw Error(ErrorCode::overflow, "theta contains non-finite entries");
    }
}

[[noreturn]] inline void report_overflow(const survdata::StratumBlock& block, const Eigen::ArrayXd& eta)
{
    for (Eigen::Index r = 0; r < eta.size(); ++r) {
        if (!std::isfinite(eta[r])) {
            throw Error(ErrorCode::overflow,
                "non-finite linear predictor for subject at row " +
                std::to_string(block.rows[static_cast<size_t>(r)] + 1));
        }
    }
    throw Error(ErrorCode::overflow, "non-finite linear predictor");
}

/// Visits every event group with the stabilized risk-set weights.
/// f(block, group, b, zbar_inputs...) receives: the basis row b, the
/// linear predictor shift, the weights e (exp(eta - shift)) and S0.
template <class F>
void for_each_group(
    const survdata::RiskIndex& index,
    const spline::BasisMatrix& basis,
    const CoefficientMatrix& theta,
    F&& f
)
{
    Eigen::VectorXd beta(index.P);
    Eigen::ArrayXd eta;
    Eigen::ArrayXd e;
    for (const auto& block : index.strata) {
        for (const auto& g : block.groups) {
            const auto b = basis.values.row(g.time_index).transpose();
            beta.noalias() = theta * b;
            const Eigen::Index m = g.risk_size;
            eta = (block.x.topRows(m) * beta).array();
            const double shift = eta.maxCoeff();
            if (!std::isfinite(shift) || !eta.allFinite()) report_overflow(block, eta);
            e = (eta - shift).exp();
            f(block, g, b, beta, shift, e);
        }
    }
}

} // namespace detail

/// Stratified Breslow log-partial likelihood and requested derivatives.
inline LikelihoodReport evaluate(
    const survdata::RiskIndex& index,
    const spline::BasisMatrix& basis,
    const CoefficientMatrix& theta,
    const EvalOptions& opts = {}
)
{
    detail::check_inputs(index, basis, theta);
    const int P = index.P;
    const auto K = basis.values.cols();
    const Eigen::Index PK = P * K;
    if (opts.full_hessian && PK > opts.hessian_guard) {
        throw Error(ErrorCode::capacity,
            "full Hessian of dimension " + std::to_string(PK) + " exceeds guard " +
            std::to_string(opts.hessian_guard));
    }

    LikelihoodReport rep;
    CoefficientMatrix grad = CoefficientMatrix::Zero(P, K);
    if (opts.block_hessians) rep.block_hessians.assign(P, Eigen::MatrixXd::Zero(K, K));
    if (opts.full_hessian) rep.full_hessian = Eigen::MatrixXd::Zero(PK, PK);

    Eigen::VectorXd s1(P), zbar(P), s2(P);
    Eigen::MatrixXd bbt(K, K), cov(P, P);
    double ll = 0.0;

    detail::for_each_group(index, basis, theta,
        [&](const survdata::StratumBlock& block, const survdata::EventGroup& g,
            const auto& b, const Eigen::VectorXd& beta, double shift, const Eigen::ArrayXd& e) {
            const Eigen::Index m = g.risk_size;
            const double d = static_cast<double>(g.events.size());
            const double s0 = e.sum();
            ll += g.event_x_sum.dot(beta) - d * (shift + std::log(s0));
            if (!(opts.gradient || opts.block_hessians || opts.full_hessian)) return;

            s1.noalias() = block.x.topRows(m).transpose() * e.matrix();
            zbar = s1 / s0;
            if (opts.gradient) {
                grad.noalias() += (g.event_x_sum - d * zbar) * b.transpose();
            }
            if (opts.block_hessians || opts.full_hessian) {
                bbt.noalias() = b * b.transpose();
            }
            if (opts.block_hessians || opts.full_hessian) {
                s2.noalias() = block.x_sq.topRows(m).transpose() * e.matrix();
            }
            if (opts.block_hessians) {
                for (int p = 0; p < P; ++p) {
                    const double w = s2[p] / s0 - zbar[p] * zbar[p];
                    rep.block_hessians[static_cast<size_t>(p)].noalias() -= (d * w) * bbt;
                }
            }
            if (opts.full_hessian) {
                const auto xm = block.x.topRows(m);
                cov.noalias() = xm.transpose() * (e.matrix().asDiagonal() * xm);
                cov /= s0;
                cov.noalias() -= zbar * zbar.transpose();
                // diagonal from the same formula as the block path
                for (int p = 0; p < P; ++p) cov(p, p) = s2[p] / s0 - zbar[p] * zbar[p];
                for (int p = 0; p < P; ++p) {
                    for (int q = 0; q < P; ++q) {
                        rep.full_hessian.block(p * K, q * K, K, K).noalias() -= (d * cov(p, q)) * bbt;
                    }
                }
            }
        });

    rep.loglik = ll;
    if (opts.gradient) rep.gradient = vec(grad);
    if (opts.full_hessian && opts.block_hessians) {
        // keep the two views bit-identical
        for (int p = 0; p < P; ++p) {
            rep.block_hessians[static_cast<size_t>(p)] = rep.full_hessian.block(p * K, p * K, K, K);
        }
    }
    return rep;
}

inline double loglik(
    const survdata::RiskIndex& index,
    const spline::BasisMatrix& basis,
    const CoefficientMatrix& theta
)
{
    return evaluate(index, basis, theta, {false, false, false}).loglik;
}

inline Eigen::VectorXd gradient(
    const survdata::RiskIndex& index,
    const spline::BasisMatrix& basis,
    const CoefficientMatrix& theta
)
{
    return evaluate(index, basis, theta, {true, false, false}).gradient;
}

inline Eigen::MatrixXd block_hessian(
    const survdata::RiskIndex& index,
    const spline::BasisMatrix& basis,
    const CoefficientMatrix& theta,
    int p
)
{
    if (p < 0 || p >= index.P) {
        throw Error(ErrorCode::invalid_spec, "covariate index " + std::to_string(p) + " out of range");
    }
    return evaluate(index, basis, theta, {false, true, false}).block_hessians[static_cast<size_t>(p)];
}

inline Eigen::MatrixXd full_hessian(
    const survdata::RiskIndex& index,
    const spline::BasisMatrix& basis,
    const CoefficientMatrix& theta,
    Eigen::Index guard = default_hessian_guard
)
{
    return evaluate(index, basis, theta, {false, false, true, guard}).full_hessian;
}

/// Per-event score residuals (X - Zbar) kron B(T) and their outer-product sum.
inline ScoreResiduals score_residuals(
    const survdata::RiskIndex& index,
    const spline::BasisMatrix& basis,
    const CoefficientMatrix& theta
)
{
    detail::check_inputs(index, basis, theta);
    const int P = index.P;
    const auto K = basis.values.cols();
    ScoreResiduals out;
    out.psi.resize(static_cast<Eigen::Index>(index.n_events), P * K);
    Eigen::VectorXd zbar(P);
    CoefficientMatrix outer(P, K);
    Eigen::Index row = 0;
    detail::for_each_group(index, basis, theta,
        [&](const survdata::StratumBlock& block, const survdata::EventGroup& g,
            const auto& b, const Eigen::VectorXd&, double, const Eigen::ArrayXd& e) {
            const Eigen::Index m = g.risk_size;
            zbar.noalias() = block.x.topRows(m).transpose() * e.matrix();
            zbar /= e.sum();
            for (const auto r : g.events) {
                outer.noalias() = (block.x.row(r).transpose() - zbar) * b.transpose();
                out.psi.row(row++) = vec(outer).transpose();
                out.event_rows.push_back(block.rows[static_cast<size_t>(r)]);
            }
        });
    out.psi.conservativeResize(row, Eigen::NoChange);
    // rows ordered by original subject row
    std::vector<Eigen::Index> order(static_cast<size_t>(row));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return out.event_rows[static_cast<size_t>(a)] < out.event_rows[static_cast<size_t>(b)];
    });
    Eigen::MatrixXd psi(row, out.psi.cols());
    std::vector<size_t> rows(static_cast<size_t>(row));
    for (Eigen::Index i = 0; i < row; ++i) {
        psi.row(i) = out.psi.row(order[static_cast<size_t>(i)]);
        rows[static_cast<size_t>(i)] = out.event_rows[static_cast<size_t>(order[static_cast<size_t>(i)])];
    }
    out.psi = std::move(psi);
    out.event_rows = std::move(rows);
    out.V.noalias() = out.psi.transpose() * out.psi;
    return out;
}

} // namespace likelihood
} // namespace tvcox
