#pragma once
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>
#include <Eigen/Dense>
#include <tvcox/chisq.hpp>
#include <tvcox/error.hpp>
#include <tvcox/model.hpp>
#include <tvcox/optimizers.hpp>
#include <tvcox/partial_likelihood.hpp>
#include <tvcox/splinebasis.hpp>

namespace tvcox {
namespace inference {

inline constexpr double normal_quantile_975 = 1.959964;

enum class Information { empirical, observed };

inline constexpr std::string_view to_string(Information i)
{
    return i == Information::empirical ? "empirical" : "observed";
}

/// (K-1) x PK contrast; row k is e_{p,0} - e_{p,k+1}.
inline Eigen::MatrixXd contrast_matrix(int p, int P, int K)
{
    if (p < 0 || p >= P) throw Error(ErrorCode::invalid_spec, "covariate index out of range");
    if (K < 2) throw Error(ErrorCode::invalid_spec, "a constancy test needs K >= 2");
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(K - 1, static_cast<Eigen::Index>(P) * K);
    const Eigen::Index base = static_cast<Eigen::Index>(p) * K;
    for (int k = 0; k + 1 < K; ++k) {
        C(k, base) = 1.0;
        C(k, base + k + 1) = -1.0;
    }
    return C;
}

struct TestEntry
{
    int covariate = 0;
    std::string name;
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
    Information information = Information::empirical;
};

struct TestReport
{
    std::vector<TestEntry> entries;
    bool converged = false;
    std::string convergence_reason;
};

namespace detail {

/// Cholesky of A + r*I with r escalating from 0 through 1e-10 * mean|diag|.
inline Eigen::LLT<Eigen::MatrixXd> factor_information(const Eigen::MatrixXd& A)
{
    const Eigen::Index n = A.rows();
    const double scale = std::max(A.diagonal().cwiseAbs().mean(), 1e-300);
    Eigen::MatrixXd sym = 0.5 * (A + A.transpose());
    double ridge = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
        Eigen::LLT<Eigen::MatrixXd> llt(sym + ridge * Eigen::MatrixXd::Identity(n, n));
        if (llt.info() == Eigen::Success) return llt;
        ridge = (ridge == 0.0) ? 1e-10 * scale : ridge * 10.0;
    }
    throw Error(ErrorCode::rank_deficient, "information matrix is not positive definite after ridge escalation");
}

} // namespace detail

/// (C theta)' (C A^{-1} C')^{-1} (C theta); A^{-1} C' by solving rows(C)
/// right-hand sides.
inline double wald_statistic(
    const Eigen::VectorXd& theta,
    const Eigen::MatrixXd& C,
    const Eigen::MatrixXd& information
)
{
    if (information.rows() != theta.size() || information.cols() != theta.size() || C.cols() != theta.size()) {
        throw Error(ErrorCode::invalid_spec, "dimension mismatch in Wald statistic");
    }
    const auto llt = detail::factor_information(information);
    const Eigen::MatrixXd X = llt.solve(C.transpose());
    Eigen::MatrixXd M = C * X;
    M = 0.5 * (M + M.transpose());
    const Eigen::VectorXd c = C * theta;
    Eigen::LDLT<Eigen::MatrixXd> inner(M);
    const double mmax = M.diagonal().cwiseAbs().maxCoeff();
    if (inner.info() != Eigen::Success || !(inner.vectorD().minCoeff() > 1e-13 * mmax)) {
        throw Error(ErrorCode::rank_deficient, "contrast covariance is singular");
    }
    return std::max(0.0, c.dot(inner.solve(c)));
}

inline TestEntry make_entry(const CoefficientMatrix& theta, const Eigen::MatrixXd& information, int p, Information kind)
{
    const int P = static_cast<int>(theta.rows());
    const int K = static_cast<int>(theta.cols());
    TestEntry e;
    e.covariate = p;
    e.df = K - 1;
    e.information = kind;
    e.statistic = wald_statistic(vec(theta), contrast_matrix(p, P, K), information);
    e.p_value = stats::chi_square_upper_tail(e.statistic, e.df);
    return e;
}

inline TestEntry wald_test_empirical(const CoefficientMatrix& theta, const likelihood::ScoreResiduals& residuals, int p)
{
    return make_entry(theta, residuals.V, p, Information::empirical);
}

inline TestEntry wald_test_observed(const CoefficientMatrix& theta, const Eigen::MatrixXd& full_hessian, int p)
{
    return make_entry(theta, -full_hessian, p, Information::observed);
}

/// Information matrix (V or -H) at the fitted coefficients.
inline Eigen::MatrixXd information_matrix(const ModelFit& m, Information kind)
{
    if (kind == Information::empirical) {
        return likelihood::score_residuals(m.index, m.basis, m.fit.theta).V;
    }
    return -likelihood::full_hessian(m.index, m.basis, m.fit.theta);
}

/// Constancy tests for every covariate. Requires a converged fit unless
/// `allow_unconverged`; the reason is carried in the report either way.
inline TestReport test_time_varying(const ModelFit& m, Information kind, bool allow_unconverged = false)
{
    if (!m.fit.converged && !allow_unconverged) {
        throw Error(ErrorCode::not_converged,
            "tests need a converged fit (stopped by " + std::string(optim::to_string(m.fit.reason)) + ")");
    }
    TestReport rep;
    rep.converged = m.fit.converged;
    rep.convergence_reason = std::string(optim::to_string(m.fit.reason));
    const Eigen::MatrixXd A = information_matrix(m, kind);
    for (int p = 0; p < static_cast<int>(m.fit.theta.rows()); ++p) {
        auto e = make_entry(m.fit.theta, A, p, kind);
        if (static_cast<size_t>(p) < m.covariate_names.size()) e.name = m.covariate_names[static_cast<size_t>(p)];
        rep.entries.push_back(std::move(e));
    }
    return rep;
}

/// Inverse of an information matrix with the same escalation as the tests.
inline Eigen::MatrixXd covariance_from_information(const Eigen::MatrixXd& information)
{
    const auto llt = detail::factor_information(information);
    return llt.solve(Eigen::MatrixXd::Identity(information.rows(), information.cols()));
}

struct CovariateCurve
{
    Eigen::VectorXd estimate, se, lower, upper;
};

struct CurveEstimate
{
    std::vector<double> grid;
    std::vector<CovariateCurve> curves;  // one per covariate
};

/// Pointwise 95% bands; theta and covariance on the standardized scale,
/// results on the original covariate scale.
inline CurveEstimate curve_with_bands(
    const CoefficientMatrix& theta,
    const Eigen::MatrixXd& covariance,
    const spline::SplineSpec& spec,
    std::span<const double> grid,
    const survdata::Standardization& transform
)
{
    const int P = static_cast<int>(theta.rows());
    const int K = static_cast<int>(theta.cols());
    if (K != spec.K()) throw Error(ErrorCode::invalid_spec, "theta does not match the spline spec");
    if (covariance.rows() != static_cast<Eigen::Index>(P) * K || covariance.cols() != covariance.rows()) {
        throw Error(ErrorCode::invalid_spec, "covariance has the wrong dimension");
    }
    if (transform.scale.size() != P) throw Error(ErrorCode::invalid_spec, "transform does not match theta");
    for (double t : grid) {
        if (t < spec.t_min() || t > spec.t_max()) {
            throw Error(ErrorCode::domain, "grid time " + std::to_string(t) + " lies outside the spline domain");
        }
    }
    const auto B = spline::evaluate_batch(spec, grid).values;  // G x K
    const auto G = B.rows();
    CurveEstimate out;
    out.grid.assign(grid.begin(), grid.end());
    for (int p = 0; p < P; ++p) {
        const Eigen::MatrixXd cpp = covariance.block(p * K, p * K, K, K);
        const Eigen::MatrixXd sym = 0.5 * (cpp + cpp.transpose());
        const double scale = transform.scale[p];
        CovariateCurve c;
        c.estimate = B * theta.row(p).transpose() / scale;
        c.se.resize(G);
        const double tol = 1e-10 * std::max(1.0, sym.diagonal().cwiseAbs().maxCoeff());
        for (Eigen::Index g = 0; g < G; ++g) {
            const double var = B.row(g) * sym * B.row(g).transpose();
            if (var < -tol) {
                throw Error(ErrorCode::numerical, "negative variance in band for covariate " + std::to_string(p + 1));
            }
            c.se[g] = std::sqrt(std::max(0.0, var)) / scale;
        }
        c.lower = c.estimate - normal_quantile_975 * c.se;
        c.upper = c.estimate + normal_quantile_975 * c.se;
        out.curves.push_back(std::move(c));
    }
    return out;
}

inline CurveEstimate curves_for(const ModelFit& m, Information kind, std::span<const double> grid)
{
    return curve_with_bands(m.fit.theta, covariance_from_information(information_matrix(m, kind)),
        m.spec, grid, m.transform);
}

struct CvResult
{
    int chosen_K = 0;
    std::vector<int> candidates;
    std::vector<double> scores;                    // summed over folds
    std::vector<std::vector<double>> fold_scores;  // [candidate][fold]
    std::vector<int> fold_of_row;
};

/// Fold labels stratified by (stratum, status); every fold holds an event.
inline std::vector<int> assign_folds(const survdata::SurvivalDataset& ds, int folds, std::uint64_t seed)
{
    if (folds < 2) throw Error(ErrorCode::usage, "cross-validation needs at least two folds");
    const int groups = ds.J() * 2;
    for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
        std::seed_seq seq{
            static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
            static_cast<std::uint32_t>(attempt), 0xcfu};
        std::mt19937_64 rng(seq);
        std::vector<std::vector<size_t>> members(static_cast<size_t>(groups));
        for (size_t i = 0; i < ds.n(); ++i) {
            members[static_cast<size_t>(ds.stratum[i] * 2 + ds.status[i])].push_back(i);
        }
        std::vector<int> fold(ds.n(), 0);
        std::uint64_t offset = rng() % static_cast<std::uint64_t>(folds);
        for (auto& g : members) {
            for (size_t i = g.size(); i > 1; --i) {
                std::uniform_int_distribution<size_t> pick(0, i - 1);
                std::swap(g[i - 1], g[pick(rng)]);
            }
            for (size_t r : g) fold[r] = static_cast<int>(offset++ % static_cast<std::uint64_t>(folds));
        }
        std::vector<int> events(static_cast<size_t>(folds), 0);
        for (size_t i = 0; i < ds.n(); ++i) events[static_cast<size_t>(fold[i])] += ds.status[i];
        if (std::all_of(events.begin(), events.end(), [](int e) { return e > 0; })) return fold;
    }
    throw Error(ErrorCode::fold_construction, "could not build folds with an event in every fold after 10 attempts");
}

inline CvResult cross_validate_K(
    const survdata::SurvivalDataset& data,
    const std::vector<int>& candidate_Ks,
    int folds,
    const FitOptions& base,
    std::uint64_t seed
)
{
    if (candidate_Ks.empty()) throw Error(ErrorCode::usage, "no candidate K values");
    for (int K : candidate_Ks) {
        if (K < base.degree + 1) {
            throw Error(ErrorCode::invalid_spec, "candidate K=" + std::to_string(K) + " is below degree+1");
        }
    }
    data.validate();
    CvResult out;
    out.candidates = candidate_Ks;
    out.fold_of_row = assign_folds(data, folds, seed);
    const auto times = event_times_of(data);
    for (int K : candidate_Ks) {
        const auto spec = spline::make_spec(base.degree, K, times);
        const ModelFit full = prepare_model(data, spec, base.standardize);
        std::vector<double> per_fold;
        for (int k = 0; k < folds; ++k) {
            std::vector<unsigned char> keep(data.n());
            for (size_t i = 0; i < data.n(); ++i) keep[i] = out.fold_of_row[i] != k;
            const auto train = full.index.subset(keep);
            const auto fit = optim::run(base.optimizer, train, full.basis, base.config);
            per_fold.push_back(likelihood::loglik(full.index, full.basis, fit.theta) -
                               likelihood::loglik(train, full.basis, fit.theta));
        }
        out.scores.push_back(std::accumulate(per_fold.begin(), per_fold.end(), 0.0));
        out.fold_scores.push_back(std::move(per_fold));
    }
    size_t best = 0;
    for (size_t i = 1; i < out.scores.size(); ++i) {
        const bool better = out.scores[i] > out.scores[best] ||
            (out.scores[i] == out.scores[best] && out.candidates[i] < out.candidates[best]);
        if (better) best = i;
    }
    out.chosen_K = out.candidates[best];
    return out;
}

} // namespace inference
} // namespace tvcox
