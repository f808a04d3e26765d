#pragma once
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>
#include <Eigen/Dense>
#include <tvcox/error.hpp>
#include <tvcox/partial_likelihood.hpp>

namespace tvcox {
namespace optim {

/// How the selected block moves once p* is chosen.
///  - scaled_newton: theta_p += nu * c_p * mu_p = nu * (-H_p)^{-1} g_p, the
///    maximizer of the block-diagonal surrogate with H_p = -hess_p + ridge.
///  - normalized:    theta_p += nu * mu_p, a unit step in the H_p = c_p(-hess_p)
///    norm. Kept for inspection; it oscillates once c_p < nu / 2.
enum class StepRule { scaled_newton, normalized };

enum class StopReason { score_threshold, loglik_relative_change, max_iterations };

inline constexpr std::string_view to_string(StopReason r)
{
    switch (r) {
        case StopReason::score_threshold: return "score-threshold";
        case StopReason::loglik_relative_change: return "loglik-relative-change";
        case StopReason::max_iterations: return "max-iterations";
    }
    return "unknown";
}

inline constexpr std::string_view to_string(StepRule r)
{
    return r == StepRule::scaled_newton ? "scaled-newton" : "normalized";
}

/// Shared by MMSA and the baselines. `learning_rate` is the fixed step for
/// gradient ascent and the base rate for Adagrad.
struct MmsaConfig
{
    double learning_rate = 0.05;
    double subsample_fraction = 1.0;
    int max_iterations = 20000;
    double tol = 1e-6;
    double loglik_tol = 1e-6;   // relative log-likelihood change; 0 disables
    double ridge = 1e-8;
    std::uint64_t seed = 1;
    StepRule step_rule = StepRule::scaled_newton;
    Eigen::Index hessian_guard = likelihood::default_hessian_guard;

    void validate() const
    {
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
            throw Error(ErrorCode::usage, "learning rate must be positive");
        }
        if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
            throw Error(ErrorCode::usage, "subsample fraction must lie in (0, 1]");
        }
        if (!(tol > 0.0)) throw Error(ErrorCode::usage, "tol must be positive");
        if (!(loglik_tol >= 0.0)) throw Error(ErrorCode::usage, "loglik_tol must be non-negative");
        if (!(ridge >= 0.0)) throw Error(ErrorCode::usage, "ridge must be non-negative");
        if (max_iterations < 0) throw Error(ErrorCode::usage, "max_iterations must be non-negative");
    }
};

struct TraceEntry
{
    int iteration = 0;
    int block = -1;            // selected p* (MMSA only)
    double score = 0.0;        // c_p* for MMSA, Newton decrement g'd for Newton
    double loglik = 0.0;       // full-data log-likelihood after the update
    std::vector<double> directional;  // literal g_p' mu_p per block (MMSA only)
};

struct FitResult
{
    std::string optimizer;
    CoefficientMatrix theta;
    int iterations = 0;
    double initial_loglik = 0.0;
    double loglik = 0.0;
    std::vector<TraceEntry> trace;
    bool converged = false;
    StopReason reason = StopReason::max_iterations;
    double seconds = 0.0;
};

namespace detail {

inline bool relative_change_small(double before, double after, double tol)
{
    return tol > 0.0 && std::abs(after - before) / (1.0 + std::abs(before)) < tol;
}

inline double ascent_slack(double ll)
{
    return 1e-10 + 64.0 * std::numeric_limits<double>::epsilon() * std::abs(ll);
}

class Stopwatch
{
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();

public:
    double elapsed() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
};

/// Uniform subsample of round(fraction * n_rows) rows without replacement,
/// from a generator keyed on (seed, counter).
inline std::vector<unsigned char> subsample_mask(size_t n_rows, double fraction, std::uint64_t seed, std::uint64_t counter)
{
    std::vector<unsigned char> keep(n_rows, 0);
    const auto k = std::max<size_t>(1, static_cast<size_t>(std::llround(fraction * static_cast<double>(n_rows))));
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32)};
    std::mt19937_64 gen(seq);
    std::vector<size_t> perm(n_rows);
    for (size_t i = 0; i < n_rows; ++i) perm[i] = i;
    for (size_t i = 0; i < k && i + 1 < n_rows; ++i) {
        std::uniform_int_distribution<size_t> pick(i, n_rows - 1);
        std::swap(perm[i], perm[pick(gen)]);
    }
    for (size_t i = 0; i < std::min(k, n_rows); ++i) keep[perm[i]] = 1;
    return keep;
}

} // namespace detail

struct RidgedSolve
{
    Eigen::VectorXd x;
    double ridge = 0.0;
};

/// Solves (A + r I) x = rhs for symmetric A, escalating r geometrically
/// from `ridge` up to 1e-2 until the Cholesky factorization succeeds.
inline RidgedSolve solve_ridged(
    const Eigen::MatrixXd& A,
    const Eigen::VectorXd& rhs,
    double ridge,
    const std::string& what
)
{
    double r = ridge;
    const auto I = Eigen::MatrixXd::Identity(A.rows(), A.cols());
    while (true) {
        Eigen::LLT<Eigen::MatrixXd> llt(A + r * I);
        if (llt.info() == Eigen::Success) {
            Eigen::VectorXd x = llt.solve(rhs);
            if (x.allFinite()) return {std::move(x), r};
        }
        if (r >= 1e-2) break;
        r = (r == 0.0) ? 1e-8 : std::min(10.0 * r, 1e-2);
    }
    throw Error(ErrorCode::conditioning,
        what + ": matrix is not positive definite even with ridge 1e-2");
}

struct BlockQuantities
{
    double score = 0.0;            // c_p = g' (-hess_p + ridge)^{-1} g
    Eigen::VectorXd newton_dir;    // (-hess_p + ridge)^{-1} g
    double ridge = 0.0;

    /// Literal directional derivative g' mu_p with mu_p = newton_dir / c_p;
    /// identically 1 whenever c_p > 0.
    double directional(const Eigen::VectorXd& g) const
    {
        return score > 0.0 ? g.dot(newton_dir / score) : 0.0;
    }
};

inline BlockQuantities mmsa_block_quantities(
    const Eigen::VectorXd& grad_p,
    const Eigen::MatrixXd& hess_p,
    double ridge,
    int p = 0
)
{
    BlockQuantities out;
    auto solved = solve_ridged(-hess_p, grad_p, ridge, "block " + std::to_string(p + 1));
    out.newton_dir = std::move(solved.x);
    out.ridge = solved.ridge;
    out.score = std::max(0.0, grad_p.dot(out.newton_dir));
    return out;
}

inline BlockQuantities mmsa_block_quantities(
    const likelihood::LikelihoodReport& report,
    int p,
    double ridge
)
{
    const auto K = report.block_hessians.at(static_cast<size_t>(p)).rows();
    return mmsa_block_quantities(
        report.gradient.segment(p * K, K), report.block_hessians[static_cast<size_t>(p)], ridge, p);
}

/// Surrogate metric blocks H_p matching the step rule.
inline std::vector<Eigen::MatrixXd> surrogate_blocks(
    const likelihood::LikelihoodReport& report,
    StepRule rule,
    double ridge
)
{
    std::vector<Eigen::MatrixXd> out;
    for (size_t p = 0; p < report.block_hessians.size(); ++p) {
        const auto& h = report.block_hessians[p];
        Eigen::MatrixXd Hp = -h + ridge * Eigen::MatrixXd::Identity(h.rows(), h.cols());
        if (rule == StepRule::normalized) {
            Hp *= mmsa_block_quantities(report, static_cast<int>(p), ridge).score;
        }
        out.push_back(std::move(Hp));
    }
    return out;
}

/// g(theta_next | theta) = l + g'(d) - d' H d / (2 nu), d = theta_next - theta.
inline double surrogate_value(
    double loglik,
    const Eigen::VectorXd& grad,
    const std::vector<Eigen::MatrixXd>& h_blocks,
    const CoefficientMatrix& theta,
    const CoefficientMatrix& theta_next,
    double nu
)
{
    const Eigen::VectorXd d = vec(theta_next) - vec(theta);
    double quad = 0.0;
    Eigen::Index off = 0;
    for (const auto& H : h_blocks) {
        const auto dp = d.segment(off, H.rows());
        quad += dp.dot(H * dp);
        off += H.rows();
    }
    return loglik + grad.dot(d) - quad / (2.0 * nu);
}

struct AscentCheck
{
    double lambda_max = 0.0;
    bool holds = false;
};

/// Eigenvalue test lambda_max(H^{-1/2} (-hess(mid)) H^{-1/2}) < 1/nu at the
/// midpoint of theta and theta_next. A diagnostic, not a guarantee: the
/// exact mean-value point is unknown.
inline AscentCheck verify_ascent_condition(
    const survdata::RiskIndex& index,
    const spline::BasisMatrix& basis,
    const CoefficientMatrix& theta,
    const CoefficientMatrix& theta_next,
    double nu,
    const std::vector<Eigen::MatrixXd>& h_blocks,
    Eigen::Index guard = likelihood::default_hessian_guard
)
{
    const CoefficientMatrix mid = 0.5 * (theta + theta_next);
    const Eigen::MatrixXd neg_hess = -likelihood::full_hessian(index, basis, mid, guard);
    const Eigen::Index PK = neg_hess.rows();
    Eigen::MatrixXd inv_sqrt = Eigen::MatrixXd::Zero(PK, PK);
    Eigen::Index off = 0;
    for (size_t p = 0; p < h_blocks.size(); ++p) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h_blocks[p]);
        if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
            throw Error(ErrorCode::conditioning,
                "surrogate block " + std::to_string(p + 1) + " is not positive definite");
        }
        const auto k = h_blocks[p].rows();
        inv_sqrt.block(off, off, k, k) = es.operatorInverseSqrt();
        off += k;
    }
    const Eigen::MatrixXd M = inv_sqrt * neg_hess * inv_sqrt;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    AscentCheck out;
    out.lambda_max = es.eigenvalues().maxCoeff();
    out.holds = out.lambda_max < 1.0 / nu;
    return out;
}

/// Read-only view handed to an MMSA observer after each update.
struct MmsaIteration
{
    int iteration;
    const CoefficientMatrix& theta_before;
    const CoefficientMatrix& theta_after;
    const likelihood::LikelihoodReport& report;  // quantities the step was computed from
    const std::vector<BlockQuantities>& blocks;
    int selected;
};

using MmsaObserver = std::function<void(const MmsaIteration&)>;

/// Block-wise MM steepest ascent. Each iteration computes block scores c_p,
/// picks p* = argmax c_p (ties to the smallest p) and moves only block p*.
inline FitResult mmsa_fit(
    const survdata::RiskIndex& index,
    const spline::BasisMatrix& basis,
    const MmsaConfig& config,
    const CoefficientMatrix* init_theta = nullptr,
    const MmsaObserver& observer = {}
)
{
    config.validate();
    detail::Stopwatch clock;
    const int P = index.P;
    const auto K = static_cast<int>(basis.values.cols());
    const bool stochastic = config.subsample_fraction < 1.0;
    constexpr int full_check_every = 50;

    FitResult res;
    res.optimizer = "mmsa";
    res.theta = init_theta ? *init_theta : CoefficientMatrix::Zero(P, K);

    auto eval_direction = [&](const CoefficientMatrix& th, int iter) {
        if (!stochastic) return likelihood::evaluate(index, basis, th);
        const auto keep = detail::subsample_mask(index.n_rows, config.subsample_fraction, config.seed,
            static_cast<std::uint64_t>(iter));
        const auto sub = index.subset(keep);
        return likelihood::evaluate(sub, basis, th);
    };

    auto rep = eval_direction(res.theta, 0);
    double ll = stochastic ? likelihood::loglik(index, basis, res.theta) : rep.loglik;
    res.initial_loglik = ll;

    std::vector<BlockQuantities> blocks(static_cast<size_t>(P));
    int iter = 0;
    while (true) {
        for (int p = 0; p < P; ++p) {
            blocks[static_cast<size_t>(p)] = mmsa_block_quantities(rep, p, config.ridge);
        }

        // score criterion on full data
        const bool check_score = !stochastic || iter % full_check_every == 0;
        if (check_score) {
            likelihood::LikelihoodReport full_storage;
            const likelihood::LikelihoodReport* full = &rep;
            if (stochastic) {
                full_storage = likelihood::evaluate(index, basis, res.theta);
                full = &full_storage;
            }
            double max_c = 0.0;
            for (int p = 0; p < P; ++p) {
                const double c = stochastic ? mmsa_block_quantities(*full, p, config.ridge).score
                                            : blocks[static_cast<size_t>(p)].score;
                max_c = std::max(max_c, c);
            }
            if (max_c < config.tol && full->gradient.lpNorm<Eigen::Infinity>() < config.tol) {
                res.converged = true;
                res.reason = StopReason::score_threshold;
                break;
            }
        }
        if (iter >= config.max_iterations) {
            res.reason = StopReason::max_iterations;
            break;
        }

        int best = 0;
        for (int p = 1; p < P; ++p) {
            if (blocks[static_cast<size_t>(p)].score > blocks[static_cast<size_t>(best)].score) best = p;
        }
        const auto& sel = blocks[static_cast<size_t>(best)];
        const CoefficientMatrix before = res.theta;
        if (sel.score > 0.0) {
            const double scale = config.step_rule == StepRule::scaled_newton
                ? config.learning_rate
                : config.learning_rate / sel.score;
            res.theta.row(best) += scale * sel.newton_dir.transpose();
        }
        ++iter;

        TraceEntry entry;
        entry.iteration = iter;
        entry.block = best;
        entry.score = sel.score;
        for (int p = 0; p < P; ++p) {
            entry.directional.push_back(
                blocks[static_cast<size_t>(p)].directional(rep.gradient.segment(p * K, K)));
        }
        if (observer) observer(MmsaIteration{iter, before, res.theta, rep, blocks, best});

        rep = eval_direction(res.theta, iter);
        const double ll_new = stochastic ? likelihood::loglik(index, basis, res.theta) : rep.loglik;
        if (!stochastic && ll_new < ll - detail::ascent_slack(ll)) {
            throw Error(ErrorCode::ascent_violation,
                "log-likelihood decreased from " + std::to_string(ll) + " to " + std::to_string(ll_new) +
                " at iteration " + std::to_string(iter) + "; lower the learning rate");
        }
        entry.loglik = ll_new;
        res.trace.push_back(std::move(entry));
        const bool small_change = detail::relative_change_small(ll, ll_new, config.loglik_tol);
        ll = ll_new;
        if (small_change) {
            res.converged = true;
            res.reason = StopReason::loglik_relative_change;
            break;
        }
    }
    res.iterations = iter;
    res.loglik = ll;
    res.seconds = clock.elapsed();
    return res;
}

namespace detail {

/// Armijo backtracking along `dir`: largest s in {1, 1/2, ...} with
/// l(theta + s dir) >= l(theta) + 1e-4 s slope. Returns 0 when none is found.
template <class Eval>
double backtrack(Eval&& eval_at, double ll, double slope)
{
    constexpr double armijo = 1e-4;
    constexpr double shrink = 0.5;
    double s = 1.0;
    for (int k = 0; k < 60; ++k) {
        double trial;
        try {
            trial = eval_at(s);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::overflow) throw;
            trial = -std::numeric_limits<double>::infinity();
        }
        if (std::isfinite(trial) && trial >= ll + armijo * s * slope) return s;
        s *= shrink;
    }
    return 0.0;
}

} // namespace detail

/// Full-Hessian Newton ascent with Armijo backtracking.
inline FitResult newton_fit(
    const survdata::RiskIndex& index,
    const spline::BasisMatrix& basis,
    const MmsaConfig& config,
    const CoefficientMatrix* init_theta = nullptr
)
{
    config.validate();
    detail::Stopwatch clock;
    const int P = index.P;
    const auto K = static_cast<int>(basis.values.cols());
    if (static_cast<Eigen::Index>(P) * K > config.hessian_guard) {
        throw Error(ErrorCode::capacity,
            "Newton needs a " + std::to_string(P * K) + "-dimensional Hessian; guard is " +
            std::to_string(config.hessian_guard));
    }
    const likelihood::EvalOptions opts{true, false, true, config.hessian_guard};

    FitResult res;
    res.optimizer = "newton";
    res.theta = init_theta ? *init_theta : CoefficientMatrix::Zero(P, K);
    auto rep = likelihood::evaluate(index, basis, res.theta, opts);
    double ll = rep.loglik;
    res.initial_loglik = ll;
    int iter = 0;
    while (true) {
        if (rep.gradient.lpNorm<Eigen::Infinity>() < config.tol) {
            res.converged = true;
            res.reason = StopReason::score_threshold;
            break;
        }
        if (iter >= config.max_iterations) {
            res.reason = StopReason::max_iterations;
            break;
        }
        const auto dir = solve_ridged(-rep.full_hessian, rep.gradient, config.ridge, "Newton system").x;
        const double slope = rep.gradient.dot(dir);
        const Eigen::VectorXd base = vec(res.theta);
        const double s = detail::backtrack([&](double step) {
            return likelihood::loglik(index, basis, unvec(base + step * dir, P, K));
        }, ll, slope);
        if (s == 0.0) {
            // no ascent possible along the Newton direction: numerically stationary
            res.converged = true;
            res.reason = StopReason::loglik_relative_change;
            break;
        }
        res.theta = unvec(base + s * dir, P, K);
        ++iter;
        rep = likelihood::evaluate(index, basis, res.theta, opts);
        res.trace.push_back({iter, -1, slope, rep.loglik, {}});
        const bool small_change = detail::relative_change_small(ll, rep.loglik, config.loglik_tol);
        ll = rep.loglik;
        if (small_change) {
            res.converged = true;
            res.reason = StopReason::loglik_relative_change;
            break;
        }
    }
    res.iterations = iter;
    res.loglik = ll;
    res.seconds = clock.elapsed();
    return res;
}

/// Fixed-step gradient ascent, theta += nu * grad.
inline FitResult gradient_ascent_fit(
    const survdata::RiskIndex& index,
    const spline::BasisMatrix& basis,
    const MmsaConfig& config,
    const CoefficientMatrix* init_theta = nullptr
)
{
    config.validate();
    detail::Stopwatch clock;
    const int P = index.P;
    const auto K = static_cast<int>(basis.values.cols());
    const likelihood::EvalOptions opts{true, false, false};

    FitResult res;
    res.optimizer = "gradient";
    res.theta = init_theta ? *init_theta : CoefficientMatrix::Zero(P, K);
    auto rep = likelihood::evaluate(index, basis, res.theta, opts);
    double ll = rep.loglik;
    res.initial_loglik = ll;
    int iter = 0;
    int decreasing = 0;
    while (true) {
        if (rep.gradient.lpNorm<Eigen::Infinity>() < config.tol) {
            res.converged = true;
            res.reason = StopReason::score_threshold;
            break;
        }
        if (iter >= config.max_iterations) {
            res.reason = StopReason::max_iterations;
            break;
        }
        vec(res.theta) += config.learning_rate * rep.gradient;
        ++iter;
        rep = likelihood::evaluate(index, basis, res.theta, opts);
        res.trace.push_back({iter, -1, rep.gradient.lpNorm<Eigen::Infinity>(), rep.loglik, {}});
        decreasing = rep.loglik < ll ? decreasing + 1 : 0;
        if (decreasing >= 10) {
            throw Error(ErrorCode::step_size,
                "gradient ascent diverging (log-likelihood fell 10 iterations in a row); lower the learning rate");
        }
        const bool small_change = detail::relative_change_small(ll, rep.loglik, config.loglik_tol);
        ll = rep.loglik;
        if (small_change) {
            res.converged = true;
            res.reason = StopReason::loglik_relative_change;
            break;
        }
    }
    res.iterations = iter;
    res.loglik = ll;
    res.seconds = clock.elapsed();
    return res;
}

/// Cyclic scalar Newton steps with backtracking over all P*K coordinates.
/// One iteration is one full cycle.
inline FitResult coordinate_ascent_fit(
    const survdata::RiskIndex& index,
    const spline::BasisMatrix& basis,
    const MmsaConfig& config,
    const CoefficientMatrix* init_theta = nullptr
)
{
    config.validate();
    detail::Stopwatch clock;
    const int P = index.P;
    const auto K = static_cast<int>(basis.values.cols());
    const likelihood::EvalOptions opts{true, true, false};

    FitResult res;
    res.optimizer = "coordinate";
    res.theta = init_theta ? *init_theta : CoefficientMatrix::Zero(P, K);
    auto rep = likelihood::evaluate(index, basis, res.theta, opts);
    double ll = rep.loglik;
    res.initial_loglik = ll;
    int iter = 0;
    while (true) {
        if (rep.gradient.lpNorm<Eigen::Infinity>() < config.tol) {
            res.converged = true;
            res.reason = StopReason::score_threshold;
            break;
        }
        if (iter >= config.max_iterations) {
            res.reason = StopReason::max_iterations;
            break;
        }
        const double ll_cycle_start = ll;
        for (int p = 0; p < P; ++p) {
            for (int k = 0; k < K; ++k) {
                const Eigen::Index j = static_cast<Eigen::Index>(p) * K + k;
                const Eigen::MatrixXd h = rep.block_hessians[static_cast<size_t>(p)].block(k, k, 1, 1);
                const Eigen::VectorXd g = rep.gradient.segment(j, 1);
                const auto dir = solve_ridged(-h, g, config.ridge, "coordinate " + std::to_string(j + 1)).x;
                const double slope = g.dot(dir);
                const Eigen::VectorXd base = vec(res.theta);
                const double s = detail::backtrack([&](double step) {
                    Eigen::VectorXd trial = base;
                    trial.segment(j, 1) += step * dir;
                    return likelihood::loglik(index, basis, unvec(trial, P, K));
                }, ll, slope);
                if (s > 0.0) {
                    Eigen::VectorXd next = base;
                    next.segment(j, 1) += s * dir;
                    res.theta = unvec(next, P, K);
                    rep = likelihood::evaluate(index, basis, res.theta, opts);
                    ll = rep.loglik;
                }
            }
        }
        ++iter;
        res.trace.push_back({iter, -1, rep.gradient.lpNorm<Eigen::Infinity>(), ll, {}});
        if (ll == ll_cycle_start || detail::relative_change_small(ll_cycle_start, ll, config.loglik_tol)) {
            res.converged = true;
            res.reason = StopReason::loglik_relative_change;
            break;
        }
    }
    res.iterations = iter;
    res.loglik = ll;
    res.seconds = clock.elapsed();
    return res;
}

/// Stochastic gradient ascent with Adagrad per-coordinate step sizes.
/// Convergence is judged on the full-data log-likelihood every 50 iterations.
inline FitResult adagrad_fit(
    const survdata::RiskIndex& index,
    const spline::BasisMatrix& basis,
    const MmsaConfig& config,
    const CoefficientMatrix* init_theta = nullptr
)
{
    config.validate();
    detail::Stopwatch clock;
    const int P = index.P;
    const auto K = static_cast<int>(basis.values.cols());
    constexpr int check_every = 50;
    constexpr double eps = 1e-8;
    const bool stochastic = config.subsample_fraction < 1.0;

    FitResult res;
    res.optimizer = "adagrad";
    res.theta = init_theta ? *init_theta : CoefficientMatrix::Zero(P, K);
    double ll = likelihood::loglik(index, basis, res.theta);
    res.initial_loglik = ll;
    Eigen::ArrayXd accum = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(P) * K);
    int iter = 0;
    while (true) {
        if (iter >= config.max_iterations) {
            res.reason = StopReason::max_iterations;
            break;
        }
        Eigen::VectorXd g;
        if (stochastic) {
            const auto keep = detail::subsample_mask(index.n_rows, config.subsample_fraction, config.seed,
                static_cast<std::uint64_t>(iter));
            g = likelihood::gradient(index.subset(keep), basis, res.theta);
        } else {
            g = likelihood::gradient(index, basis, res.theta);
        }
        accum += g.array().square();
        vec(res.theta).array() += config.learning_rate * g.array() / (accum.sqrt() + eps);
        ++iter;
        if (iter % check_every == 0) {
            const double ll_new = likelihood::loglik(index, basis, res.theta);
            res.trace.push_back({iter, -1, g.lpNorm<Eigen::Infinity>(), ll_new, {}});
            const bool small_change = detail::relative_change_small(ll, ll_new, config.loglik_tol);
            ll = ll_new;
            if (small_change) {
                res.converged = true;
                res.reason = StopReason::loglik_relative_change;
                break;
            }
        }
    }
    if (iter % check_every != 0) ll = likelihood::loglik(index, basis, res.theta);
    res.iterations = iter;
    res.loglik = ll;
    res.seconds = clock.elapsed();
    return res;
}

enum class Optimizer { mmsa, newton, gradient, coordinate, adagrad };

inline Optimizer parse_optimizer(std::string_view name)
{
    if (name == "mmsa") return Optimizer::mmsa;
    if (name == "newton") return Optimizer::newton;
    if (name == "gradient") return Optimizer::gradient;
    if (name == "coordinate") return Optimizer::coordinate;
    if (name == "adagrad") return Optimizer::adagrad;
    throw Error(ErrorCode::usage, "unknown optimizer '" + std::string(name) + "'");
}

inline FitResult run(
    Optimizer which,
    const survdata::RiskIndex& index,
    const spline::BasisMatrix& basis,
    const MmsaConfig& config,
    const CoefficientMatrix* init_theta = nullptr
)
{
    switch (which) {
        case Optimizer::mmsa: return mmsa_fit(index, basis, config, init_theta);
        case Optimizer::newton: return newton_fit(index, basis, config, init_theta);
        case Optimizer::gradient: return gradient_ascent_fit(index, basis, config, init_theta);
        case Optimizer::coordinate: return coordinate_ascent_fit(index, basis, config, init_theta);
        case Optimizer::adagrad: return adagrad_fit(index, basis, config, init_theta);
    }
    throw Error(ErrorCode::usage, "unknown optimizer");
}

} // namespace optim
} // namespace tvcox
