#pragma once
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>
#include <Eigen/Dense>
#include <tvcox/error.hpp>
#include <tvcox/model.hpp>
#include <tvcox/survdata.hpp>

namespace tvcox {
namespace sim {

enum class CoefTag { constant, sin_tv, poly_exp_tv, gamma_sin_tv };

inline CoefTag parse_tag(std::string_view s)
{
    if (s == "constant") return CoefTag::constant;
    if (s == "sin_tv") return CoefTag::sin_tv;
    if (s == "poly_exp_tv") return CoefTag::poly_exp_tv;
    if (s == "gamma_sin_tv") return CoefTag::gamma_sin_tv;
    throw Error(ErrorCode::invalid_spec, "unknown coefficient tag '" + std::string(s) + "'");
}

inline constexpr std::string_view to_string(CoefTag t)
{
    switch (t) {
        case CoefTag::constant: return "constant";
        case CoefTag::sin_tv: return "sin_tv";
        case CoefTag::poly_exp_tv: return "poly_exp_tv";
        case CoefTag::gamma_sin_tv: return "gamma_sin_tv";
    }
    return "?";
}

struct TrueCoefficient
{
    CoefTag tag = CoefTag::constant;
    double value = 0.0;  // used by `constant`
};

inline double true_beta(const TrueCoefficient& c, double t, double gamma)
{
    if (!(t >= 0.0)) throw Error(ErrorCode::domain, "true_beta needs t >= 0");
    constexpr double w = 3.0 * std::numbers::pi / 4.0;
    switch (c.tag) {
        case CoefTag::constant: return c.value;
        case CoefTag::sin_tv: return std::sin(w * t);
        case CoefTag::poly_exp_tv: return -(t / 3.0) * (t / 3.0) * std::exp(t / 2.0);
        case CoefTag::gamma_sin_tv: return gamma * std::sin(w * t);
    }
    throw Error(ErrorCode::invalid_spec, "unknown coefficient tag");
}

inline constexpr double baseline_hazard = 0.5;
inline constexpr double censor_max = 3.0;
inline constexpr double ar_rho = 0.6;

struct ScenarioSpec
{
    int setting = 1;
    size_t n = 1000;
    int J = 1;
    int P = 4;
    double gamma = 0.0;
    std::uint64_t seed = 1;
    std::vector<TrueCoefficient> coefficients;

    /// Coefficient layout per setting. Settings 1 and 2: covariate 2 is
    /// sin_tv, 4 is poly_exp_tv, 1 and 3 are +1 and -1, the rest 0.
    /// Setting 3: P = 2 with a constant 1 and gamma_sin_tv.
    static ScenarioSpec make(int setting, size_t n, int P, int J, double gamma, std::uint64_t seed)
    {
        ScenarioSpec s;
        s.setting = setting;
        s.n = n;
        s.J = J;
        s.gamma = gamma;
        s.seed = seed;
        if (setting == 3) {
            if (P != 2) throw Error(ErrorCode::invalid_spec, "setting 3 has exactly two covariates");
            s.P = 2;
            s.coefficients = {{CoefTag::constant, 1.0}, {CoefTag::gamma_sin_tv, 0.0}};
        } else {
            s.P = P;
            for (int p = 1; p <= P; ++p) {
                switch (p) {
                    case 1: s.coefficients.push_back({CoefTag::constant, 1.0}); break;
                    case 2: s.coefficients.push_back({CoefTag::sin_tv, 0.0}); break;
                    case 3: s.coefficients.push_back({CoefTag::constant, -1.0}); break;
                    case 4: s.coefficients.push_back({CoefTag::poly_exp_tv, 0.0}); break;
                    default: s.coefficients.push_back({CoefTag::constant, 0.0}); break;
                }
            }
        }
        s.validate();
        return s;
    }

    void validate() const
    {
        if (setting < 1 || setting > 3) throw Error(ErrorCode::invalid_spec, "setting must be 1, 2 or 3");
        if (J < 1) throw Error(ErrorCode::invalid_spec, "J must be >= 1");
        if (n < static_cast<size_t>(J)) throw Error(ErrorCode::invalid_spec, "n must be >= J");
        if (P < 1) throw Error(ErrorCode::invalid_spec, "P must be >= 1");
        if (setting == 3 && P != 2) throw Error(ErrorCode::invalid_spec, "setting 3 has exactly two covariates");
        if (!(gamma >= 0.0 && gamma <= 3.0)) throw Error(ErrorCode::invalid_spec, "gamma must lie in [0, 3]");
        if (coefficients.size() != static_cast<size_t>(P)) {
            throw Error(ErrorCode::invalid_spec, "need one true coefficient per covariate");
        }
    }

    double beta(int p, double t) const { return true_beta(coefficients[static_cast<size_t>(p)], t, gamma); }

    bool is_constant(int p) const
    {
        const auto& c = coefficients[static_cast<size_t>(p)];
        return c.tag == CoefTag::constant || (c.tag == CoefTag::gamma_sin_tv && gamma == 0.0);
    }
};

/// Generator for stream `stream` of a 64-bit seed.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0)
{
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

/// Independent per-replicate seed.
inline std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t replicate)
{
    auto rng = make_rng(seed, replicate + 1);
    return rng();
}

inline std::vector<double> bernoulli_prevalences(int P)
{
    std::vector<double> out(static_cast<size_t>(P));
    for (int p = 0; p < P; ++p) out[static_cast<size_t>(p)] = P == 1 ? 0.05 : 0.05 + 0.15 * p / (P - 1);
    return out;
}

inline Eigen::MatrixXd draw_covariates(const ScenarioSpec& spec, std::mt19937_64& rng)
{
    const auto n = static_cast<Eigen::Index>(spec.n);
    Eigen::MatrixXd X(n, spec.P);
    if (spec.setting == 2) {
        const auto prev = bernoulli_prevalences(spec.P);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int p = 0; p < spec.P; ++p) X(i, p) = u(rng) < prev[static_cast<size_t>(p)] ? 1.0 : 0.0;
        }
        return X;
    }
    std::normal_distribution<double> z(0.0, 1.0);
    const double innov = std::sqrt(1.0 - ar_rho * ar_rho);
    for (Eigen::Index i = 0; i < n; ++i) {
        X(i, 0) = z(rng);
        for (int p = 1; p < spec.P; ++p) X(i, p) = ar_rho * X(i, p - 1) + innov * z(rng);
    }
    return X;
}

/// Cumulative hazard Lambda(t) = int_0^t 0.5 exp(x'beta(s)) ds by the
/// trapezoid rule on a uniform grid, with beta cached on the grid.
class HazardIntegrator
{
public:
    HazardIntegrator(const ScenarioSpec& spec, double horizon = censor_max, double step = 1e-3)
        : spec_(&spec), horizon_(horizon)
    {
        if (!(horizon > 0.0) || !(step > 0.0)) throw Error(ErrorCode::invalid_spec, "bad integration grid");
        cells_ = static_cast<int>(std::ceil(horizon / step - 1e-9));
        step_ = horizon / cells_;
        beta_.resize(cells_ + 1, spec.P);
        for (int k = 0; k <= cells_; ++k) {
            for (int p = 0; p < spec.P; ++p) beta_(k, p) = spec.beta(p, k * step_);
        }
    }

    double horizon() const { return horizon_; }

    double hazard(const Eigen::VectorXd& x, double t) const
    {
        double eta = 0.0;
        for (int p = 0; p < spec_->P; ++p) eta += x[p] * spec_->beta(p, t);
        return baseline_hazard * std::exp(eta);
    }

    /// Smallest D with Lambda(D) = target, or +inf when Lambda(horizon) < target.
    double invert(const Eigen::VectorXd& x, double target) const
    {
        if (!(target > 0.0)) return 0.0;
        double cum = 0.0;
        double h_prev = baseline_hazard * std::exp(beta_.row(0).dot(x));
        for (int k = 0; k < cells_; ++k) {
            const double h_next = baseline_hazard * std::exp(beta_.row(k + 1).dot(x));
            const double inc = 0.5 * step_ * (h_prev + h_next);
            if (cum + inc >= target) return bisect(x, k * step_, cum, h_prev, target);
            cum += inc;
            h_prev = h_next;
        }
        return std::numeric_limits<double>::infinity();
    }

    double cumulative(const Eigen::VectorXd& x, double t) const
    {
        t = std::clamp(t, 0.0, horizon_);
        double cum = 0.0;
        double h_prev = baseline_hazard * std::exp(beta_.row(0).dot(x));
        const int full = std::min(cells_, static_cast<int>(std::floor(t / step_)));
        for (int k = 0; k < full; ++k) {
            const double h_next = baseline_hazard * std::exp(beta_.row(k + 1).dot(x));
            cum += 0.5 * step_ * (h_prev + h_next);
            h_prev = h_next;
        }
        const double t0 = full * step_;
        return cum + 0.5 * (t - t0) * (h_prev + hazard(x, t));
    }

private:
    double bisect(const Eigen::VectorXd& x, double t0, double cum0, double h0, double target) const
    {
        double lo = t0, hi = t0 + step_;
        auto lambda = [&](double t) { return cum0 + 0.5 * (t - t0) * (h0 + hazard(x, t)); };
        double mid = hi;
        for (int it = 0; it < 200; ++it) {
            mid = 0.5 * (lo + hi);
            const double f = lambda(mid) - target;
            if (std::abs(f) < 1e-8 * std::max(1.0, target) || hi - lo < 1e-15) break;
            (f < 0.0 ? lo : hi) = mid;
        }
        return mid;
    }

    const ScenarioSpec* spec_;
    double horizon_;
    double step_ = 1e-3;
    int cells_ = 0;
    Eigen::MatrixXd beta_;  // (cells+1) x P
};

struct SurvivalDraw
{
    double time;
    int status;
    double death;  // uncapped death time, +inf beyond the horizon
};

/// One subject: D from Lambda(D) = -log U, C ~ U(0,3), D capped at 3.
inline SurvivalDraw draw_survival_time(const Eigen::VectorXd& x, const HazardIntegrator& hz, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double u = 1.0 - u01(rng);  // (0, 1]
    const double death = hz.invert(x, -std::log(u));
    const double censor = censor_max * u01(rng);
    const double d = std::min(death, censor_max);
    if (d < censor) return {d, 1, death};
    return {censor, 0, death};
}

inline survdata::SurvivalDataset generate(const ScenarioSpec& spec)
{
    spec.validate();
    auto rng = make_rng(spec.seed);
    Eigen::MatrixXd X = draw_covariates(spec, rng);
    const HazardIntegrator hz(spec);
    std::vector<double> time(spec.n);
    std::vector<int> status(spec.n);
    std::vector<std::string> strata(spec.n);
    for (size_t i = 0; i < spec.n; ++i) {
        const Eigen::VectorXd x = X.row(static_cast<Eigen::Index>(i)).transpose();
        const auto draw = draw_survival_time(x, hz, rng);
        time[i] = draw.time;
        status[i] = draw.status;
        strata[i] = std::to_string(i % static_cast<size_t>(spec.J) + 1);
    }
    std::vector<std::string> names;
    for (int p = 1; p <= spec.P; ++p) names.push_back("x" + std::to_string(p));
    return survdata::make_dataset(std::move(time), std::move(status), strata, std::move(X), std::move(names));
}

/// 100 equispaced points on [0.05, 2.8].
inline std::vector<double> metric_grid(int points = 100, double lo = 0.05, double hi = 2.8)
{
    std::vector<double> g(static_cast<size_t>(points));
    for (int i = 0; i < points; ++i) g[static_cast<size_t>(i)] = lo + (hi - lo) * i / (points - 1);
    return g;
}

/// Fitted curves on the original covariate scale, P x grid; times outside
/// the spline domain are clamped.
inline Eigen::MatrixXd fitted_curves(const ModelFit& m, std::span<const double> grid)
{
    const auto theta = m.theta_original();
    const auto B = spline::evaluate_batch(m.spec, grid).values;
    return theta * B.transpose();
}

inline Eigen::MatrixXd true_curves(const ScenarioSpec& spec, std::span<const double> grid)
{
    Eigen::MatrixXd out(spec.P, static_cast<Eigen::Index>(grid.size()));
    for (int p = 0; p < spec.P; ++p) {
        for (size_t g = 0; g < grid.size(); ++g) out(p, static_cast<Eigen::Index>(g)) = spec.beta(p, grid[g]);
    }
    return out;
}

struct MetricsReport
{
    std::vector<double> bias;   // signed, per covariate
    std::vector<double> imse;   // per covariate
    double mean_abs_bias = 0.0;
    double mean_imse = 0.0;
    double rejection_rate = std::numeric_limits<double>::quiet_NaN();
    double mean_seconds = 0.0;
    int replicates = 0;
};

/// Accumulates replicate curves against the truth on a fixed grid.
class MetricsAccumulator
{
public:
    MetricsAccumulator(Eigen::MatrixXd truth) : truth_(std::move(truth))
    {
        sum_ = Eigen::MatrixXd::Zero(truth_.rows(), truth_.cols());
        sq_err_ = Eigen::MatrixXd::Zero(truth_.rows(), truth_.cols());
    }

    void add(const Eigen::MatrixXd& estimate, double seconds)
    {
        if (estimate.rows() != truth_.rows() || estimate.cols() != truth_.cols()) {
            throw Error(ErrorCode::invalid_spec, "fitted curves do not match the scenario");
        }
        sum_ += estimate;
        sq_err_ += (estimate - truth_).array().square().matrix();
        seconds_ += seconds;
        ++count_;
    }

    void add_test(bool rejected)
    {
        tests_ += 1;
        rejections_ += rejected ? 1 : 0;
    }

    MetricsReport report() const
    {
        MetricsReport r;
        r.replicates = count_;
        if (count_ == 0) return r;
        const Eigen::MatrixXd mean = sum_ / count_;
        const auto P = truth_.rows();
        for (Eigen::Index p = 0; p < P; ++p) {
            r.bias.push_back((mean.row(p) - truth_.row(p)).mean());
            r.imse.push_back(sq_err_.row(p).mean() / count_);
            r.mean_abs_bias += std::abs(r.bias.back()) / static_cast<double>(P);
            r.mean_imse += r.imse.back() / static_cast<double>(P);
        }
        if (tests_ > 0) r.rejection_rate = static_cast<double>(rejections_) / tests_;
        r.mean_seconds = seconds_ / count_;
        return r;
    }

private:
    Eigen::MatrixXd truth_, sum_, sq_err_;
    double seconds_ = 0.0;
    int count_ = 0;
    int tests_ = 0;
    int rejections_ = 0;
};

} // namespace sim
} // namespace tvcox
