#pragma once
#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>
#include <Eigen/Dense>
#include <tvcox/error.hpp>

namespace tvcox {
namespace spline {

/// Fixed-knot B-spline basis on [t_min, t_max] with a clamped (open) knot
/// vector: each boundary knot is repeated degree+1 times.
class SplineSpec
{
    int degree_ = 3;
    std::vector<double> interior_;
    double t_min_ = 0.0;
    double t_max_ = 1.0;
    std::vector<double> knots_;

public:
    SplineSpec() : SplineSpec(3, {}, 0.0, 1.0) {}

    SplineSpec(int degree, std::vector<double> interior_knots, double t_min, double t_max)
        : degree_(degree), interior_(std::move(interior_knots)), t_min_(t_min), t_max_(t_max)
    {
        if (degree_ < 0) {
            throw Error(ErrorCode::invalid_spec, "spline degree must be non-negative");
        }
        if (!(std::isfinite(t_min_) && std::isfinite(t_max_) && t_min_ < t_max_)) {
            throw Error(ErrorCode::invalid_spec, "spline domain must be a finite interval with t_min < t_max");
        }
        for (size_t i = 0; i < interior_.size(); ++i) {
            const double k = interior_[i];
            if (!(k > t_min_ && k < t_max_)) {
                throw Error(ErrorCode::knot_collision,
                    "interior knot " + std::to_string(k) + " is not strictly inside the domain");
            }
            if (i > 0 && !(k > interior_[i - 1])) {
                throw Error(ErrorCode::knot_collision, "interior knots must be strictly increasing");
            }
        }
        knots_.reserve(interior_.size() + 2 * (degree_ + 1));
        knots_.insert(knots_.end(), degree_ + 1, t_min_);
        knots_.insert(knots_.end(), interior_.begin(), interior_.end());
        knots_.insert(knots_.end(), degree_ + 1, t_max_);
    }

    int degree() const { return degree_; }
    int K() const { return static_cast<int>(interior_.size()) + degree_ + 1; }
    double t_min() const { return t_min_; }
    double t_max() const { return t_max_; }
    const std::vector<double>& interior_knots() const { return interior_; }
    const std::vector<double>& knots() const { return knots_; }

    double clamp(double t) const { return std::clamp(t, t_min_, t_max_); }

    bool operator==(const SplineSpec& o) const
    {
        return degree_ == o.degree_ && interior_ == o.interior_ &&
               t_min_ == o.t_min_ && t_max_ == o.t_max_;
    }
};

struct BasisMatrix
{
    std::vector<double> times;
    Eigen::MatrixXd values; // rows: times, cols: K
};

/// Type-7 (linear interpolation) empirical quantile of a sorted sample.
inline double sorted_quantile(std::span<const double> sorted, double prob)
{
    const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
    const auto lo = static_cast<size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

/// Knots at the j/(K-degree) quantiles of the distinct event times,
/// domain [0, max event time].
inline SplineSpec make_spec(int degree, int K, std::span<const double> event_times)
{
    if (degree < 0 || K < degree + 1) {
        throw Error(ErrorCode::invalid_spec,
            "basis count K=" + std::to_string(K) + " must be at least degree+1=" + std::to_string(degree + 1));
    }
    if (event_times.empty()) {
        throw Error(ErrorCode::invalid_spec, "no event times to place knots on");
    }
    std::vector<double> distinct(event_times.begin(), event_times.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const double t_max = distinct.back();
    if (!(t_max > 0.0)) {
        throw Error(ErrorCode::invalid_spec, "event times must have positive spread");
    }
    const int n_interior = K - degree - 1;
    if (static_cast<int>(distinct.size()) < n_interior) {
        throw Error(ErrorCode::knot_collision,
            "only " + std::to_string(distinct.size()) + " distinct event times for " +
            std::to_string(n_interior) + " interior knots");
    }
    std::vector<double> interior;
    interior.reserve(n_interior);
    for (int j = 1; j <= n_interior; ++j) {
        interior.push_back(sorted_quantile(distinct, static_cast<double>(j) / (K - degree)));
    }
    return SplineSpec(degree, std::move(interior), 0.0, t_max);
}

/// Evaluates the nonzero basis functions at t (Cox-de Boor recursion).
/// Writes degree+1 values into `local` and returns the index of the first.
inline int evaluate_local(const SplineSpec& spec, double t, std::span<double> local)
{
    const auto& U = spec.knots();
    const int d = spec.degree();
    const int n = spec.K() - 1;
    t = spec.clamp(t);

    int span;
    if (t >= U[n + 1]) {
        span = n;
    } else {
        // last index with U[span] <= t, restricted to [d, n]
        const auto it = std::upper_bound(U.begin() + d, U.begin() + n + 1, t);
        span = static_cast<int>(it - U.begin()) - 1;
    }

    local[0] = 1.0;
    double left[32], right[32];
    for (int j = 1; j <= d; ++j) {
        left[j] = t - U[span + 1 - j];
        right[j] = U[span + j] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = local[r] / (right[r + 1] + left[j - r]);
            local[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        local[j] = saved;
    }
    return span - d;
}

inline Eigen::VectorXd evaluate(const SplineSpec& spec, double t)
{
    if (spec.degree() > 30) {
        throw Error(ErrorCode::invalid_spec, "spline degree above 30 is not supported");
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(spec.K());
    double local[32];
    const int first = evaluate_local(spec, t, std::span<double>(local, spec.degree() + 1));
    for (int r = 0; r <= spec.degree(); ++r) out[first + r] = local[r];
    return out;
}

inline BasisMatrix evaluate_batch(const SplineSpec& spec, std::span<const double> times)
{
    BasisMatrix out;
    out.times.assign(times.begin(), times.end());
    out.values.resize(static_cast<Eigen::Index>(times.size()), spec.K());
    for (size_t i = 0; i < times.size(); ++i) {
        out.values.row(static_cast<Eigen::Index>(i)) = evaluate(spec, times[i]).transpose();
    }
    return out;
}

} // namespace spline
} // namespace tvcox
