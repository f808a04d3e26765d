#pragma once
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>
#include <nlohmann/json.hpp>
#include <tvcox/error.hpp>
#include <tvcox/inference.hpp>
#include <tvcox/model.hpp>
#include <tvcox/optimizers.hpp>
#include <tvcox/simulate.hpp>
#include <tvcox/splinebasis.hpp>
#include <tvcox/survdata.hpp>
#include <tvcox/version.hpp>

namespace tvcox {
namespace io {

/// Insertion-ordered so documents diff cleanly across runs.
using json = nlohmann::ordered_json;

/// Shortest round-trip text; non-finite values print as "nan", "inf", "-inf".
inline std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return survdata::detail::format_double(v);
}

/// Writes next to the target and renames, so readers never see a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content)
{
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw Error(ErrorCode::io, "cannot create directory '" + path.parent_path().string() + "'");
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io, "cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw Error(ErrorCode::io, "write to '" + tmp.string() + "' failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error(ErrorCode::io, "cannot rename into '" + path.string() + "': " + ec.message());
    }
}

/// First line of every CSV artifact.
inline std::string csv_preamble(const json& config)
{
    return "# tvcox " + std::string(version) + " config=" + config.dump() + "\n";
}

inline json to_json(const optim::MmsaConfig& c)
{
    return {
        {"learning_rate", c.learning_rate},
        {"subsample_fraction", c.subsample_fraction},
        {"max_iterations", c.max_iterations},
        {"tol", c.tol},
        {"loglik_tol", c.loglik_tol},
        {"ridge", c.ridge},
        {"seed", c.seed},
        {"step_rule", optim::to_string(c.step_rule)},
        {"hessian_guard", c.hessian_guard},
    };
}

inline json to_json(const spline::SplineSpec& s)
{
    return {
        {"degree", s.degree()},
        {"K", s.K()},
        {"t_min", s.t_min()},
        {"t_max", s.t_max()},
        {"interior_knots", s.interior_knots()},
    };
}

inline spline::SplineSpec spline_spec_from_json(const json& j)
{
    try {
        return spline::SplineSpec(j.at("degree").get<int>(), j.at("interior_knots").get<std::vector<double>>(),
            j.at("t_min").get<double>(), j.at("t_max").get<double>());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::schema, std::string("spline spec: ") + e.what());
    }
}

/// Row-major nested arrays, one inner array per covariate.
inline json matrix_to_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline CoefficientMatrix matrix_from_json(const json& j)
{
    if (!j.is_array() || j.empty()) throw Error(ErrorCode::schema, "theta must be a non-empty array of rows");
    const auto P = static_cast<Eigen::Index>(j.size());
    const auto K = static_cast<Eigen::Index>(j.front().size());
    CoefficientMatrix out(P, K);
    for (Eigen::Index p = 0; p < P; ++p) {
        const auto& row = j[static_cast<size_t>(p)];
        if (static_cast<Eigen::Index>(row.size()) != K) throw Error(ErrorCode::schema, "theta rows differ in length");
        for (Eigen::Index k = 0; k < K; ++k) out(p, k) = row[static_cast<size_t>(k)].get<double>();
    }
    return out;
}

/// At most `limit` entries: an even stride through the trace plus its last entry.
inline json trace_to_json(const std::vector<optim::TraceEntry>& trace, size_t limit)
{
    json out = json::array();
    if (trace.empty() || limit == 0) return out;
    const size_t stride = trace.size() <= limit ? 1 : (trace.size() + limit - 2) / (limit - 1);
    for (size_t i = 0; i < trace.size(); i += stride) {
        const auto& e = trace[i];
        json row = {{"iteration", e.iteration}, {"block", e.block}, {"score", e.score}, {"loglik", e.loglik}};
        if (!e.directional.empty()) row["directional"] = e.directional;
        out.push_back(std::move(row));
        if (i + stride >= trace.size() && i + 1 != trace.size()) {
            const auto& last = trace.back();
            json tail = {{"iteration", last.iteration}, {"block", last.block}, {"score", last.score}, {"loglik", last.loglik}};
            if (!last.directional.empty()) tail["directional"] = last.directional;
            out.push_back(std::move(tail));
        }
    }
    return out;
}

inline json to_json(const optim::FitResult& f, size_t trace_limit = 1000)
{
    return {
        {"optimizer", f.optimizer},
        {"theta", matrix_to_json(f.theta)},
        {"iterations", f.iterations},
        {"initial_loglik", f.initial_loglik},
        {"loglik", f.loglik},
        {"converged", f.converged},
        {"convergence_reason", optim::to_string(f.reason)},
        {"trace_length", f.trace.size()},
        {"trace", trace_to_json(f.trace, trace_limit)},
        {"seconds", f.seconds},
    };
}

inline json to_json(const inference::TestReport& r)
{
    json entries = json::array();
    for (const auto& e : r.entries) {
        entries.push_back({
            {"covariate", e.covariate + 1},
            {"name", e.name},
            {"statistic", e.statistic},
            {"df", e.df},
            {"p_value", e.p_value},
            {"information", inference::to_string(e.information)},
        });
    }
    return {{"converged", r.converged}, {"convergence_reason", r.convergence_reason}, {"tests", entries}};
}

/// Complete fit document. Coefficients are reported on both scales; the
/// standardized ones are what the optimizer saw.
inline json fit_document(const ModelFit& m, const inference::TestReport* tests, const json& config, size_t trace_limit)
{
    json transform = {
        {"location", std::vector<double>(m.transform.location.data(), m.transform.location.data() + m.transform.location.size())},
        {"scale", std::vector<double>(m.transform.scale.data(), m.transform.scale.data() + m.transform.scale.size())},
    };
    json doc = {
        {"tvcox_version", std::string(version)},
        {"config", config},
        {"covariates", m.covariate_names},
        {"n", m.index.n_subjects},
        {"events", m.index.n_events},
        {"spline", to_json(m.spec)},
        {"standardization", transform},
        {"theta", matrix_to_json(m.theta_original())},
        {"fit", to_json(m.fit, trace_limit)},
    };
    if (tests) doc["tests"] = to_json(*tests);
    return doc;
}

/// Long format: one row per (grid time, covariate).
inline std::string curves_csv(const inference::CurveEstimate& c, const std::vector<std::string>& names, const json& config)
{
    std::ostringstream out;
    out << csv_preamble(config) << "time,covariate,estimate,se,lower,upper\n";
    for (size_t g = 0; g < c.grid.size(); ++g) {
        const auto gi = static_cast<Eigen::Index>(g);
        for (size_t p = 0; p < c.curves.size(); ++p) {
            const auto& cur = c.curves[p];
            out << format_double(c.grid[g]) << ',' << names[p] << ',' << format_double(cur.estimate[gi]) << ','
                << format_double(cur.se[gi]) << ',' << format_double(cur.lower[gi]) << ','
                << format_double(cur.upper[gi]) << '\n';
        }
    }
    return out.str();
}

inline std::string tests_csv(const inference::TestReport& r, const json& config)
{
    std::ostringstream out;
    out << csv_preamble(config) << "covariate,statistic,df,p_value,information,converged\n";
    for (const auto& e : r.entries) {
        out << e.name << ',' << format_double(e.statistic) << ',' << e.df << ',' << format_double(e.p_value) << ','
            << inference::to_string(e.information) << ',' << (r.converged ? 1 : 0) << '\n';
    }
    return out.str();
}

inline std::string dataset_csv(const survdata::SurvivalDataset& ds)
{
    std::ostringstream out;
    survdata::write_csv(ds, out);
    return out.str();
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace io
} // namespace tvcox
