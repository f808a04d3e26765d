#pragma once
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>
#include <Eigen/Dense>
#include <tvcox/error.hpp>

namespace tvcox {
namespace survdata {

/// Stratified right-censored survival data. Rows are subjects.
struct SurvivalDataset
{
    std::vector<double> time;
    std::vector<int> status;
    std::vector<int> stratum;                 // 0-based ids into stratum_labels
    std::vector<std::string> stratum_labels;
    Eigen::MatrixXd covariates;               // n x P
    std::vector<std::string> covariate_names;

    size_t n() const { return time.size(); }
    int P() const { return static_cast<int>(covariates.cols()); }
    int J() const { return static_cast<int>(stratum_labels.size()); }

    size_t n_events() const
    {
        return static_cast<size_t>(std::count(status.begin(), status.end(), 1));
    }

    void validate() const
    {
        const size_t rows = n();
        if (status.size() != rows || stratum.size() != rows ||
            static_cast<size_t>(covariates.rows()) != rows) {
            throw Error(ErrorCode::schema, "dataset columns have inconsistent lengths");
        }
        if (covariate_names.size() != static_cast<size_t>(covariates.cols())) {
            throw Error(ErrorCode::schema, "covariate name count does not match covariate columns");
        }
        for (size_t i = 0; i < rows; ++i) {
            if (!std::isfinite(time[i]) || time[i] < 0.0) {
                throw Error(ErrorCode::domain, "row " + std::to_string(i + 1) + ": time must be finite and >= 0");
            }
            if (status[i] != 0 && status[i] != 1) {
                throw Error(ErrorCode::domain, "row " + std::to_string(i + 1) + ": status must be 0 or 1");
            }
            if (stratum[i] < 0 || stratum[i] >= J()) {
                throw Error(ErrorCode::domain, "row " + std::to_string(i + 1) + ": stratum id out of range");
            }
        }
        if (!covariates.allFinite()) {
            throw Error(ErrorCode::domain, "covariate matrix contains non-finite values");
        }
        if (n_events() == 0) {
            throw Error(ErrorCode::domain, "dataset has no events");
        }
    }

    /// Strata that contribute nothing to the partial likelihood.
    std::vector<int> strata_without_events() const
    {
        std::vector<char> has(stratum_labels.size(), 0);
        for (size_t i = 0; i < n(); ++i) {
            if (status[i] == 1) has[stratum[i]] = 1;
        }
        std::vector<int> out;
        for (size_t j = 0; j < has.size(); ++j) {
            if (!has[j]) out.push_back(static_cast<int>(j));
        }
        return out;
    }

    SurvivalDataset select_rows(std::span<const size_t> rows) const
    {
        SurvivalDataset out;
        out.stratum_labels = stratum_labels;
        out.covariate_names = covariate_names;
        out.covariates.resize(static_cast<Eigen::Index>(rows.size()), covariates.cols());
        for (size_t r = 0; r < rows.size(); ++r) {
            const size_t i = rows[r];
            out.time.push_back(time[i]);
            out.status.push_back(status[i]);
            out.stratum.push_back(stratum[i]);
            out.covariates.row(static_cast<Eigen::Index>(r)) = covariates.row(static_cast<Eigen::Index>(i));
        }
        return out;
    }
};

/// Builds a dataset from raw stratum tokens; labels keep first-appearance order.
inline SurvivalDataset make_dataset(
    std::vector<double> time,
    std::vector<int> status,
    const std::vector<std::string>& stratum_tokens,
    Eigen::MatrixXd covariates,
    std::vector<std::string> covariate_names
)
{
    SurvivalDataset ds;
    ds.time = std::move(time);
    ds.status = std::move(status);
    std::map<std::string, int> ids;
    for (const auto& tok : stratum_tokens) {
        auto [it, inserted] = ids.emplace(tok, static_cast<int>(ds.stratum_labels.size()));
        if (inserted) ds.stratum_labels.push_back(tok);
        ds.stratum.push_back(it->second);
    }
    ds.covariates = std::move(covariates);
    ds.covariate_names = std::move(covariate_names);
    if (ds.covariate_names.empty()) {
        for (Eigen::Index p = 0; p < ds.covariates.cols(); ++p) {
            ds.covariate_names.push_back("x" + std::to_string(p + 1));
        }
    }
    ds.validate();
    return ds;
}

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        const size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

inline bool parse_double(std::string_view s, double& out)
{
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace detail

/// Reads the `time,status,stratum,<covariates...>` schema. Lines starting
/// with '#' before the header are ignored.
inline SurvivalDataset read_csv(std::istream& in, const std::string& source = "<stream>")
{
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        for (auto tok : detail::split(t)) header.emplace_back(tok);
        break;
    }
    if (header.empty()) {
        throw Error(ErrorCode::schema, source + ": missing header row");
    }
    auto find_col = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw Error(ErrorCode::schema, source + ": missing mandatory column '" + name + "'");
        }
        return static_cast<size_t>(it - header.begin());
    };
    const size_t c_time = find_col("time");
    const size_t c_status = find_col("status");
    const size_t c_stratum = find_col("stratum");
    std::vector<size_t> cov_cols;
    std::vector<std::string> names;
    for (size_t c = 0; c < header.size(); ++c) {
        if (c != c_time && c != c_status && c != c_stratum) {
            cov_cols.push_back(c);
            names.push_back(header[c]);
        }
    }

    std::vector<double> time;
    std::vector<int> status;
    std::vector<std::string> strata;
    std::vector<double> cov_flat;
    size_t row = 0;
    while (std::getline(in, line)) {
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        ++row;
        const auto cells = detail::split(t);
        if (cells.size() != header.size()) {
            throw Error(ErrorCode::parse, source + ": row " + std::to_string(row) + " has " +
                std::to_string(cells.size()) + " cells, expected " + std::to_string(header.size()));
        }
        auto num = [&](size_t c) {
            double v;
            if (!detail::parse_double(cells[c], v)) {
                throw Error(ErrorCode::parse, source + ": row " + std::to_string(row) + ", column '" +
                    header[c] + "': cannot parse '" + std::string(cells[c]) + "' as a number");
            }
            return v;
        };
        const double tv = num(c_time);
        if (!std::isfinite(tv) || tv < 0.0) {
            throw Error(ErrorCode::domain, source + ": row " + std::to_string(row) + ": time must be finite and >= 0");
        }
        const double sv = num(c_status);
        if (sv != 0.0 && sv != 1.0) {
            throw Error(ErrorCode::domain, source + ": row " + std::to_string(row) +
                ": status must be 0 or 1, got '" + std::string(cells[c_status]) + "'");
        }
        if (cells[c_stratum].empty()) {
            throw Error(ErrorCode::parse, source + ": row " + std::to_string(row) + ", column 'stratum': blank cell");
        }
        time.push_back(tv);
        status.push_back(static_cast<int>(sv));
        strata.emplace_back(cells[c_stratum]);
        for (size_t c : cov_cols) {
            const double v = num(c);
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::domain, source + ": row " + std::to_string(row) + ", column '" +
                    header[c] + "': non-finite covariate");
            }
            cov_flat.push_back(v);
        }
    }
    const auto n = static_cast<Eigen::Index>(time.size());
    const auto P = static_cast<Eigen::Index>(cov_cols.size());
    Eigen::MatrixXd X(n, P);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index p = 0; p < P; ++p) X(i, p) = cov_flat[static_cast<size_t>(i * P + p)];
    }
    return make_dataset(std::move(time), std::move(status), strata, std::move(X), std::move(names));
}

inline SurvivalDataset load_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "'");
    return read_csv(in, path);
}

inline void write_csv(const SurvivalDataset& ds, std::ostream& out)
{
    out << "time,status,stratum";
    for (const auto& name : ds.covariate_names) out << ',' << name;
    out << '\n';
    for (size_t i = 0; i < ds.n(); ++i) {
        out << detail::format_double(ds.time[i]) << ',' << ds.status[i] << ','
            << ds.stratum_labels[ds.stratum[i]];
        for (Eigen::Index p = 0; p < ds.covariates.cols(); ++p) {
            out << ',' << detail::format_double(ds.covariates(static_cast<Eigen::Index>(i), p));
        }
        out << '\n';
    }
}

/// Per-covariate affine map x_std = (x - location) / scale.
struct Standardization
{
    Eigen::VectorXd location;
    Eigen::VectorXd scale;

    static Standardization identity(int P)
    {
        return {Eigen::VectorXd::Zero(P), Eigen::VectorXd::Ones(P)};
    }
};

/// Centers and scales covariates to unit sample variance (n-1 denominator).
inline std::pair<SurvivalDataset, Standardization> standardize(const SurvivalDataset& ds)
{
    const auto n = static_cast<Eigen::Index>(ds.n());
    if (n < 2) {
        throw Error(ErrorCode::degenerate_covariate, "standardization needs at least two subjects");
    }
    Standardization tr;
    tr.location = ds.covariates.colwise().mean().transpose();
    tr.scale.resize(ds.covariates.cols());
    SurvivalDataset out = ds;
    for (Eigen::Index p = 0; p < ds.covariates.cols(); ++p) {
        const auto centered = (ds.covariates.col(p).array() - tr.location[p]).eval();
        const double sd = std::sqrt(centered.square().sum() / static_cast<double>(n - 1));
        if (!(sd > 0.0) || sd <= 1e-14 * (1.0 + std::abs(tr.location[p]))) {
            throw Error(ErrorCode::degenerate_covariate,
                "covariate '" + ds.covariate_names[static_cast<size_t>(p)] + "' has zero variance");
        }
        tr.scale[p] = sd;
        out.covariates.col(p) = centered / sd;
    }
    return {std::move(out), std::move(tr)};
}

/// Subjects tied at one event time within a stratum. The risk set is the
/// first `risk_size` subjects of the stratum's descending-time ordering.
struct EventGroup
{
    double time;
    int time_index;                    // into RiskIndex::event_times
    Eigen::Index risk_size;
    std::vector<Eigen::Index> events;  // sorted positions of the tied events
    Eigen::VectorXd event_x_sum;       // sum of covariates over the tied events
};

struct StratumBlock
{
    int stratum;
    std::vector<size_t> rows;          // original row indices, descending time
    std::vector<double> time;
    std::vector<int> status;
    Eigen::MatrixXd x;                 // covariates in sorted order
    Eigen::MatrixXd x_sq;
    std::vector<EventGroup> groups;    // descending time
};

struct RiskIndex
{
    int P = 0;
    std::vector<double> event_times;   // distinct event times over all strata, ascending
    std::vector<StratumBlock> strata;  // strata with at least one event
    size_t n_rows = 0;                 // size of the original row-id space
    size_t n_subjects = 0;
    size_t n_events = 0;

    /// Restricts to rows with keep[row] != 0, preserving orderings and the
    /// global event-time list (so basis rows can be reused).
    RiskIndex subset(std::span<const unsigned char> keep) const;
};

namespace detail {

inline StratumBlock make_block(
    int stratum,
    std::vector<size_t> rows,
    std::span<const double> time,
    std::span<const int> status,
    const Eigen::MatrixXd& X,
    const std::vector<double>& event_times
)
{
    StratumBlock b;
    b.stratum = stratum;
    const auto m = static_cast<Eigen::Index>(rows.size());
    b.x.resize(m, X.cols());
    for (Eigen::Index r = 0; r < m; ++r) {
        const size_t i = rows[static_cast<size_t>(r)];
        b.time.push_back(time[i]);
        b.status.push_back(status[i]);
        b.x.row(r) = X.row(static_cast<Eigen::Index>(i));
    }
    b.x_sq = b.x.array().square().matrix();
    b.rows = std::move(rows);

    // walk distinct times; a tie block [start, end) shares one risk prefix of length end
    Eigen::Index start = 0;
    while (start < m) {
        Eigen::Index end = start + 1;
        while (end < m && b.time[static_cast<size_t>(end)] == b.time[static_cast<size_t>(start)]) ++end;
        EventGroup g;
        g.time = b.time[static_cast<size_t>(start)];
        g.risk_size = end;
        g.event_x_sum = Eigen::VectorXd::Zero(X.cols());
        for (Eigen::Index r = start; r < end; ++r) {
            if (b.status[static_cast<size_t>(r)] == 1) {
                g.events.push_back(r);
                g.event_x_sum += b.x.row(r).transpose();
            }
        }
        if (!g.events.empty()) {
            const auto it = std::lower_bound(event_times.begin(), event_times.end(), g.time);
            g.time_index = static_cast<int>(it - event_times.begin());
            b.groups.push_back(std::move(g));
        }
        start = end;
    }
    return b;
}

} // namespace detail

/// Per-stratum descending-time ordering with ties broken by row index.
inline RiskIndex build_risk_index(const SurvivalDataset& ds)
{
    RiskIndex idx;
    idx.P = ds.P();
    idx.n_rows = ds.n();
    idx.n_subjects = ds.n();
    for (size_t i = 0; i < ds.n(); ++i) {
        if (ds.status[i] == 1) {
            idx.event_times.push_back(ds.time[i]);
            ++idx.n_events;
        }
    }
    std::sort(idx.event_times.begin(), idx.event_times.end());
    idx.event_times.erase(std::unique(idx.event_times.begin(), idx.event_times.end()), idx.event_times.end());

    std::vector<std::vector<size_t>> by_stratum(static_cast<size_t>(ds.J()));
    for (size_t i = 0; i < ds.n(); ++i) by_stratum[static_cast<size_t>(ds.stratum[i])].push_back(i);
    for (int j = 0; j < ds.J(); ++j) {
        auto rows = std::move(by_stratum[static_cast<size_t>(j)]);
        std::sort(rows.begin(), rows.end(), [&](size_t a, size_t b) {
            if (ds.time[a] != ds.time[b]) return ds.time[a] > ds.time[b];
            return a < b;
        });
        auto block = detail::make_block(j, std::move(rows), ds.time, ds.status, ds.covariates, idx.event_times);
        if (!block.groups.empty()) idx.strata.push_back(std::move(block));
    }
    return idx;
}

inline RiskIndex RiskIndex::subset(std::span<const unsigned char> keep) const
{
    RiskIndex out;
    out.P = P;
    out.n_rows = n_rows;
    out.event_times = event_times;
    for (const auto& b : strata) {
        std::vector<size_t> rows;
        std::vector<size_t> local;
        for (size_t r = 0; r < b.rows.size(); ++r) {
            if (keep[b.rows[r]]) {
                rows.push_back(b.rows[r]);
                local.push_back(r);
            }
        }
        if (rows.empty()) continue;
        // make_block indexes time/status/X by the row ids it is given, so
        // hand it positions into the already-sorted block
        Eigen::MatrixXd x(static_cast<Eigen::Index>(local.size()), b.x.cols());
        std::vector<double> t;
        std::vector<int> s;
        std::vector<size_t> pos(local.size());
        for (size_t r = 0; r < local.size(); ++r) {
            x.row(static_cast<Eigen::Index>(r)) = b.x.row(static_cast<Eigen::Index>(local[r]));
            t.push_back(b.time[local[r]]);
            s.push_back(b.status[local[r]]);
            pos[r] = r;
        }
        auto block = detail::make_block(b.stratum, pos, t, s, x, event_times);
        block.rows = std::move(rows);
        out.n_subjects += block.rows.size();
        for (const auto& g : block.groups) out.n_events += g.events.size();
        if (!block.groups.empty()) out.strata.push_back(std::move(block));
    }
    return out;
}

} // namespace survdata
} // namespace tvcox
