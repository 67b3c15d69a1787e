#pragma once

/*
 * Counting-process survival data.
 *
 * Every row is an interval (t_start, t_stop] over which a subject's
 * covariates are constant, with status = 1 when the interval ends in an
 * event. Time-fixed data is the special case of one row per subject with
 * t_start = 0.
 */

#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "errors.hpp"

namespace tdcox {

struct SurvRecord {
    std::string subject_id;
    double t_start = 0.0;
    double t_stop = 0.0;
    int status = 0;
    Eigen::VectorXd covariates;
};

/**
 * Column-major storage of a set of SurvRecords.
 *
 * Rows keep their input order; `x` is n_rows x p.
 */
class Dataset {
public:
    Dataset() = default;

    Dataset(std::vector<std::string> subject_ids,
            Eigen::VectorXd t_start,
            Eigen::VectorXd t_stop,
            Eigen::VectorXi status,
            Eigen::MatrixXd x,
            std::vector<std::string> column_names)
        : ids_(std::move(subject_ids))
        , start_(std::move(t_start))
        , stop_(std::move(t_stop))
        , status_(std::move(status))
        , x_(std::move(x))
        , names_(std::move(column_names))
    {
        validate();
    }

    static Dataset from_records(const std::vector<SurvRecord>& recs,
                                std::vector<std::string> column_names)
    {
        const auto n = static_cast<Eigen::Index>(recs.size());
        const auto p = static_cast<Eigen::Index>(column_names.size());
        std::vector<std::string> ids(recs.size());
        Eigen::VectorXd start(n), stop(n);
        Eigen::VectorXi status(n);
        Eigen::MatrixXd x(n, p);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& r = recs[static_cast<std::size_t>(i)];
            detail::require(r.covariates.size() == p,
                            "record " + std::to_string(i + 1) + " has " +
                                std::to_string(r.covariates.size()) +
                                " covariates, expected " + std::to_string(p));
            ids[static_cast<std::size_t>(i)] = r.subject_id;
            start(i) = r.t_start;
            stop(i) = r.t_stop;
            status(i) = r.status;
            x.row(i) = r.covariates.transpose();
        }
        return Dataset(std::move(ids), std::move(start), std::move(stop),
                       std::move(status), std::move(x), std::move(column_names));
    }

    SurvRecord record(Eigen::Index i) const
    {
        return {ids_[static_cast<std::size_t>(i)], start_(i), stop_(i), status_(i),
                x_.row(i).transpose()};
    }

    Eigen::Index n_rows() const { return start_.size(); }
    Eigen::Index n_cols() const { return x_.cols(); }
    Eigen::Index n_events() const { return status_.sum(); }

    std::size_t n_subjects() const
    {
        std::vector<std::string> ids = ids_;
        std::sort(ids.begin(), ids.end());
        return static_cast<std::size_t>(std::unique(ids.begin(), ids.end()) - ids.begin());
    }

    const std::vector<std::string>& subject_ids() const { return ids_; }
    const Eigen::VectorXd& t_start() const { return start_; }
    const Eigen::VectorXd& t_stop() const { return stop_; }
    const Eigen::VectorXi& status() const { return status_; }
    const Eigen::MatrixXd& x() const { return x_; }
    const std::vector<std::string>& column_names() const { return names_; }

    /// Rows in the given order (indices may repeat only if ids stay consistent).
    Dataset subset(const std::vector<Eigen::Index>& rows) const
    {
        const auto m = static_cast<Eigen::Index>(rows.size());
        std::vector<std::string> ids(rows.size());
        Eigen::VectorXd start(m), stop(m);
        Eigen::VectorXi status(m);
        Eigen::MatrixXd x(m, x_.cols());
        for (Eigen::Index k = 0; k < m; ++k) {
            const auto i = rows[static_cast<std::size_t>(k)];
            ids[static_cast<std::size_t>(k)] = ids_[static_cast<std::size_t>(i)];
            start(k) = start_(i);
            stop(k) = stop_(i);
            status(k) = status_(i);
            x.row(k) = x_.row(i);
        }
        return Dataset(std::move(ids), std::move(start), std::move(stop),
                       std::move(status), std::move(x), names_);
    }

    /// Same rows with a replacement design matrix.
    Dataset with_covariates(Eigen::MatrixXd x, std::vector<std::string> names) const
    {
        return Dataset(ids_, start_, stop_, status_, std::move(x), std::move(names));
    }

private:
    void validate() const
    {
        const auto n = start_.size();
        detail::require(stop_.size() == n && status_.size() == n && x_.rows() == n &&
                            static_cast<Eigen::Index>(ids_.size()) == n,
                        "dataset columns have inconsistent lengths");
        detail::require(static_cast<Eigen::Index>(names_.size()) == x_.cols(),
                        "column_names length does not match covariate count");
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto row = "row " + std::to_string(i + 1);
            detail::require(std::isfinite(start_(i)) && std::isfinite(stop_(i)),
                            row + ": non-finite time");
            detail::require(start_(i) < stop_(i), row + ": t_start (" +
                                                      std::to_string(start_(i)) +
                                                      ") must be < t_stop (" +
                                                      std::to_string(stop_(i)) + ")");
            detail::require(status_(i) == 0 || status_(i) == 1,
                            row + ": status must be 0 or 1");
            detail::require(x_.row(i).allFinite(), row + ": non-finite covariate");
        }

        // per-subject: no overlapping intervals, at most one event
        std::unordered_map<std::string, std::vector<Eigen::Index>> by_subject;
        for (Eigen::Index i = 0; i < n; ++i) by_subject[ids_[static_cast<std::size_t>(i)]].push_back(i);
        for (auto& [id, rows] : by_subject) {
            if (rows.size() < 2) continue;
            std::sort(rows.begin(), rows.end(), [&](auto a, auto b) {
                return start_(a) < start_(b);
            });
            int events = 0;
            for (std::size_t k = 0; k < rows.size(); ++k) {
                events += status_(rows[k]);
                if (k > 0) {
                    detail::require(start_(rows[k]) >= stop_(rows[k - 1]),
                                    "subject " + id + ": rows " +
                                        std::to_string(rows[k - 1] + 1) + " and " +
                                        std::to_string(rows[k] + 1) + " overlap");
                }
            }
            detail::require(events <= 1, "subject " + id + " has more than one event row");
        }
    }

    std::vector<std::string> ids_;
    Eigen::VectorXd start_;
    Eigen::VectorXd stop_;
    Eigen::VectorXi status_;
    Eigen::MatrixXd x_;
    std::vector<std::string> names_;
};

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Which header columns carry the survival roles. An empty id or start name
/// (or one absent from the header) means "not present".
struct CsvSchema {
    std::string id = "id";
    std::string start = "tstart";
    std::string stop = "tstop";
    std::string status = "status";
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line)
{
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_double(std::string_view s)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    return out + "\"";
}

} // namespace detail

/**
 * Read a header-first CSV into a Dataset. Columns not named by the schema
 * become covariates in header order. A missing start column means t_start = 0
 * for every row; a missing id column means each row is its own subject.
 * Errors name the offending line (the header is line 1).
 */
inline Dataset parse_csv(std::istream& in, const CsvSchema& schema = {})
{
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty CSV input");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    auto header = detail::split_csv_line(line);
    for (auto& h : header) h = std::string(detail::trim(h));

    auto find = [&](const std::string& name) -> std::optional<std::size_t> {
        if (name.empty()) return std::nullopt;
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto id_col = find(schema.id);
    const auto start_col = find(schema.start);
    const auto stop_col = find(schema.stop);
    const auto status_col = find(schema.status);
    if (!stop_col) throw ValidationError("missing required column '" + schema.stop + "'");
    if (!status_col) throw ValidationError("missing required column '" + schema.status + "'");

    std::vector<std::size_t> cov_cols;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == stop_col || c == status_col || (id_col && c == *id_col) ||
            (start_col && c == *start_col))
            continue;
        cov_cols.push_back(c);
        names.push_back(header[c]);
    }

    std::vector<std::string> ids;
    std::vector<double> start, stop, cov;
    std::vector<int> status;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto where = "line " + std::to_string(line_no);
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw ValidationError(where + ": expected " + std::to_string(header.size()) +
                                  " fields, found " + std::to_string(fields.size()));
        auto number = [&](std::size_t c) {
            auto v = detail::parse_double(fields[c]);
            if (!v || !std::isfinite(*v))
                throw ValidationError(where + ": non-numeric value '" + fields[c] +
                                      "' in column '" + header[c] + "'");
            return *v;
        };
        const double t0 = start_col ? number(*start_col) : 0.0;
        const double t1 = number(*stop_col);
        const double st = number(*status_col);
        if (!(t0 < t1))
            throw ValidationError(where + ": t_start (" + detail::format_double(t0) +
                                  ") must be < t_stop (" + detail::format_double(t1) + ")");
        if (st != 0.0 && st != 1.0)
            throw ValidationError(where + ": status must be 0 or 1, found '" +
                                  fields[*status_col] + "'");
        ids.push_back(id_col ? std::string(detail::trim(fields[*id_col]))
                             : std::to_string(ids.size() + 1));
        start.push_back(t0);
        stop.push_back(t1);
        status.push_back(static_cast<int>(st));
        for (auto c : cov_cols) cov.push_back(number(c));
    }

    const auto n = static_cast<Eigen::Index>(start.size());
    const auto p = static_cast<Eigen::Index>(cov_cols.size());
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            x(i, j) = cov[static_cast<std::size_t>(i * p + j)];
    return Dataset(std::move(ids),
                   Eigen::Map<Eigen::VectorXd>(start.data(), n),
                   Eigen::Map<Eigen::VectorXd>(stop.data(), n),
                   Eigen::Map<Eigen::VectorXi>(status.data(), n),
                   std::move(x), std::move(names));
}

/// Inverse of parse_csv with the default schema. Numbers use the shortest
/// representation that reads back to the same double.
inline void write_csv(const Dataset& d, std::ostream& out)
{
    out << "id,tstart,tstop,status";
    for (const auto& name : d.column_names()) out << ',' << detail::csv_field(name);
    out << '\n';
    for (Eigen::Index i = 0; i < d.n_rows(); ++i) {
        out << detail::csv_field(d.subject_ids()[static_cast<std::size_t>(i)]) << ','
            << detail::format_double(d.t_start()(i)) << ','
            << detail::format_double(d.t_stop()(i)) << ',' << d.status()(i);
        for (Eigen::Index j = 0; j < d.n_cols(); ++j)
            out << ',' << detail::format_double(d.x()(i, j));
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

/**
 * Column centering and scaling (population SD, denominator n_rows).
 * Vectors are indexed by the original column; dropped columns have sd 0.
 */
struct ScalingInfo {
    Eigen::VectorXd means;
    Eigen::VectorXd sds;
    std::vector<Eigen::Index> dropped;
    std::vector<std::string> column_names; // original columns; may be empty

    Eigen::Index original_cols() const { return means.size(); }
    Eigen::Index retained_cols() const
    {
        return means.size() - static_cast<Eigen::Index>(dropped.size());
    }

    std::vector<Eigen::Index> retained() const
    {
        std::vector<Eigen::Index> keep;
        std::size_t d = 0;
        for (Eigen::Index j = 0; j < means.size(); ++j) {
            if (d < dropped.size() && dropped[d] == j) {
                ++d;
                continue;
            }
            keep.push_back(j);
        }
        return keep;
    }

    /// Raw n x original_cols -> standardized n x retained_cols.
    Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const
    {
        detail::require(raw.cols() == original_cols(),
                        "covariate matrix has " + std::to_string(raw.cols()) +
                            " columns, scaling expects " + std::to_string(original_cols()));
        const auto keep = retained();
        Eigen::MatrixXd out(raw.rows(), static_cast<Eigen::Index>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k) {
            const auto j = keep[k];
            out.col(static_cast<Eigen::Index>(k)) =
                (raw.col(j).array() - means(j)) / sds(j);
        }
        return out;
    }

    /// Standardized retained columns -> raw values (dropped columns restored to their mean).
    Eigen::MatrixXd invert(const Eigen::MatrixXd& scaled) const
    {
        const auto keep = retained();
        detail::require(scaled.cols() == static_cast<Eigen::Index>(keep.size()),
                        "scaled matrix column count mismatch");
        Eigen::MatrixXd out(scaled.rows(), original_cols());
        for (Eigen::Index j = 0; j < original_cols(); ++j) out.col(j).setConstant(means(j));
        for (std::size_t k = 0; k < keep.size(); ++k) {
            const auto j = keep[k];
            out.col(j) = scaled.col(static_cast<Eigen::Index>(k)).array() * sds(j) + means(j);
        }
        return out;
    }
};

/// Returns the dataset restricted to non-constant columns, each with mean 0 and
/// population SD 1, together with the transform used.
inline std::pair<Dataset, ScalingInfo> standardize(const Dataset& d)
{
    const auto n = d.n_rows();
    const auto p = d.n_cols();
    ScalingInfo s;
    s.column_names = d.column_names();
    s.means = Eigen::VectorXd::Zero(p);
    s.sds = Eigen::VectorXd::Zero(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto col = d.x().col(j);
        const double mean = n > 0 ? col.mean() : 0.0;
        const double var = n > 0 ? (col.array() - mean).square().sum() / static_cast<double>(n) : 0.0;
        const double sd = std::sqrt(var);
        s.means(j) = mean;
        // constant columns: the centered values are rounding noise only
        if (!(sd > 1e-13 * std::max(1.0, std::abs(mean)))) {
            s.dropped.push_back(j);
            s.sds(j) = 0.0;
        } else {
            s.sds(j) = sd;
        }
    }
    std::vector<std::string> names;
    for (auto j : s.retained()) names.push_back(d.column_names()[static_cast<std::size_t>(j)]);
    return {d.with_covariates(s.apply(d.x()), std::move(names)), std::move(s)};
}

/// Coefficients fitted on standardized columns, mapped back to the raw scale.
/// The linear predictor changes only by the constant sum_j beta_j * mean_j / sd_j.
inline Eigen::VectorXd unstandardize_coefs(const Eigen::VectorXd& beta_std, const ScalingInfo& s)
{
    const auto keep = s.retained();
    detail::require(beta_std.size() == static_cast<Eigen::Index>(keep.size()),
                    "coefficient vector has length " + std::to_string(beta_std.size()) +
                        ", expected " + std::to_string(keep.size()));
    Eigen::VectorXd out = Eigen::VectorXd::Zero(s.original_cols());
    for (std::size_t k = 0; k < keep.size(); ++k)
        out(keep[k]) = beta_std(static_cast<Eigen::Index>(k)) / s.sds(keep[k]);
    return out;
}

// ---------------------------------------------------------------------------
// Risk sets
// ---------------------------------------------------------------------------

/**
 * Distinct event times with their death and risk sets, stored as compressed
 * row lists. Row j is at risk at t_i iff t_start_j < t_i <= t_stop_j.
 */
struct RiskIndex {
    std::vector<double> event_times;
    std::vector<std::size_t> death_offsets; // size k + 1
    std::vector<Eigen::Index> death_rows;
    std::vector<std::size_t> risk_offsets; // size k + 1
    std::vector<Eigen::Index> risk_rows;   // ascending within each set
    Eigen::Index n_rows = 0;

    std::size_t n_event_times() const { return event_times.size(); }

    int tie_count(std::size_t i) const
    {
        return static_cast<int>(death_offsets[i + 1] - death_offsets[i]);
    }

    std::span<const Eigen::Index> deaths(std::size_t i) const
    {
        return {death_rows.data() + death_offsets[i], death_offsets[i + 1] - death_offsets[i]};
    }

    std::span<const Eigen::Index> at_risk(std::size_t i) const
    {
        return {risk_rows.data() + risk_offsets[i], risk_offsets[i + 1] - risk_offsets[i]};
    }
};

inline RiskIndex build_risk_index(const Eigen::VectorXd& t_start,
                                  const Eigen::VectorXd& t_stop,
                                  const Eigen::VectorXi& status)
{
    const auto n = t_stop.size();
    RiskIndex idx;
    idx.n_rows = n;
    for (Eigen::Index j = 0; j < n; ++j)
        if (status(j) == 1) idx.event_times.push_back(t_stop(j));
    if (idx.event_times.empty()) throw ValidationError("no events present");
    std::sort(idx.event_times.begin(), idx.event_times.end());
    idx.event_times.erase(std::unique(idx.event_times.begin(), idx.event_times.end()),
                          idx.event_times.end());
    const auto k = idx.event_times.size();
    const auto& et = idx.event_times;

    auto position = [&](double t) {
        return static_cast<std::size_t>(std::lower_bound(et.begin(), et.end(), t) - et.begin());
    };

    // event indices i with t_start < t_i <= t_stop form the range [lo, hi)
    std::vector<std::size_t> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
    std::vector<std::size_t> risk_count(k + 1, 0), death_count(k + 1, 0);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        lo[uj] = static_cast<std::size_t>(std::upper_bound(et.begin(), et.end(), t_start(j)) - et.begin());
        hi[uj] = static_cast<std::size_t>(std::upper_bound(et.begin(), et.end(), t_stop(j)) - et.begin());
        for (auto i = lo[uj]; i < hi[uj]; ++i) ++risk_count[i + 1];
        if (status(j) == 1) ++death_count[position(t_stop(j)) + 1];
    }
    std::partial_sum(risk_count.begin(), risk_count.end(), risk_count.begin());
    std::partial_sum(death_count.begin(), death_count.end(), death_count.begin());
    idx.risk_offsets = risk_count;
    idx.death_offsets = death_count;
    idx.risk_rows.resize(risk_count[k]);
    idx.death_rows.resize(death_count[k]);
    auto rfill = risk_count;
    auto dfill = death_count;
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        for (auto i = lo[uj]; i < hi[uj]; ++i) idx.risk_rows[rfill[i]++] = j;
        if (status(j) == 1) {
            const auto i = position(t_stop(j));
            idx.death_rows[dfill[i]++] = j;
        }
    }
    return idx;
}

inline RiskIndex build_risk_index(const Dataset& d)
{
    return build_risk_index(d.t_start(), d.t_stop(), d.status());
}

} // namespace tdcox
