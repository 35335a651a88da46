#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rescue/landmark_filter.hpp"

namespace rescue {

/// Euclidean position error in meters (reported as `position_error_m`).
inline double localization_error(const Vec3& estimate, const Vec3& truth) { return (estimate - truth).norm(); }

namespace detail {

// Continued fraction for the incomplete beta function, modified Lentz.
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw NumericalError("incomplete beta continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw PreconditionError("incomplete beta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// P(T <= t) for Student's t with `df` degrees of freedom.
inline double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw PreconditionError("degrees of freedom must be positive");
    const double x = df / (df + t * t);
    const double tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

struct EstimatorComparison {
    double mean_a = 0.0;
    double mean_b = 0.0;
    double t_statistic = 0.0;
    double degrees_of_freedom = 0.0;
    double p_value = 0.0;  // one-sided, H1: mean(a) < mean(b)
};

inline double sample_mean(std::span<const double> xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
}

inline double sample_variance(std::span<const double> xs) {
    const double m = sample_mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / double(xs.size() - 1);
}

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of freedom.
inline EstimatorComparison welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw PreconditionError("Welch test needs at least two samples per group");
    const double na = double(a.size());
    const double nb = double(b.size());
    const double va = sample_variance(a) / na;
    const double vb = sample_variance(b) / nb;
    if (!(va + vb > 0.0)) throw NumericalError("Welch test undefined: both samples have zero variance");
    EstimatorComparison r;
    r.mean_a = sample_mean(a);
    r.mean_b = sample_mean(b);
    r.t_statistic = (r.mean_a - r.mean_b) / std::sqrt(va + vb);
    r.degrees_of_freedom = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    r.p_value = std::clamp(student_t_cdf(r.t_statistic, r.degrees_of_freedom), 0.0, 1.0);
    return r;
}

/// Per-tag position errors from the tag-localization comparison table.
struct ErrorTable {
    std::vector<double> ckf;
    std::vector<double> last;
};

inline ErrorTable table1_world() {
    return {{0.21, 0.17, 0.10, 0.32, 0.34, 0.14, 0.10, 0.10, 0.05, 0.07, 0.19, 0.06},
            {0.47, 0.34, 0.15, 0.46, 0.33, 0.18, 0.03, 0.24, 0.24, 0.26, 0.46, 0.04}};
}

inline ErrorTable table1_house() {
    return {{0.32, 0.34, 0.20, 0.49, 0.31, 0.11, 0.22, 0.34, 0.28, 0.28, 0.37, 0.33},
            {0.31, 0.36, 0.34, 0.26, 0.11, 0.32, 0.27, 0.37, 0.42, 1.2, 0.18, 0.23}};
}

// ---------------------------------------------------------------------------
// Run summaries and CSV emission

struct TagErrorRecord {
    int tag_id = 0;
    double ckf_error = 0.0;
    double last_error = 0.0;
};

struct RunSummary {
    std::string explorer;
    std::string world;
    std::uint64_t seed = 0;
    std::string status;
    double exploration_time = 0.0;
    double total_time = 0.0;
    int tags_found = 0;
    int tags_total = 0;
    std::vector<TagErrorRecord> tag_errors;  // detected tags only, by id
};

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(const std::string& s) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
    return v;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return std::size_t(it - header.begin());
    }

    /// Numeric values of a column, skipping blanks and `mean` rows.
    std::vector<double> numeric_column(const std::string& name) const {
        const auto col = column(name);
        if (!col) throw ParseError("CSV has no column '" + name + "'", 0);
        const auto seed_col = column("seed");
        std::vector<double> out;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (seed_col && rows[r][*seed_col] == "mean") continue;
            const std::string& cell = rows[r][*col];
            if (cell.empty()) continue;
            const auto v = parse_double(cell);
            if (!v) throw ParseError("non-numeric value '" + cell + "' in column '" + name + "'", int(r) + 2);
            out.push_back(*v);
        }
        return out;
    }
};

inline void write_csv(std::ostream& os, const CsvTable& t) {
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
        os << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
}

inline CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (raw.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(raw);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (raw.back() == ',') cells.emplace_back();
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            throw ParseError("expected " + std::to_string(t.header.size()) + " fields, got " + std::to_string(cells.size()), line_no);
        t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) throw ParseError("empty CSV", 0);
    return t;
}

namespace detail {

inline std::optional<double> mean_of(const std::vector<TagErrorRecord>& errs, bool ckf) {
    if (errs.empty()) return std::nullopt;
    double s = 0.0;
    for (const auto& e : errs) s += ckf ? e.ckf_error : e.last_error;
    return s / double(errs.size());
}

}  // namespace detail

/// One row per run plus one `mean` row per explorer. Per-tag columns cover
/// the union of detected tag ids; missing entries stay blank.
inline CsvTable aggregate_report(const std::vector<RunSummary>& runs) {
    if (runs.empty()) throw PreconditionError("no runs to aggregate");
    std::set<int> ids;
    for (const auto& r : runs)
        for (const auto& e : r.tag_errors) ids.insert(e.tag_id);

    CsvTable t;
    t.header = {"explorer", "world", "seed", "status", "exploration_time_s", "total_time_s",
                "tags_found", "tags_total", "ckf_position_error_m", "last_position_error_m"};
    for (int id : ids) {
        t.header.push_back("tag" + std::to_string(id) + "_ckf_position_error_m");
        t.header.push_back("tag" + std::to_string(id) + "_last_position_error_m");
    }
    const std::size_t numeric_from = 4;

    auto row_values = [&](const RunSummary& r) {
        std::vector<std::optional<double>> v{r.exploration_time, r.total_time, double(r.tags_found), double(r.tags_total),
                                             detail::mean_of(r.tag_errors, true), detail::mean_of(r.tag_errors, false)};
        for (int id : ids) {
            const auto it = std::find_if(r.tag_errors.begin(), r.tag_errors.end(), [&](const auto& e) { return e.tag_id == id; });
            v.push_back(it == r.tag_errors.end() ? std::nullopt : std::optional<double>(it->ckf_error));
            v.push_back(it == r.tag_errors.end() ? std::nullopt : std::optional<double>(it->last_error));
        }
        return v;
    };
    auto cells_of = [](const std::vector<std::optional<double>>& v) {
        std::vector<std::string> out;
        for (const auto& x : v) out.push_back(x ? format_double(*x) : std::string());
        return out;
    };

    std::vector<std::string> explorers;
    for (const auto& r : runs)
        if (std::find(explorers.begin(), explorers.end(), r.explorer) == explorers.end()) explorers.push_back(r.explorer);

    for (const auto& r : runs) {
        std::vector<std::string> row{r.explorer, r.world, std::to_string(r.seed), r.status};
        for (auto& c : cells_of(row_values(r))) row.push_back(std::move(c));
        t.rows.push_back(std::move(row));
    }
    for (const auto& ex : explorers) {
        std::vector<double> sums(t.header.size() - numeric_from, 0.0);
        std::vector<int> counts(sums.size(), 0);
        std::string world;
        for (const auto& r : runs) {
            if (r.explorer != ex) continue;
            world = r.world;
            const auto v = row_values(r);
            for (std::size_t i = 0; i < v.size(); ++i)
                if (v[i]) {
                    sums[i] += *v[i];
                    ++counts[i];
                }
        }
        std::vector<std::optional<double>> means;
        for (std::size_t i = 0; i < sums.size(); ++i)
            means.push_back(counts[i] ? std::optional<double>(sums[i] / counts[i]) : std::nullopt);
        std::vector<std::string> row{ex, world, "mean", ""};
        for (auto& c : cells_of(means)) row.push_back(std::move(c));
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Long-format per-tag errors, one row per (run, detected tag).
inline CsvTable tag_error_table(const std::vector<RunSummary>& runs) {
    CsvTable t;
    t.header = {"explorer", "world", "seed", "tag_id", "ckf_position_error_m", "last_position_error_m"};
    for (const auto& r : runs)
        for (const auto& e : r.tag_errors)
            t.rows.push_back({r.explorer, r.world, std::to_string(r.seed), std::to_string(e.tag_id),
                              format_double(e.ckf_error), format_double(e.last_error)});
    return t;
}

}  // namespace rescue
