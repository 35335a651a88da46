#include <gtest/gtest.h>

#include <sstream>

#include "rescue/metrics.hpp"

using namespace rescue;

namespace {

// Student t density integrated with composite Simpson on [lo, hi].
double t_pdf(double x, double df) {
    const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * kPi);
    return c * std::pow(1 + x * x / df, -(df + 1) / 2);
}

double simpson_lower_tail(double t, double df) {
    // P(T <= t) for t <= 0 as the integral of the density over [|t|, 2000].
    const double lo = std::abs(t);
    const double hi = 2000.0;
    const int n = 2000000;
    const double h = (hi - lo) / n;
    double s = t_pdf(lo, df) + t_pdf(hi, df);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * t_pdf(lo + i * h, df);
    return s * h / 3.0;
}

struct WelchRef {
    double t, df;
};

WelchRef welch_by_hand(const std::vector<double>& a, const std::vector<double>& b) {
    auto mv = [](const std::vector<double>& x) {
        double m = 0;
        for (double v : x) m += v;
        m /= x.size();
        double s = 0;
        for (double v : x) s += (v - m) * (v - m);
        return std::pair{m, s / (x.size() - 1)};
    };
    const auto [ma, va] = mv(a);
    const auto [mb, vb] = mv(b);
    const double sa = va / a.size(), sb = vb / b.size();
    return {(ma - mb) / std::sqrt(sa + sb), (sa + sb) * (sa + sb) / (sa * sa / (a.size() - 1) + sb * sb / (b.size() - 1))};
}

}  // namespace

TEST(LocalizationError, Examples) {
    EXPECT_EQ(localization_error({1, 2, 3}, {1, 2, 3}), 0.0);
    EXPECT_DOUBLE_EQ(localization_error({1, 0, 0}, {0, 0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(localization_error({0.3, 0.4, 0}, {0, 0, 0}), 0.5);
}

TEST(IncompleteBeta, KnownValues) {
    EXPECT_NEAR(regularized_incomplete_beta(1, 1, 0.3), 0.3, 1e-14);
    EXPECT_NEAR(regularized_incomplete_beta(2, 1, 0.5), 0.25, 1e-14);
    EXPECT_NEAR(regularized_incomplete_beta(0.5, 0.5, 0.5), 0.5, 1e-13);
    // I_x(a,b) = 1 - I_{1-x}(b,a)
    for (double x : {0.05, 0.3, 0.62, 0.97})
        EXPECT_NEAR(regularized_incomplete_beta(3.5, 1.25, x), 1.0 - regularized_incomplete_beta(1.25, 3.5, 1 - x), 1e-13);
    EXPECT_EQ(regularized_incomplete_beta(2, 3, 0.0), 0.0);
    EXPECT_EQ(regularized_incomplete_beta(2, 3, 1.0), 1.0);
    EXPECT_THROW(regularized_incomplete_beta(0, 3, 0.5), PreconditionError);
}

TEST(StudentT, CdfMatchesNumericalIntegration) {
    EXPECT_NEAR(student_t_cdf(-2.0, 18.0), simpson_lower_tail(-2.0, 18.0), 1e-8);
    EXPECT_NEAR(1.0 - student_t_cdf(2.0, 18.0), 0.0304107, 1e-6);
    EXPECT_NEAR(student_t_cdf(-0.7693, 13.54), simpson_lower_tail(-0.7693, 13.54), 1e-8);
    EXPECT_NEAR(student_t_cdf(-3.1, 2.5), simpson_lower_tail(-3.1, 2.5), 1e-7);
    EXPECT_DOUBLE_EQ(student_t_cdf(0.0, 7.0), 0.5);
    // df = 1 is Cauchy.
    EXPECT_NEAR(student_t_cdf(1.0, 1.0), 0.75, 1e-13);
}

TEST(Welch, IdenticalSamplesGiveHalf) {
    const std::vector<double> a{0.1, 0.2, 0.3, 0.4};
    const auto r = welch_t_test(a, a);
    EXPECT_EQ(r.t_statistic, 0.0);
    EXPECT_DOUBLE_EQ(r.p_value, 0.5);
    EXPECT_THROW(welch_t_test(std::vector<double>{1.0}, a), PreconditionError);
    const std::vector<double> c{1, 1, 1};
    EXPECT_THROW(welch_t_test(c, c), NumericalError);
}

TEST(Welch, TableValues) {
    const ErrorTable w = table1_world();
    const auto rw = welch_t_test(w.ckf, w.last);
    const WelchRef hw = welch_by_hand(w.ckf, w.last);
    EXPECT_NEAR(rw.t_statistic, hw.t, 1e-12);
    EXPECT_NEAR(rw.degrees_of_freedom, hw.df, 1e-10);
    EXPECT_NEAR(rw.t_statistic, -2.1603, 1e-4);
    EXPECT_NEAR(rw.degrees_of_freedom, 18.60, 5e-3);
    EXPECT_NEAR(rw.p_value, simpson_lower_tail(hw.t, hw.df), 1e-8);
    EXPECT_NEAR(rw.mean_a, 0.15, 0.005);
    EXPECT_NEAR(rw.mean_b, 0.27, 0.005);
    EXPECT_NEAR(rw.p_value, 0.02, 0.005);

    const ErrorTable h = table1_house();
    const auto rh = welch_t_test(h.ckf, h.last);
    const WelchRef hh = welch_by_hand(h.ckf, h.last);
    EXPECT_NEAR(rh.t_statistic, hh.t, 1e-12);
    EXPECT_NEAR(rh.p_value, simpson_lower_tail(hh.t, hh.df), 1e-8);
    EXPECT_NEAR(rh.mean_a, 0.30, 0.01);
    EXPECT_NEAR(rh.mean_b, 0.36, 0.01);
    EXPECT_NEAR(rh.p_value, 0.22, 0.02);
}

TEST(Welch, SymmetryAndShiftInvariance) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a, b;
        const int na = 2 + int(rng.uniform(0, 20)), nb = 2 + int(rng.uniform(0, 20));
        for (int i = 0; i < na; ++i) a.push_back(rng.normal(0.0, 1.0));
        for (int i = 0; i < nb; ++i) b.push_back(rng.normal(0.3, 2.0));
        const auto ab = welch_t_test(a, b);
        const auto ba = welch_t_test(b, a);
        EXPECT_NEAR(ab.t_statistic, -ba.t_statistic, 1e-12);
        EXPECT_NEAR(ab.p_value + ba.p_value, 1.0, 1e-12);
        for (double& v : a) v += 10.0;
        for (double& v : b) v += 10.0;
        const auto shifted = welch_t_test(a, b);
        EXPECT_NEAR(shifted.t_statistic, ab.t_statistic, 1e-9);
        EXPECT_NEAR(shifted.degrees_of_freedom, ab.degrees_of_freedom, 1e-7);
    }
}

namespace {

RunSummary summary(const std::string& ex, std::uint64_t seed, std::vector<TagErrorRecord> errs, double t_explore) {
    RunSummary r;
    r.explorer = ex;
    r.world = "w";
    r.seed = seed;
    r.status = "DONE";
    r.exploration_time = t_explore;
    r.total_time = t_explore + 10;
    r.tags_found = int(errs.size());
    r.tags_total = 3;
    r.tag_errors = std::move(errs);
    return r;
}

}  // namespace

TEST(AggregateReport, SingleRunMeanRowEqualsTheRun) {
    const CsvTable t = aggregate_report({summary("nbv", 4, {{1, 0.1, 0.2}, {3, 0.3, 0.5}}, 90.5)});
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[1][2], "mean");
    for (std::size_t c = 4; c < t.header.size(); ++c) EXPECT_EQ(t.rows[0][c], t.rows[1][c]) << t.header[c];
    EXPECT_EQ(t.rows[0][*t.column("ckf_position_error_m")], format_double((0.1 + 0.3) / 2));
    EXPECT_TRUE(t.column("tag3_last_position_error_m").has_value());
    EXPECT_FALSE(t.column("tag2_ckf_position_error_m").has_value());
    EXPECT_THROW(aggregate_report({}), PreconditionError);
}

TEST(AggregateReport, MeansOverTableValues) {
    const ErrorTable w = table1_world();
    std::vector<TagErrorRecord> errs;
    for (std::size_t i = 0; i < w.ckf.size(); ++i) errs.push_back({int(i), w.ckf[i], w.last[i]});
    const CsvTable t = aggregate_report({summary("nbv", 0, errs, 1.0)});
    EXPECT_NEAR(*parse_double(t.rows[1][*t.column("ckf_position_error_m")]), 0.15, 0.005);
    EXPECT_NEAR(*parse_double(t.rows[1][*t.column("last_position_error_m")]), 0.27, 0.005);
}

TEST(AggregateReport, MeanRowsPerExplorerAndBlankMissingTags) {
    const CsvTable t = aggregate_report({summary("nbv", 0, {{1, 0.1, 0.2}}, 100), summary("greedy", 0, {}, 200),
                                         summary("nbv", 1, {{2, 0.3, 0.1}}, 120)});
    ASSERT_EQ(t.rows.size(), 5u);
    const auto col = *t.column("exploration_time_s");
    EXPECT_EQ(t.rows[3][0], "nbv");
    EXPECT_EQ(t.rows[3][col], "110");
    EXPECT_EQ(t.rows[4][0], "greedy");
    EXPECT_EQ(t.rows[1][*t.column("ckf_position_error_m")], "");
    EXPECT_EQ(t.rows[0][*t.column("tag2_ckf_position_error_m")], "");
    EXPECT_EQ(t.numeric_column("exploration_time_s"), (std::vector<double>{100, 200, 120}));
}

TEST(Csv, RoundTripAndErrors) {
    const CsvTable t = aggregate_report({summary("nbv", 0, {{1, 0.1, 0.2}}, 100.25), summary("nbv", 1, {}, 3)});
    std::stringstream ss;
    write_csv(ss, t);
    const CsvTable back = read_csv(ss);
    EXPECT_EQ(back.header, t.header);
    EXPECT_EQ(back.rows, t.rows);

    std::istringstream bad("a,b\n1,2\n3\n");
    try {
        read_csv(bad);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3);
    }
    std::istringstream empty("");
    EXPECT_THROW(read_csv(empty), ParseError);
    std::istringstream text("x\nabc\n");
    EXPECT_THROW(read_csv(text).numeric_column("x"), ParseError);
    EXPECT_THROW(read_csv(ss).numeric_column("nope"), ParseError);
}

TEST(FormatDouble, ShortestRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 104.95, 1e-17, -2.5})
        EXPECT_EQ(*parse_double(format_double(v)), v);
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_FALSE(parse_double("1.5x").has_value());
}
