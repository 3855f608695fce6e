#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "swx/simlab.hpp"
#include "swx/test_weaknull.hpp"

using namespace swx;

namespace {

SessionFrame random_frame(int J, int n, std::uint64_t seed, bool varied_probs = false) {
    RngStream s(seed, 0);
    std::vector<std::uint8_t> z(static_cast<std::size_t>(J));
    std::vector<double> p(static_cast<std::size_t>(J), 0.5);
    Eigen::MatrixXd Y(J, n);
    for (int j = 0; j < J; ++j) {
        if (varied_probs) p[static_cast<std::size_t>(j)] = 0.2 + 0.6 * s.uniform();
        z[static_cast<std::size_t>(j)] = j < 2 ? static_cast<std::uint8_t>(j)
                                              : draw_bernoulli(s, p[static_cast<std::size_t>(j)]);
        for (int l = 0; l < n; ++l) Y(j, l) = draw_gaussian(s) + 0.5 * l;
    }
    return make_session_frame(z, p, Y);
}

// Weighted least squares of y on (1, z) with weights z/p + (1-z)/(1-p) and
// the HC0 sandwich; returns {slope, variance of slope}.
std::pair<double, double> wls_hc0(const std::vector<double>& y, const std::vector<std::uint8_t>& z,
                                  const std::vector<double>& p) {
    const int J = static_cast<int>(y.size());
    Eigen::MatrixXd X(J, 2);
    Eigen::VectorXd w(J), yv(J);
    for (int j = 0; j < J; ++j) {
        X(j, 0) = 1.0;
        X(j, 1) = z[static_cast<std::size_t>(j)];
        w(j) = z[static_cast<std::size_t>(j)] ? 1.0 / p[static_cast<std::size_t>(j)]
                                              : 1.0 / (1.0 - p[static_cast<std::size_t>(j)]);
        yv(j) = y[static_cast<std::size_t>(j)];
    }
    const Eigen::MatrixXd bread = (X.transpose() * w.asDiagonal() * X).inverse();
    const Eigen::VectorXd beta = bread * X.transpose() * w.asDiagonal() * yv;
    const Eigen::VectorXd e = yv - X * beta;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(2, 2);
    for (int j = 0; j < J; ++j) meat += w(j) * w(j) * e(j) * e(j) * X.row(j).transpose() * X.row(j);
    const Eigen::MatrixXd V = bread * meat * bread;
    return {beta(1), V(1, 1)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Session frames
// ---------------------------------------------------------------------------

TEST(SessionFrame, IndexArithmetic) {
    const std::vector<double> y{1, 2, 3, 4, 5, 6};
    AssignmentPath w({1, 1, 1, 0, 0, 0});
    const std::vector<double> p{0.5, 0.5};
    const auto f = build_session_frame(y, w, 3, 1, p);
    EXPECT_EQ(f.J, 2);
    EXPECT_EQ(f.n, 2);
    EXPECT_EQ(f.Y(0, 0), 2);
    EXPECT_EQ(f.Y(0, 1), 3);
    EXPECT_EQ(f.Y(1, 0), 5);
    EXPECT_EQ(f.Y(1, 1), 6);
    EXPECT_EQ(f.focal_means, (std::vector<double>{2.5, 5.5}));
    EXPECT_EQ(f.labels, (std::vector<std::uint8_t>{1, 0}));
}

TEST(SessionFrame, NoBurnInReshapesAll) {
    const std::vector<double> y{1, 2, 3, 4};
    const auto f = build_session_frame(y, AssignmentPath({1, 1, 0, 0}), 2, 0,
                                       std::vector<double>{0.5, 0.5});
    EXPECT_EQ(f.n, 2);
    EXPECT_EQ(f.Y(1, 1), 4);
}

TEST(SessionFrame, Errors) {
    const std::vector<double> y7(7, 0.0);
    EXPECT_THROW(build_session_frame(y7, AssignmentPath(std::vector<std::uint8_t>(7, 1)), 3, 1,
                                     std::vector<double>{0.5, 0.5}),
                 std::invalid_argument);
    const std::vector<double> y6(6, 0.0);
    EXPECT_THROW(build_session_frame(y6, AssignmentPath({1, 0, 1, 0, 0, 0}), 3, 1,
                                     std::vector<double>{0.5, 0.5}),
                 std::invalid_argument);
    EXPECT_THROW(build_session_frame(y6, AssignmentPath(std::vector<std::uint8_t>(6, 1)), 3, 3,
                                     std::vector<double>{0.5, 0.5}),
                 std::invalid_argument);
}

TEST(SessionFrame, DesignProbabilities) {
    SwitchbackDesign d;
    d.horizon = 6;
    d.switch_times = {1, 2, 4, 5};
    d.block_probs = {0.6, 0.6, 0.3, 0.3};
    const std::vector<double> y(6, 1.0);
    const auto f = build_session_frame(y, AssignmentPath({1, 1, 1, 0, 0, 0}), d, 3, 1);
    EXPECT_NEAR(f.probs[0], 0.36 / 0.52, 1e-15);
    EXPECT_NEAR(f.probs[1], 0.09 / 0.58, 1e-15);
    d.switch_times = {1, 2, 5};
    d.block_probs = {0.5, 0.5, 0.5};
    EXPECT_THROW(build_session_frame(y, AssignmentPath({1, 1, 1, 0, 0, 0}), d, 3, 1),
                 std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Focal-average statistic
// ---------------------------------------------------------------------------

TEST(HtFocalAverage, Arithmetic) {
    const auto a = studentize_ht(std::vector<double>{2}, std::vector<std::uint8_t>{1},
                                 std::vector<double>{0.5});
    EXPECT_DOUBLE_EQ(a.estimate, 4.0);
    EXPECT_DOUBLE_EQ(a.variance, 16.0);
    const auto b = studentize_ht(std::vector<double>{1, 3}, std::vector<std::uint8_t>{1, 0},
                                 std::vector<double>{0.5, 0.5});
    EXPECT_DOUBLE_EQ(b.estimate, -2.0);
    const auto c = studentize_ht(std::vector<double>{5, 5}, std::vector<std::uint8_t>{1, 0},
                                 std::vector<double>{0.5, 0.5});
    EXPECT_DOUBLE_EQ(c.estimate, 0.0);
}

TEST(TStud, DegenerateAtZero) {
    const auto r = studentize_ht(std::vector<double>{0, 0, 0}, std::vector<std::uint8_t>{1, 0, 1},
                                 std::vector<double>{0.5, 0.5, 0.5});
    EXPECT_TRUE(r.degenerate);
    EXPECT_EQ(r.statistic, 0.0);
}

TEST(TStud, ScaleInvarianceAndReconstruction) {
    const auto f = random_frame(30, 2, 3, true);
    const auto a = t_stud(f);
    Eigen::MatrixXd Y2 = 7.5 * f.Y;
    const auto g = make_session_frame(f.labels, f.probs, Y2);
    EXPECT_NEAR(t_stud(g).statistic, a.statistic, 1e-12);
    EXPECT_NEAR(a.statistic * std::sqrt(a.variance), a.estimate, 1e-12);
    EXPECT_DOUBLE_EQ(ht_focal_average(f), a.estimate);
    EXPECT_DOUBLE_EQ(v_up(f), a.variance);
}

TEST(VUp, ConservativePerSession) {
    RngStream s(6, 0);
    for (int i = 0; i < 200; ++i) {
        const double y1 = 3.0 * draw_gaussian(s), y0 = 3.0 * draw_gaussian(s);
        const double p = 0.05 + 0.9 * s.uniform();
        const std::vector<double> pp{p};
        const auto t = studentize_ht(std::vector<double>{y1}, std::vector<std::uint8_t>{1}, pp);
        const auto c = studentize_ht(std::vector<double>{y0}, std::vector<std::uint8_t>{0}, pp);
        const double expected_v = p * t.variance + (1 - p) * c.variance;
        const double mean = p * t.estimate + (1 - p) * c.estimate;
        const double var = p * t.estimate * t.estimate + (1 - p) * c.estimate * c.estimate - mean * mean;
        EXPECT_GE(expected_v, var - 1e-9 * std::fabs(var));
    }
}

TEST(CrtWeakNull, ZeroOutcomesGivePValueOne) {
    const auto f = make_session_frame({1, 0, 1, 0}, {0.5, 0.5, 0.5, 0.5}, Eigen::MatrixXd::Zero(4, 2));
    EXPECT_EQ(crt_weaknull(f).test.p_value, 1.0);
}

TEST(CrtWeakNull, ValidInNullWorld) {
    const int J = 200, R = 1000;
    RngStream ys(7, 0);
    Eigen::MatrixXd Y(J, 1);
    for (int j = 0; j < J; ++j) Y(j, 0) = draw_gaussian(ys);
    int rejections = 0;
    McOptions opts;
    opts.draws = 199;
    for (int rep = 0; rep < R; ++rep) {
        RngStream s(8, static_cast<std::uint64_t>(rep));
        std::vector<std::uint8_t> z(J);
        for (auto& v : z) v = draw_bernoulli(s, 0.5);
        const auto f = make_session_frame(z, std::vector<double>(J, 0.5), Y);
        opts.seed = static_cast<std::uint64_t>(rep);
        rejections += crt_weaknull(f, opts).test.p_value <= 0.05;
    }
    EXPECT_LE(rejections / double(R), 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / R));
}

// ---------------------------------------------------------------------------
// Positions and joint test
// ---------------------------------------------------------------------------

TEST(PositionTests, SinglePositionMatchesFocalAverage) {
    const auto f = random_frame(25, 1, 9);
    McOptions opts;
    opts.draws = 300;
    opts.seed = 4;
    const auto focal = crt_weaknull(f, opts);
    const auto pos = position_tests(f, opts);
    ASSERT_EQ(pos.size(), 1u);
    EXPECT_EQ(pos[0].observed.statistic, focal.observed.statistic);
    EXPECT_EQ(pos[0].test.p_value, focal.test.p_value);
}

TEST(PositionTests, ZeroColumn) {
    auto f = random_frame(20, 3, 10);
    f.Y.col(1).setZero();
    f = make_session_frame(f.labels, f.probs, f.Y);
    const auto pos = position_tests(f, McOptions{}, {2});
    ASSERT_EQ(pos.size(), 1u);
    EXPECT_EQ(pos[0].observed.statistic, 0.0);
    EXPECT_EQ(pos[0].test.p_value, 1.0);
    EXPECT_THROW(position_tests(f, McOptions{}, {4}), std::out_of_range);
}

TEST(JointF, MatchesSquareForOnePosition) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto f = random_frame(15, 1, seed, true);
        const double t = t_stud(f).statistic;
        EXPECT_NEAR(joint_f_statistic(f, f.labels), t * t, 1e-12 * std::max(1.0, t * t));
    }
}

TEST(JointF, ZeroOutcomesDegenerate) {
    const auto f = make_session_frame({1, 0, 1}, {0.5, 0.5, 0.5}, Eigen::MatrixXd::Zero(3, 2));
    const auto r = joint_f_test(f);
    EXPECT_TRUE(r.test.degenerate);
    EXPECT_EQ(r.test.p_value, 1.0);
}

TEST(JointF, RankDeficientUsesPseudoInverse) {
    auto f = random_frame(20, 2, 12);
    Eigen::MatrixXd Y(20, 3);
    Y << f.Y, f.Y.col(0);
    const auto g = make_session_frame(f.labels, f.probs, Y);
    int rank = 0;
    const double t = joint_f_statistic(g, g.labels, &rank);
    EXPECT_EQ(rank, 2);
    EXPECT_TRUE(std::isfinite(t));
}

// ---------------------------------------------------------------------------
// Regression
// ---------------------------------------------------------------------------

TEST(Regression, ConstantOutcomes) {
    const auto r = regression_stat(std::vector<double>{4, 4, 4}, std::vector<std::uint8_t>{1, 0, 1},
                                   std::vector<double>{0.3, 0.5, 0.7});
    EXPECT_NEAR(r.estimate, 0.0, 1e-15);
}

TEST(Regression, TwoSessions) {
    const auto r = regression_stat(std::vector<double>{3, 1}, std::vector<std::uint8_t>{1, 0},
                                   std::vector<double>{0.5, 0.5});
    EXPECT_DOUBLE_EQ(r.mu1, 3.0);
    EXPECT_DOUBLE_EQ(r.mu0, 1.0);
    EXPECT_DOUBLE_EQ(r.estimate, 2.0);
    EXPECT_EQ(r.variance, 0.0);
    EXPECT_TRUE(r.degenerate);
}

TEST(Regression, FourSessionsAgainstWlsOracle) {
    const std::vector<double> y{2, 4, 1, 3};
    const std::vector<std::uint8_t> z{1, 1, 0, 0};
    const std::vector<double> p(4, 0.5);
    const auto r = regression_stat(y, z, p);
    const auto [slope, var] = wls_hc0(y, z, p);
    EXPECT_DOUBLE_EQ(r.mu1, 3.0);
    EXPECT_DOUBLE_EQ(r.mu0, 2.0);
    EXPECT_NEAR(r.estimate, slope, 1e-12);
    EXPECT_NEAR(r.variance, var, 1e-12);
    EXPECT_NEAR(r.variance, 1.0, 1e-12);
}

TEST(Regression, MatchesWlsOnRandomFrames) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto f = random_frame(12, 1, 100 + seed, true);
        const auto r = regression_stat(f);
        const auto [slope, var] = wls_hc0(f.focal_means, f.labels, f.probs);
        EXPECT_NEAR(r.estimate, slope, 1e-12);
        EXPECT_NEAR(r.estimate, r.mu1 - r.mu0, 1e-12);
        EXPECT_NEAR(r.variance, var, 1e-12 * std::max(1.0, var));
    }
}

TEST(Regression, EmptyArm) {
    EXPECT_THROW(regression_stat(std::vector<double>{1, 2}, std::vector<std::uint8_t>{1, 1},
                                 std::vector<double>{0.5, 0.5}),
                 ArmEmptyError);
    const auto f = make_session_frame({1, 1, 1}, {0.5, 0.5, 0.5}, Eigen::MatrixXd::Ones(3, 1));
    const auto r = crt_regression(f);
    EXPECT_TRUE(r.test.degenerate);
    EXPECT_EQ(r.test.p_value, 1.0);
}

TEST(Regression, CrtRunsOnFrame) {
    const auto f = random_frame(30, 2, 55, true);
    McOptions opts;
    opts.draws = 200;
    const auto r = crt_regression(f, opts);
    EXPECT_FALSE(r.test.degenerate);
    EXPECT_GE(r.test.p_value, 1.0 / 201.0);
    EXPECT_LE(r.test.p_value, 1.0);
}

// ---------------------------------------------------------------------------
// Potential-outcome tables
// ---------------------------------------------------------------------------

TEST(PositionEffects, AverageOfPositionsIsFocalEffect) {
    const int L = 6, m = 2, n = L - m, J = 10;
    const auto dgp = total_effect_dgp(1.5, NoiseFamily::gaussian, m);
    RngStream s(77, 0);
    const auto eps = draw_noise(dgp, L * J, s);
    AssignmentPath ones(std::vector<std::uint8_t>(L * J, 1)), zeros(std::vector<std::uint8_t>(L * J, 0));
    const auto y1 = outcomes_from_noise(dgp, ones, eps);
    const auto y0 = outcomes_from_noise(dgp, zeros, eps);
    const auto f1 = build_session_frame(y1, ones, L, m, std::vector<double>(J, 0.5));
    const auto f0 = build_session_frame(y0, ones, L, m, std::vector<double>(J, 0.5));
    double tau_u = 0.0;
    Eigen::VectorXd tau_l = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < J; ++j) {
        tau_u += (f1.focal_means[static_cast<std::size_t>(j)] - f0.focal_means[static_cast<std::size_t>(j)]) / J;
        tau_l += (f1.Y.row(j) - f0.Y.row(j)).transpose() / J;
    }
    EXPECT_NEAR(tau_u, tau_l.mean(), 1e-12);
}

TEST(WeakNullJson, PositionsAndJoint) {
    const auto f = random_frame(12, 2, 5);
    McOptions opts;
    opts.draws = 50;
    const auto j = weaknull_to_json(crt_weaknull(f, opts), position_tests(f, opts), joint_f_test(f, opts));
    ASSERT_EQ(j["positions"].size(), 2u);
    EXPECT_EQ(j["positions"][1]["position"], 2);
    EXPECT_TRUE(j["joint"].contains("rank"));
}
