#include "oracles.hpp"

#include "mwchaos/dynamics.hpp"

#include <doctest.h>

#include <complex>
#include <numbers>
#include <random>

using namespace mwchaos;

namespace {

WindowState state_of(std::vector<double> energies)
{
    WindowState s;
    s.window.count = static_cast<Eigen::Index>(energies.size());
    s.window.e_mid = 0.5 * (energies.front() + energies.back());
    s.window.half_width = 0.5 * (energies.back() - energies.front());
    s.weights.assign(energies.size(), 1.0 / static_cast<double>(energies.size()));
    s.energies = std::move(energies);
    return s;
}

/// GOE spectrum mapped to unit mean spacing through the semicircle staircase.
std::vector<double> unfolded_goe(Eigen::Index dim, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    Eigen::MatrixXd a(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = g(rng) * (i == j ? std::sqrt(2.0) : 1.0);
    const Eigen::VectorXd e = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a, Eigen::EigenvaluesOnly).eigenvalues();
    const double r = 2.0 * std::sqrt(static_cast<double>(dim));
    std::vector<double> u;
    for (double x : e) {
        const double y = std::clamp(x / r, -1.0, 1.0);
        u.push_back(static_cast<double>(dim) * (0.5 + (y * std::sqrt(1.0 - y * y) + std::asin(y)) / std::numbers::pi));
    }
    return u;
}

} // namespace

TEST_CASE("uniform window state")
{
    const std::vector<double> e{1, 2, 3, 4, 5, 6, 7, 8};
    const WindowState s = window_state(e, 4.5, 1.6);
    CHECK(s.eta() == 4);
    for (double w : s.weights) CHECK(w == 0.25);
    CHECK(s.energies == std::vector<double>{3, 4, 5, 6});
    CHECK(infinite_time_survival(s) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK_THROWS_AS(window_state(e, 4.0, 0.2), Error);

    const WindowState deg = state_of({1, 1, 2, 3});
    CHECK(infinite_time_survival(deg) == doctest::Approx(6.0 / 16.0).epsilon(1e-15));
}

TEST_CASE("survival probability closed forms")
{
    const WindowState two = state_of({3.0, 3.0 + 1.7});
    std::vector<double> t;
    for (int i = 0; i <= 200; ++i) t.push_back(0.05 * i);
    const auto sp = survival_probability(two, t);
    CHECK(sp[0] == 1.0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double c = std::cos(1.7 * t[i] / 2.0);
        CHECK(std::abs(sp[i] - c * c) < 1e-14);
    }
    const std::vector<double> neg{-1.0};
    CHECK_THROWS_AS(survival_probability(two, neg), Error);
}

TEST_CASE("survival stays in [0, 1] and starts at 1")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 200.0);
    std::vector<double> e(300);
    for (double& v : e) v = u(rng);
    std::sort(e.begin(), e.end());
    const WindowState s = state_of(e);
    const auto c = survival_curve(s);
    for (double v : c.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-15);
    }
    const std::vector<double> zero{0.0};
    CHECK(survival_probability(s, zero)[0] == 1.0);
}

TEST_CASE("long-time average equals the inverse participation")
{
    std::mt19937_64 rng(5);
    std::vector<double> lv = unfolded_goe(300, rng);
    const WindowState s = state_of(std::vector<double>(lv.begin() + 100, lv.begin() + 200));
    const double ipr = infinite_time_survival(s);
    CHECK(ipr == doctest::Approx(0.01).epsilon(1e-12));

    // Closed-form average over [1e3, 1e4].
    CHECK(survival_time_average(s, 1e3, 1e4) == doctest::Approx(ipr).epsilon(0.02));
    // Direct sampling of the same interval.
    std::vector<double> t;
    for (int i = 0; i < 200000; ++i) t.push_back(1e3 + 9e3 * (i + 0.5) / 200000);
    const auto sp = survival_probability(s, t);
    double mean = 0.0;
    for (double v : sp) mean += v;
    mean /= static_cast<double>(sp.size());
    CHECK(mean == doctest::Approx(ipr).epsilon(0.02));
    CHECK(mean == doctest::Approx(survival_time_average(s, 1e3, 1e4)).epsilon(0.01));
}

TEST_CASE("short-time decay follows the sinc envelope")
{
    std::mt19937_64 rng(6);
    std::vector<double> lv = unfolded_goe(400, rng);
    const WindowState s = state_of(std::vector<double>(lv.begin() + 100, lv.begin() + 300));
    const double de = s.window.half_width, eta = static_cast<double>(s.eta()), si = infinite_time_survival(s);
    std::vector<double> t;
    for (int i = 1; i <= 100; ++i) t.push_back(0.3 / de * i / 100.0);
    const auto sp = survival_probability(s, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double x = de * t[i];
        const double first = (1.0 - si) / (eta - 1.0) * eta * std::pow(std::sin(x) / x, 2) + si;
        CHECK(std::abs(sp[i] - first) <= 0.01 * first);
    }
}

TEST_CASE("moving logarithmic average")
{
    TimeGrid g;
    const auto t = g.times();
    CHECK(t.size() == 2000);
    CHECK(t.front() == doctest::Approx(1e-3));
    CHECK(t.back() == doctest::Approx(1e2));

    const std::vector<double> flat(t.size(), 0.37);
    for (double v : moving_log_average(t, flat, 0.02)) CHECK(v == doctest::Approx(0.37).epsilon(1e-15));

    const std::vector<double> sparse_t{1.0, 10.0, 100.0};
    const std::vector<double> sparse_v{0.2, 0.5, 0.9};
    CHECK(moving_log_average(sparse_t, sparse_v, 0.02) == sparse_v);

    // Fast oscillation cos^2(w t / 2) averages toward 1/2.
    std::vector<double> osc;
    // Checked where the window spans several periods and each period holds
    // several grid points, so the samples are not aliased.
    for (double x : t) osc.push_back(std::pow(std::cos(50.0 * x / 2.0), 2));
    const auto sm = moving_log_average(t, osc, 0.02);
    for (std::size_t i = 0; i < t.size(); ++i)
        if (50.0 * t[i] > 150.0 && 50.0 * t[i] < 400.0) {
            CHECK(sm[i] >= 0.3);
            CHECK(sm[i] <= 0.7);
        }
    CHECK_THROWS_AS(moving_log_average(t, sparse_v, 0.02), Error);
}

TEST_CASE("two-level form factor")
{
    CHECK(b2(0.0) == 1.0);
    CHECK(b2(1.0) == doctest::Approx(std::log(3.0) - 1.0).epsilon(1e-15));
    // Continuity at 1 from the upper branch.
    const double up = 1.0 + 1e-9;
    CHECK(std::abs(b2(up) - (up * std::log((2 * up + 1) / (2 * up - 1)) - 1.0)) < 1e-12);
    CHECK(std::abs(b2(up) - b2(1.0)) < 1e-7);
    CHECK(b2(1e3) < 1e-6);
    // Asymptotic order 1 / (12 t^2), with relative correction 3 / (20 t^2).
    for (double x : {100.0, 1e3, 1e5}) CHECK(12.0 * x * x * b2(x) == doctest::Approx(1.0 + 0.15 / (x * x)).epsilon(1e-9));
    // The series branch and the closed form agree where they meet.
    CHECK(b2(9.99) == doctest::Approx(9.99 * std::log((2 * 9.99 + 1) / (2 * 9.99 - 1)) - 1.0).epsilon(1e-10));
    CHECK_THROWS_AS(b2(-0.1), Error);
}

TEST_CASE("analytic survival curve")
{
    CHECK(analytic_survival(0.0, 100.0, 100.0, 0.01) == 1.0);
    CHECK(analytic_survival(1e9, 100.0, 100.0, 0.01) == doctest::Approx(0.01).epsilon(1e-6));
    double lowest = 1.0;
    for (int i = 0; i < 20000; ++i) {
        const double t = std::pow(10.0, -3.0 + 5.0 * i / 19999.0);
        lowest = std::min(lowest, analytic_survival(t, 100.0, 100.0, 0.01));
    }
    CHECK(lowest < 0.01);
    CHECK_THROWS_AS(analytic_survival(1.0, 1.0, 100.0, 0.5), Error);
}

TEST_CASE("correlation hole of random-matrix spectra matches the analytic curve")
{
    // Ensemble average over unfolded GOE windows of about 121 levels, half-width
    // 60. One spectrum fluctuates by tens of percent on the ramp; the noise of
    // the mean falls like 1/sqrt(samples), so many samples are needed.
    std::mt19937_64 rng(7);
    TimeGrid grid;
    grid.log10_min = -3.0;
    grid.log10_max = 1.0;
    grid.points = 1600;
    SurvivalCurve mean;
    const int samples = 600;
    for (int k = 0; k < samples; ++k) {
        const auto lv = unfolded_goe(400, rng);
        const WindowState s = window_state(lv, 200.0, 60.0);
        SurvivalCurve c = survival_curve(s, grid);
        if (k == 0) {
            mean = c;
            continue;
        }
        for (std::size_t i = 0; i < c.times.size(); ++i) {
            mean.values[i] += c.values[i];
            mean.smoothed[i] += c.smoothed[i];
            mean.analytic[i] += c.analytic[i];
        }
        mean.s_inf += c.s_inf;
    }
    for (std::size_t i = 0; i < mean.times.size(); ++i) {
        mean.values[i] /= samples;
        mean.smoothed[i] /= samples;
        mean.analytic[i] /= samples;
    }
    mean.s_inf /= samples;

    const CorrelationHole hole = correlation_hole(mean);
    MESSAGE("hole depth " << hole.depth << " at t " << hole.time << " significance " << hole.significance);
    CHECK(hole.depth > 0.0);
    CHECK(hole.significance > 3.0);
    const RampAgreement ramp = ramp_agreement(mean);
    MESSAGE("ramp " << ramp.t_begin << ".." << ramp.t_end << " max " << ramp.max_deviation << " mean "
                    << ramp.mean_deviation);
    CHECK(ramp.points > 10);
    CHECK(ramp.max_deviation < 0.10);
}
