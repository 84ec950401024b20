#pragma once

// Survival probability of a state spread uniformly over an energy window of
// eigenstates, logarithmic moving averages and the analytic correlation-hole
// curve.

#include "mwchaos/eth.hpp"

#include <span>
#include <vector>

namespace mwchaos {

struct WindowState {
    EnergyWindow window;
    std::vector<double> weights;  ///< |C_n|^2 over the window's eigenstates
    std::vector<double> energies; ///< E_n of those eigenstates
    Eigen::Index eta() const noexcept { return window.count; }
};

/// Uniform weights 1/eta with zero phases.
WindowState window_state(const SpectralResult& spectral, double e_mid, double half_width);
WindowState window_state(std::span<const double> eigenvalues, double e_mid, double half_width);

/// Exact long-time average of S_P: sum over pairs with |E_n - E_m| <= tol of
/// |C_n|^2 |C_m|^2.
double infinite_time_survival(const WindowState& state, double degeneracy_tol = 1e-9);

struct TimeGrid {
    double log10_min = -3.0;
    double log10_max = 2.0;
    int points = 2000;
    std::vector<double> times() const;
};

/// |sum_n |C_n|^2 exp(-i E_n t)|^2 for each t.
std::vector<double> survival_probability(const WindowState& state, std::span<const double> times);

/// Mean of the samples whose log10 t lies within +-dt of each point.
std::vector<double> moving_log_average(std::span<const double> times, std::span<const double> values,
                                       double dt = 0.02);

/// Two-level form factor of the Gaussian orthogonal ensemble.
double b2(double t_bar);

/// Analytic survival probability of a uniform window of eta levels.
double analytic_survival(double t, double eta, double half_width, double s_inf);

/// Exact average of S_P over [t1, t2] (closed form, no sampling).
double survival_time_average(const WindowState& state, double t1, double t2);

struct SurvivalCurve {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> smoothed;
    std::vector<double> analytic;
    std::vector<double> smoothing_counts; ///< samples averaged per point
    double s_inf = 0.0;
    double smoothing_dt = 0.02;
    double e_mid = 0.0;
    double half_width = 0.0;
    Eigen::Index eta = 0;
};

SurvivalCurve survival_curve(const WindowState& state, const TimeGrid& grid = {}, double smoothing_dt = 0.02);

struct CorrelationHole {
    double time = 0.0;       ///< location of the smoothed minimum
    double depth = 0.0;      ///< s_inf - smoothed minimum
    double significance = 0.0; ///< depth in units of the smoothing window's standard error
};

/// Minimum of the smoothed curve after the initial decay has fallen below s_inf.
CorrelationHole correlation_hole(const SurvivalCurve& curve);

struct RampAgreement {
    double t_begin = 0.0; ///< minimum of the smoothed analytic curve
    double t_end = 0.0;   ///< Heisenberg time pi eta / dE
    double max_deviation = 0.0;  ///< max |smoothed - smoothed analytic| / smoothed analytic
    double mean_deviation = 0.0;
    long points = 0;
};

/// Agreement of the smoothed numerical curve with the analytic curve under
/// the same moving average, from the minimum of the latter up to the
/// Heisenberg time. Throws when no grid point
/// falls in that range.
RampAgreement ramp_agreement(const SurvivalCurve& curve);

} // namespace mwchaos
