#include "mwchaos/dynamics.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace mwchaos {

namespace {

WindowState uniform_state(std::span<const double> eigenvalues, const EnergyWindow& w)
{
    if (w.count < 2) throw Error("window_state: need at least 2 eigenstates in the window");
    WindowState s;
    s.window = w;
    const double p = 1.0 / static_cast<double>(w.count);
    s.weights.assign(static_cast<std::size_t>(w.count), p);
    s.energies.assign(eigenvalues.begin() + w.first, eigenvalues.begin() + w.first + w.count);
    return s;
}

} // namespace

WindowState window_state(const SpectralResult& spectral, double e_mid, double half_width)
{
    const EnergyWindow w = window_indices(spectral, e_mid, half_width);
    return uniform_state(std::span<const double>(spectral.eigenvalues.data(), static_cast<std::size_t>(spectral.dim())),
                         w);
}

WindowState window_state(std::span<const double> eigenvalues, double e_mid, double half_width)
{
    return uniform_state(eigenvalues, window_indices(eigenvalues, e_mid, half_width));
}

double infinite_time_survival(const WindowState& state, double tol)
{
    // Energies are sorted, so degenerate groups are contiguous runs.
    double total = 0.0;
    const std::size_t n = state.energies.size();
    std::size_t start = 0;
    while (start < n) {
        std::size_t end = start + 1;
        while (end < n && state.energies[end] - state.energies[end - 1] <= tol) ++end;
        double g = 0.0;
        for (std::size_t k = start; k < end; ++k) g += state.weights[k];
        total += g * g;
        start = end;
    }
    return total;
}

std::vector<double> TimeGrid::times() const
{
    if (points < 2 || !(log10_max > log10_min)) throw Error("time grid needs >= 2 points and a positive range");
    std::vector<double> t(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        t[static_cast<std::size_t>(i)] = std::pow(10.0, log10_min + (log10_max - log10_min) * i / (points - 1));
    return t;
}

std::vector<double> survival_probability(const WindowState& state, std::span<const double> times)
{
    const double shift = state.energies.empty() ? 0.0 : 0.5 * (state.energies.front() + state.energies.back());
    std::vector<double> out(times.size());
    parallel_for(times.size(), [&](std::size_t k) {
        const double t = times[k];
        if (t < 0.0) throw Error("survival_probability: times must be non-negative");
        if (t == 0.0) {
            out[k] = 1.0;
            return;
        }
        std::complex<double> a{0.0, 0.0};
        for (std::size_t n = 0; n < state.energies.size(); ++n)
            a += state.weights[n] * std::polar(1.0, -(state.energies[n] - shift) * t);
        out[k] = std::clamp(std::norm(a), 0.0, 1.0);
    });
    return out;
}

std::vector<double> moving_log_average(std::span<const double> times, std::span<const double> values, double dt)
{
    if (times.size() != values.size()) throw Error("moving_log_average: size mismatch");
    std::vector<double> lt(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0)) throw Error("moving_log_average: times must be positive");
        lt[i] = std::log10(times[i]);
    }
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto first = std::lower_bound(lt.begin(), lt.end(), lt[i] - dt);
        auto last = std::upper_bound(lt.begin(), lt.end(), lt[i] + dt);
        double s = 0.0;
        for (auto it = first; it != last; ++it) s += values[static_cast<std::size_t>(it - lt.begin())];
        out[i] = s / static_cast<double>(last - first);
    }
    return out;
}

double b2(double t)
{
    if (t < 0.0) throw Error("b2: argument must be non-negative");
    if (t <= 1.0) return 1.0 - 2.0 * t + t * std::log(2.0 * t + 1.0);
    const double x = 0.5 / t;
    if (x < 0.05) {
        // atanh(x)/x - 1 = sum_k x^(2k) / (2k+1)
        double s = 0.0;
        double p = 1.0;
        for (int k = 1; k <= 12; ++k) {
            p *= x * x;
            s += p / (2 * k + 1);
        }
        return s;
    }
    return t * std::log((2.0 * t + 1.0) / (2.0 * t - 1.0)) - 1.0;
}

double analytic_survival(double t, double eta, double half_width, double s_inf)
{
    if (!(eta >= 2.0) || !(half_width > 0.0)) throw Error("analytic_survival: need eta >= 2 and dE > 0");
    if (t == 0.0) return 1.0;
    const double x = half_width * t;
    const double sinc2 = std::pow(std::sin(x) / x, 2);
    return (1.0 - s_inf) / (eta - 1.0) * (eta * sinc2 - b2(x / (std::numbers::pi * eta))) + s_inf;
}

double survival_time_average(const WindowState& state, double t1, double t2)
{
    if (!(t2 > t1) || t1 < 0.0) throw Error("survival_time_average: need 0 <= t1 < t2");
    const std::size_t n = state.energies.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += state.weights[i] * state.weights[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            const double w = state.energies[j] - state.energies[i];
            const double avg = w == 0.0 ? 1.0 : (std::sin(w * t2) - std::sin(w * t1)) / (w * (t2 - t1));
            total += 2.0 * state.weights[i] * state.weights[j] * avg;
        }
    }
    return total;
}

SurvivalCurve survival_curve(const WindowState& state, const TimeGrid& grid, double smoothing_dt)
{
    SurvivalCurve c;
    c.times = grid.times();
    c.values = survival_probability(state, c.times);
    c.smoothed = moving_log_average(c.times, c.values, smoothing_dt);
    c.s_inf = infinite_time_survival(state);
    c.smoothing_dt = smoothing_dt;
    c.e_mid = state.window.e_mid;
    c.half_width = state.window.half_width;
    c.eta = state.eta();
    c.analytic.reserve(c.times.size());
    for (double t : c.times)
        c.analytic.push_back(analytic_survival(t, static_cast<double>(c.eta), c.half_width, c.s_inf));
    std::vector<double> lt;
    for (double t : c.times) lt.push_back(std::log10(t));
    for (double l : lt) {
        const auto first = std::lower_bound(lt.begin(), lt.end(), l - smoothing_dt);
        const auto last = std::upper_bound(lt.begin(), lt.end(), l + smoothing_dt);
        c.smoothing_counts.push_back(static_cast<double>(last - first));
    }
    return c;
}

CorrelationHole correlation_hole(const SurvivalCurve& c)
{
    if (c.times.empty() || c.eta < 2 || !(c.half_width > 0.0)) throw Error("correlation_hole: empty curve");
    // Search only once the sinc envelope eta/(dE t)^2 of the initial decay is
    // below a tenth of s_inf; earlier dips are zeros of that oscillation.
    const double t_start = std::sqrt(10.0 * static_cast<double>(c.eta)) / c.half_width;
    std::size_t best = c.times.size();
    for (std::size_t i = 0; i < c.times.size(); ++i) {
        if (c.times[i] < t_start) continue;
        if (best == c.times.size() || c.smoothed[i] < c.smoothed[best]) best = i;
    }
    if (best == c.times.size()) throw Error("correlation_hole: time grid ends before the hole region");
    CorrelationHole h;
    h.time = c.times[best];
    h.depth = c.s_inf - c.smoothed[best];
    const double l = std::log10(h.time);
    double s = 0.0;
    double s2 = 0.0;
    double n = 0.0;
    for (std::size_t i = 0; i < c.times.size(); ++i) {
        if (std::abs(std::log10(c.times[i]) - l) > c.smoothing_dt) continue;
        s += c.values[i];
        s2 += c.values[i] * c.values[i];
        n += 1.0;
    }
    const double mean = s / n;
    const double var = n > 1.0 ? std::max(0.0, (s2 - n * mean * mean) / (n - 1.0)) : 0.0;
    const double se = std::sqrt(var / n);
    h.significance = se > 0.0 ? h.depth / se : (h.depth > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return h;
}

RampAgreement ramp_agreement(const SurvivalCurve& c)
{
    if (c.times.empty() || c.eta < 2 || !(c.half_width > 0.0)) throw Error("ramp_agreement: empty curve");
    // The analytic curve goes through the same moving average as the data,
    // so the sinc oscillations near the hole do not count as disagreement.
    const std::vector<double> model = moving_log_average(c.times, c.analytic, c.smoothing_dt);
    const double eta = static_cast<double>(c.eta);
    const double t_start = std::sqrt(10.0 * eta) / c.half_width;
    RampAgreement r;
    r.t_end = std::numbers::pi * eta / c.half_width;
    std::size_t amin = c.times.size();
    for (std::size_t i = 0; i < c.times.size() && c.times[i] <= r.t_end; ++i) {
        if (c.times[i] < t_start) continue;
        if (amin == c.times.size() || model[i] < model[amin]) amin = i;
    }
    if (amin == c.times.size()) throw Error("ramp_agreement: time grid does not reach the ramp");
    double sum = 0.0;
    for (std::size_t i = amin; i < c.times.size() && c.times[i] <= r.t_end; ++i) {
        const double d = std::abs(c.smoothed[i] - model[i]) / model[i];
        r.max_deviation = std::max(r.max_deviation, d);
        sum += d;
        ++r.points;
    }
    r.t_begin = c.times[amin];
    r.mean_deviation = sum / static_cast<double>(r.points);
    return r;
}

} // namespace mwchaos
