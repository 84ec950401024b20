#include "mwchaos/stats.hpp"

#include "parallel.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

namespace mwchaos {

namespace {

constexpr double pi = std::numbers::pi;

void check_beta(double beta)
{
    if (!(beta > -1.0)) throw Error("Brody parameter must be > -1");
}

// Precomputed interval ends for the censored likelihood.
struct CensoredSample {
    std::vector<double> log_lo; // -inf where the interval starts at 0
    std::vector<double> log_hi;

    CensoredSample(const std::vector<double>& s, double resolution)
    {
        log_lo.reserve(s.size());
        log_hi.reserve(s.size());
        for (double x : s) {
            const double lo = x - 0.5 * resolution;
            log_lo.push_back(lo > 0.0 ? std::log(lo) : -std::numeric_limits<double>::infinity());
            log_hi.push_back(std::log(x + 0.5 * resolution));
        }
    }

    // sum_i w_i ln[F(hi_i) - F(lo_i)], with F = 1 - exp(-H), H = b s^(beta+1)
    double log_likelihood(double beta, const std::vector<int>* weights) const
    {
        const double k = beta + 1.0;
        const double b = brody_b(beta);
        double total = 0.0;
        for (std::size_t i = 0; i < log_hi.size(); ++i) {
            const int w = weights ? (*weights)[i] : 1;
            if (w == 0) continue;
            const double hlo = std::isinf(log_lo[i]) ? 0.0 : b * std::exp(k * log_lo[i]);
            const double hhi = b * std::exp(k * log_hi[i]);
            total += w * (-hlo + std::log(-std::expm1(hlo - hhi)));
        }
        return total;
    }
};

double argmax_on(const std::function<double(double)>& f, double lo, double hi, int grid)
{
    double best = lo;
    double best_value = -std::numeric_limits<double>::infinity();
    const double step = (hi - lo) / grid;
    for (int i = 0; i <= grid; ++i) {
        const double x = lo + i * step;
        const double v = f(x);
        if (v > best_value) {
            best_value = v;
            best = x;
        }
    }
    const double a = std::max(lo, best - step);
    const double c = std::min(hi, best + step);
    auto r = boost::math::tools::brent_find_minima([&](double x) { return -f(x); }, a, c, 40);
    return (-r.second >= best_value) ? r.first : best;
}

} // namespace

double SpacingSample::mean() const
{
    if (spacings.empty()) return 0.0;
    double s = 0.0;
    for (double x : spacings) s += x;
    return s / static_cast<double>(spacings.size());
}

SpacingSample spacings(std::span<const double> levels)
{
    if (levels.size() < 2) throw Error("spacings: need at least 2 levels");
    SpacingSample out;
    out.spacings.reserve(levels.size() - 1);
    for (std::size_t i = 1; i < levels.size(); ++i) {
        const double s = levels[i] - levels[i - 1];
        if (s < 0.0) throw Error("spacings: levels must be ascending");
        out.spacings.push_back(s);
    }
    return out;
}

SpacingSample spacings(const UnfoldedSpectrum& unfolded)
{
    SpacingSample out = spacings(std::span<const double>(unfolded.levels));
    out.window_min = unfolded.window_min;
    out.window_max = unfolded.window_max;
    return out;
}

double brody_b(double beta)
{
    check_beta(beta);
    const double k = beta + 1.0;
    return std::pow(std::tgamma((beta + 2.0) / k), k);
}

double brody_pdf(double s, double beta)
{
    check_beta(beta);
    if (s < 0.0) throw Error("brody_pdf: spacing must be non-negative");
    const double b = brody_b(beta);
    if (beta == 0.0) return std::exp(-s);
    if (s == 0.0) return beta > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return (beta + 1.0) * b * std::pow(s, beta) * std::exp(-b * std::pow(s, beta + 1.0));
}

double brody_cdf(double s, double beta)
{
    check_beta(beta);
    if (s <= 0.0) return 0.0;
    return -std::expm1(-brody_b(beta) * std::pow(s, beta + 1.0));
}

double poisson_pdf(double s) { return std::exp(-s); }

double wigner_dyson_pdf(double s) { return 0.5 * pi * s * std::exp(-0.25 * pi * s * s); }

std::string to_string(FitMethod method)
{
    return method == FitMethod::maximum_likelihood ? "mle" : "histogram_lsq";
}

BrodyFit fit_brody(const SpacingSample& sample, const BrodyOptions& options)
{
    const auto& s = sample.spacings;
    if (s.size() < 2) throw Error("fit_brody: need at least 2 spacings");
    if (std::all_of(s.begin(), s.end(), [](double x) { return x == 0.0; }))
        throw Error("fit_brody: degenerate sample, all spacings are zero");
    if (std::any_of(s.begin(), s.end(), [](double x) { return !(x >= 0.0) || !std::isfinite(x); }))
        throw Error("fit_brody: spacings must be finite and non-negative");
    if (!(options.resolution > 0.0)) throw Error("fit_brody: resolution must be positive");

    const CensoredSample data(s, options.resolution);
    const double lo = brody_beta_min + 1e-6;
    const double hi = brody_beta_max;

    BrodyFit fit;
    fit.method = FitMethod::maximum_likelihood;
    fit.beta = argmax_on([&](double b) { return data.log_likelihood(b, nullptr); }, lo, hi, 120);
    fit.b = brody_b(fit.beta);
    fit.log_likelihood = data.log_likelihood(fit.beta, nullptr) - static_cast<double>(s.size()) *
                                                                        std::log(options.resolution);

    const int resamples = options.bootstrap_resamples;
    if (resamples > 1) {
        // Resample indices serially so the result does not depend on threading.
        std::mt19937_64 rng(options.seed);
        std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
        std::vector<std::vector<int>> weights(static_cast<std::size_t>(resamples), std::vector<int>(s.size(), 0));
        for (auto& w : weights)
            for (std::size_t i = 0; i < s.size(); ++i) ++w[pick(rng)];
        std::vector<double> betas(static_cast<std::size_t>(resamples));
        const double blo = std::max(lo, fit.beta - 0.4);
        const double bhi = std::min(hi, fit.beta + 0.4);
        parallel_for(static_cast<std::size_t>(resamples), [&](std::size_t r) {
            betas[r] = argmax_on([&](double b) { return data.log_likelihood(b, &weights[r]); }, blo, bhi, 16);
        });
        double mean = 0.0;
        for (double b : betas) mean += b;
        mean /= resamples;
        double var = 0.0;
        for (double b : betas) var += (b - mean) * (b - mean);
        fit.fit_error = std::sqrt(var / (resamples - 1));
    }
    return fit;
}

BrodyFit fit_brody_histogram(const SpacingSample& sample, int bins, double s_max)
{
    if (bins < 2 || !(s_max > 0.0)) throw Error("fit_brody_histogram: need bins >= 2 and s_max > 0");
    if (sample.spacings.empty()) throw Error("fit_brody_histogram: empty sample");
    const SpacingHistogram h = spacing_histogram(sample, 0.0, bins, s_max);
    auto sse = [&](double beta) {
        double r = 0.0;
        for (std::size_t i = 0; i < h.bin_centers.size(); ++i) {
            const double d = h.empirical[i] - brody_pdf(h.bin_centers[i], beta);
            r += d * d;
        }
        return r;
    };
    BrodyFit fit;
    fit.method = FitMethod::histogram_least_squares;
    fit.beta = argmax_on([&](double b) { return -sse(b); }, brody_beta_min + 1e-6, brody_beta_max, 120);
    fit.b = brody_b(fit.beta);
    fit.fit_error = std::sqrt(sse(fit.beta) / bins);
    return fit;
}

SpacingHistogram spacing_histogram(const SpacingSample& sample, double beta, int bins, double s_max)
{
    if (bins < 1 || !(s_max > 0.0)) throw Error("spacing_histogram: need bins >= 1 and s_max > 0");
    const double width = s_max / bins;
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (double s : sample.spacings) {
        if (s < 0.0 || s >= s_max) continue;
        counts[std::min(static_cast<std::size_t>(s / width), counts.size() - 1)] += 1.0;
    }
    const double norm = sample.spacings.empty() ? 0.0 : 1.0 / (static_cast<double>(sample.spacings.size()) * width);
    SpacingHistogram h;
    for (int i = 0; i < bins; ++i) {
        const double c = (i + 0.5) * width;
        h.bin_centers.push_back(c);
        h.empirical.push_back(counts[static_cast<std::size_t>(i)] * norm);
        h.brody.push_back(brody_pdf(c, beta));
        h.poisson.push_back(poisson_pdf(c));
        h.wigner_dyson.push_back(wigner_dyson_pdf(c));
    }
    return h;
}

} // namespace mwchaos
