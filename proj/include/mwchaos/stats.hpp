#pragma once

// Nearest-neighbour spacing statistics of unfolded spectra and estimation of
// the Brody parameter.

#include "mwchaos/spectrum.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mwchaos {

struct SpacingSample {
    std::vector<double> spacings; ///< unfolded units, exact zeros kept
    double window_min = 0.0;      ///< raw-energy window the levels came from
    double window_max = 0.0;
    double mean() const;
};

SpacingSample spacings(const UnfoldedSpectrum& unfolded);
SpacingSample spacings(std::span<const double> unfolded_levels);

constexpr double brody_beta_min = -0.9; ///< open bound
constexpr double brody_beta_max = 1.5;

/// Normalisation b = Gamma((beta+2)/(beta+1))^(beta+1), which fixes <s> = 1.
double brody_b(double beta);
double brody_pdf(double s, double beta);
double brody_cdf(double s, double beta);
double poisson_pdf(double s);
double wigner_dyson_pdf(double s);

enum class FitMethod { maximum_likelihood, histogram_least_squares };
std::string to_string(FitMethod method);

struct BrodyFit {
    double beta = 0.0;
    double b = 1.0;
    double fit_error = 0.0; ///< bootstrap standard error (MLE) or rms residual (histogram)
    FitMethod method = FitMethod::maximum_likelihood;
    double log_likelihood = 0.0;
};

struct BrodyOptions {
    int bootstrap_resamples = 200;
    std::uint64_t seed = 20240611;
    /// Spacings are treated as measured to this resolution: each contributes
    /// ln[F(s + r/2) - F(s - r/2)], so exact zeros keep a finite likelihood.
    double resolution = 1e-4;
};

/// Maximum-likelihood Brody fit on (-0.9, 1.5].
BrodyFit fit_brody(const SpacingSample& sample, const BrodyOptions& options = {});

/// Least-squares fit of brody_pdf to the normalised histogram over [0, s_max].
BrodyFit fit_brody_histogram(const SpacingSample& sample, int bins = 40, double s_max = 4.0);

struct SpacingHistogram {
    std::vector<double> bin_centers;
    std::vector<double> empirical;
    std::vector<double> brody;
    std::vector<double> poisson;
    std::vector<double> wigner_dyson;
};

SpacingHistogram spacing_histogram(const SpacingSample& sample, double beta, int bins = 40, double s_max = 4.0);

} // namespace mwchaos
