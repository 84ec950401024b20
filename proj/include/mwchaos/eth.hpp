#pragma once

// Off-diagonal eigenstate-thermalization diagnostics of the kinetic energy:
// matrix elements between eigenstates in an energy window, their kurtosis and
// the Gaussianity ratio Gamma(omega).

#include "mwchaos/spectrum.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace mwchaos {

struct EnergyWindow {
    double e_mid = 0.0;
    double half_width = 0.0;
    Eigen::Index first = 0; ///< index of the lowest eigenstate inside
    Eigen::Index count = 0; ///< eta
    Eigen::Index eta() const noexcept { return count; }
};

/// Eigenstates with E in [e_mid - dE, e_mid + dE]. Checks nothing about
/// convergence; throws when the window is empty.
EnergyWindow window_indices(std::span<const double> eigenvalues, double e_mid, double half_width);

/// As above, but requires every level up to e_mid + dE to be converged.
EnergyWindow window_indices(const SpectralResult& spectral, double e_mid, double half_width);

/// X^T diag(observable) X with X the window's eigenvectors.
Eigen::MatrixXd observable_in_eigenbasis(const SpectralResult& spectral, const Eigen::VectorXd& observable,
                                         const EnergyWindow& window);

struct OffDiagSet {
    std::vector<double> values; ///< O_mn, m < n
    std::vector<double> omegas; ///< |E_m - E_n|
};

OffDiagSet off_diagonal(const Eigen::MatrixXd& window_matrix, std::span<const double> window_energies);

/// Population kurtosis <(x - <x>)^4> / sigma^4.
double kurtosis(std::span<const double> values);

struct GammaBin {
    double center = 0.0;
    double gamma = 0.0; ///< meaningful only when reported
    long pair_count = 0;
    bool reported = false; ///< false when the bin has too few pairs
};

struct GammaTable {
    std::vector<GammaBin> bins;
    double pooled = 0.0; ///< Gamma over all pairs in [0, omega_max]
    int skipped = 0;
};

/// <x^2> / <|x|>^2 for one set of values.
double gamma_ratio(std::span<const double> values);

/// Gamma per omega bin on [0, omega_max] (usually 2 dE).
GammaTable gamma_ratio(const OffDiagSet& offdiag, double omega_max, int bins = 50, long min_pairs = 20);

struct EthDiagnostics {
    EnergyWindow window;
    double kurtosis = 0.0;
    GammaTable gamma;
};

/// Full off-diagonal analysis of the kinetic energy in one window.
EthDiagnostics analyze_eth(const SpectralResult& spectral, double e_mid, double half_width, int bins = 50);

} // namespace mwchaos
