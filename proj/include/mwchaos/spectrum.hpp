#pragma once

#include "mwchaos/hilbert.hpp"

#include <Eigen/Dense>

#include <limits>
#include <span>
#include <vector>

namespace mwchaos {

struct EnergyRange {
    double min = -std::numeric_limits<double>::infinity();
    double max = std::numeric_limits<double>::infinity();
};

struct Eigensystem {
    Eigen::VectorXd values;       ///< ascending
    Eigen::MatrixXd vectors;      ///< column k belongs to values(vector_offset + k); empty when not requested
    Eigen::Index vector_offset = 0;
};

/// Dense symmetric eigendecomposition: dsyevd with vectors, tridiagonal
/// reduction plus dsterf without (the same values as the window overload). Each eigenvector
/// is signed so that its largest-magnitude component is positive.
Eigensystem diagonalize(SymMatrix h, bool with_vectors = true);

/// Every eigenvalue, but eigenvectors only for the eigenvalues inside
/// `vectors` (inclusive). One tridiagonal reduction, MRRR for the selected
/// vectors: memory is one n x n matrix plus n x (selected) columns.
Eigensystem diagonalize(SymMatrix h, EnergyRange vectors);

/// A diagonalized Hamiltonian together with what is needed to reproduce it.
struct SpectralResult {
    HamiltonianParams params;
    long energy_cutoff = 0;
    CouplingScheme scheme = CouplingScheme::bare;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;     ///< may be empty (values-only solves); may hold a window only
    Eigen::Index vector_offset = 0;   ///< eigenvalue index of the first eigenvector column
    Eigen::VectorXd basis_energies;   ///< e0 of the Fock basis, the kinetic-energy observable
    std::vector<bool> converged;      ///< prefix mask; empty until a convergence check ran

    Eigen::Index dim() const noexcept { return eigenvalues.size(); }
    bool has_vectors() const noexcept { return eigenvectors.size() > 0; }
    /// True when eigenvectors of levels [first, first + count) are stored.
    bool vectors_cover(Eigen::Index first, Eigen::Index count) const noexcept;
    /// Number of leading converged levels.
    Eigen::Index converged_count() const noexcept;
    /// Highest energy E such that every level <= E is converged (or -inf).
    double converged_energy() const noexcept;
};

/// Builds the [N]+ basis, assembles and diagonalizes.
SpectralResult solve_sector(const HamiltonianParams& params, long energy_cutoff,
                            CouplingScheme scheme = CouplingScheme::renormalized, bool with_vectors = true);
/// As above with eigenvectors only for eigenvalues inside `vectors`.
SpectralResult solve_sector(const HamiltonianParams& params, long energy_cutoff, CouplingScheme scheme,
                            EnergyRange vectors);

constexpr double default_convergence_tolerance = 1e-3;

/// Level k is converged iff |E_j - E'_j| / max(1, |E_j|) <= rel_tol for all
/// j <= k, where E' comes from a basis with cutoff at least 1.2 times larger.
std::vector<bool> convergence_filter(const SpectralResult& result, const SpectralResult& larger,
                                     double rel_tol = default_convergence_tolerance);

/// Spectrum mapped to unit mean level spacing by a smooth staircase fit
/// N(E) = sum_{j=0..N} c_j E^{j/2}.
struct UnfoldedSpectrum {
    std::vector<double> levels;      ///< unfolded, ascending
    std::vector<double> energies;    ///< the raw levels that were unfolded
    double window_min = 0.0;
    double window_max = 0.0;
    std::vector<double> coefficients; ///< c_j for E^{j/2}, j = 0..N, in raw energy units
    double scale = 1.0;               ///< final normalisation applied to reach unit mean spacing
    double mean_spacing() const;
};

/// `levels` are the converged eigenvalues (ascending). The lowest 5% of them
/// are excluded from the fit, then levels inside `window` are unfolded.
UnfoldedSpectrum unfold(std::span<const double> levels, int particles, EnergyRange window = {});

enum class DosMode {
    sector_density, ///< leading [N]+ density as displayed in the model's DOS formula
    total_count,    ///< number of states (any symmetry) below E
    sector_weyl,    ///< d/dE of total_count divided by 2 N! (parity and exchange)
};

double dos_model(int particles, double energy, DosMode mode);

/// Log-log slope of the histogram level density of `levels` over
/// [e_min, e_max] using `bins` equal-width bins.
struct DensityFit {
    double exponent = 0.0;
    double log_prefactor = 0.0;
    std::vector<double> bin_centers;
    std::vector<double> densities;
};
DensityFit fit_level_density(std::span<const double> levels, double e_min, double e_max, int bins = 12);

} // namespace mwchaos
