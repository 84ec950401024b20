#pragma once

// Exactly solvable limits of the multi-well model: the single-particle
// multi-barrier spectrum, the four corner models (tau, gamma in {0, inf}) and
// Tonks-Girardeau composition of single-particle levels.

#include <span>
#include <vector>

namespace mwchaos {

struct KPLevels {
    int wells = 1;
    double tau = 0.0;
    std::vector<double> energies; ///< ascending
    std::vector<int> parities;    ///< +1 / -1 under x -> pi - x
    double e_max = 0.0;           ///< every level <= e_max is listed
};

/// All single-particle levels <= e_max in the box with W-1 delta barriers of
/// strength tau.
KPLevels kp_levels(int wells, double tau, double e_max);

/// The lowest `count` single-particle levels.
KPLevels kp_levels_count(int wells, double tau, int count);

struct Level {
    double energy = 0.0;
    long degeneracy = 1;
    int parity = +1;
};

struct CornerSpectrum {
    int corner = 0; ///< 1..4, or 0 for a composed spectrum
    int particles = 0;
    int wells = 1;
    std::vector<Level> levels; ///< ascending energy, positive-parity bosonic sector
    /// Energies repeated by degeneracy.
    std::vector<double> expanded() const;
};

/// Corner models in the positive-parity bosonic sector, all levels <= e_cut:
///  1 free bosons, 2 hard-core bosons, 3 decoupled wells, 4 decoupled wells
///  with hard-core bosons inside each well.
CornerSpectrum corner_spectrum(int corner, int particles, int wells, long e_cut);

/// Number of states of N distinguishable particles (any symmetry) with
/// energy <= e in the given corner.
long corner_total_count(int corner, int particles, int wells, long e);

/// Hard-core bosons built from distinct single-particle levels, positive
/// parity only, levels <= e_cut. Degeneracies group energies equal to 1e-9
/// relative.
CornerSpectrum tg_compose(const KPLevels& kp, int particles, double e_cut);

} // namespace mwchaos
