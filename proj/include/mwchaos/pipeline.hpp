#pragma once

// End-to-end runs: one (N, W, tau, gamma) point through diagonalization,
// convergence certification and the enabled diagnostics, and grids of such
// points with a memory-bounded worker pool.

#include "mwchaos/cache.hpp"
#include "mwchaos/dynamics.hpp"
#include "mwchaos/eth.hpp"
#include "mwchaos/stats.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mwchaos {

struct DiagnosticToggles {
    bool brody = true;
    bool kurtosis = true;
    bool gamma = true;
    bool survival = false;
    bool any_needs_vectors() const noexcept { return kurtosis || gamma; }
};

enum class BrodyWindow {
    converged, ///< every converged level up to e_mid + dE (lowest 5% dropped by unfolding)
    energy,    ///< only levels inside [e_mid - dE, e_mid + dE]
};

struct PointConfig {
    HamiltonianParams params;
    long e_cut = 0;     ///< 0 picks the smallest certified cutoff automatically
    long max_e_cut = 0; ///< ceiling for the automatic search; 0 means 4 (e_mid + dE)
    CouplingScheme scheme = CouplingScheme::renormalized;
    double rel_tol = default_convergence_tolerance;
    double e_mid = 300.0;
    double half_width = 60.0;
    DiagnosticToggles diagnostics;
    BrodyOptions brody;
    BrodyWindow brody_window = BrodyWindow::converged;
    int gamma_bins = 50;
    TimeGrid time_grid;
    double smoothing_dt = 0.02;
};

struct DiagnosticsRecord {
    HamiltonianParams params;
    CouplingScheme scheme = CouplingScheme::renormalized;
    double e_mid = 0.0;
    double half_width = 0.0;
    std::optional<long> e_cut;
    std::optional<long> dimension;
    std::optional<double> converged_through;
    std::optional<long> eta;

    std::optional<double> beta;
    std::optional<double> beta_error;
    std::optional<double> beta_histogram;
    std::optional<long> spacing_count;
    std::optional<double> brody_window_min;
    std::optional<double> brody_window_max;

    std::optional<double> kurtosis;
    std::optional<double> gamma_pooled;
    std::optional<double> gamma_min_deviation; ///< min over reported bins of Gamma - pi/2
    std::optional<double> gamma_max_deviation;
    std::optional<long> gamma_bins_reported;

    std::optional<double> s_inf;
    std::optional<double> hole_depth;
    std::optional<double> hole_time;
    std::optional<double> hole_significance;
    std::optional<double> ramp_max_deviation; ///< max relative |smoothed - analytic| on the ramp
    std::optional<double> ramp_mean_deviation;

    std::vector<std::string> flags; ///< empty when every requested diagnostic completed
    std::string started;
    std::string finished;
    int cache_hits = 0;
    int cache_misses = 0;

    bool flagged() const noexcept { return !flags.empty(); }
};

/// Detailed outputs kept alongside a record for CSV and SVG export.
struct PointOutputs {
    std::optional<SpacingHistogram> histogram;
    std::optional<GammaTable> gamma;
    std::optional<SurvivalCurve> survival;
    std::vector<double> unfolded_spacings;
};

struct PointResult {
    DiagnosticsRecord record;
    PointOutputs outputs;
};

PointResult run_point(const PointConfig& config, const SpectrumCache* cache);

/// Cutoff and certified spectrum used by run_point; exposed for tools and tests.
struct CertifiedSpectrum {
    SpectralResult spectrum; ///< convergence mask filled in
    long reference_cutoff = 0;
    int cache_hits = 0;
    int cache_misses = 0;
};
/// With `with_vectors`, eigenvectors are computed for the energy window only.
CertifiedSpectrum certified_spectrum(const PointConfig& config, const SpectrumCache* cache, bool with_vectors);

struct GridAxis {
    double min = 0.0;
    double max = 0.0;
    int steps = 1;
    std::vector<double> values() const;
};

struct SweepConfig {
    std::vector<int> particles{4};
    std::vector<int> wells{2};
    GridAxis tau;
    GridAxis gamma;
    PointConfig point; ///< params ignored; everything else applies to every point
    std::filesystem::path output_dir;
    std::filesystem::path cache_dir;
    int workers = 1;
    double memory_budget_mb = 2048.0;
    bool write_point_files = true;
};

struct SweepSummary {
    std::optional<std::size_t> argmin_kurtosis;
    std::optional<std::size_t> argmax_beta;
};

struct SweepResult {
    std::vector<DiagnosticsRecord> records; ///< N, W, gamma, tau order (tau fastest)
    SweepSummary summary;
    bool all_clean() const;
};

/// Rough peak memory of one point in bytes, used for worker admission.
double estimated_point_bytes(const PointConfig& config);

SweepResult run_sweep(const SweepConfig& config);

/// Minimum kurtosis and maximum beta over the (tau, gamma) grid for each W.
struct WellsScanRow {
    int particles = 0;
    int wells = 0;
    std::optional<std::size_t> argmin_kurtosis;
    std::optional<std::size_t> argmax_beta;
};
struct WellsScanResult {
    SweepResult sweep;
    std::vector<WellsScanRow> rows;
};
WellsScanResult run_wells_scan(const SweepConfig& config);

} // namespace mwchaos
