#pragma once

// On-disk store of diagonalized spectra, keyed by the exact bit patterns of
// (N, W, tau, gamma, E_cut, scheme). Values-only and with-vectors solves are
// kept apart so a reader always gets the bits of the same kind of solve.

#include "mwchaos/spectrum.hpp"

#include <filesystem>
#include <optional>

namespace mwchaos {

class SpectrumCache {
public:
    static constexpr std::uint32_t format_version = 1;

    explicit SpectrumCache(std::filesystem::path dir);

    const std::filesystem::path& directory() const noexcept { return dir_; }

    std::filesystem::path path_for(const HamiltonianParams& params, long energy_cutoff, CouplingScheme scheme,
                                   bool vectors) const;

    /// Returns the cached spectrum of the requested kind when present.
    /// Corrupt or mismatching files count as misses.
    std::optional<SpectralResult> load(const HamiltonianParams& params, long energy_cutoff, CouplingScheme scheme,
                                       bool need_vectors) const;

    /// Writes atomically: a temporary file in the same directory is renamed
    /// over the final name.
    void store(const SpectralResult& result) const;

private:
    std::filesystem::path dir_;
};

/// Directory named by MWCHAOS_CACHE_DIR, or empty when unset.
std::filesystem::path cache_dir_from_env();

/// Solves through the cache when one is given. `hit` reports whether the
/// spectrum came from disk.
SpectralResult solve_cached(const SpectrumCache* cache, const HamiltonianParams& params, long energy_cutoff,
                            CouplingScheme scheme, bool with_vectors, bool* hit = nullptr);
/// Window variant: a cached with-vectors solve is reused when its columns
/// cover every eigenvalue inside `vectors`; otherwise it is recomputed and replaced.
SpectralResult solve_cached(const SpectrumCache* cache, const HamiltonianParams& params, long energy_cutoff,
                            CouplingScheme scheme, EnergyRange vectors, bool* hit = nullptr);

} // namespace mwchaos
