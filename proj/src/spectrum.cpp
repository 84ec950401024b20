#include "mwchaos/spectrum.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mwchaos {

namespace {

/// Largest-magnitude component of every column made positive.
void fix_signs(Eigen::MatrixXd& v)
{
    for (Eigen::Index k = 0; k < v.cols(); ++k) {
        Eigen::Index imax = 0;
        v.col(k).cwiseAbs().maxCoeff(&imax);
        if (v(imax, k) < 0.0) v.col(k) *= -1.0;
    }
}

void check(lapack_int info, const char* routine)
{
    if (info != 0) throw Error(std::string("diagonalize: ") + routine + " failed with info=" + std::to_string(info));
}

} // namespace

Eigensystem diagonalize(SymMatrix h, bool with_vectors)
{
    Eigen::MatrixXd a = h.release();
    const auto n = static_cast<lapack_int>(a.rows());
    if (!a.allFinite()) throw Error("diagonalize: matrix has non-finite entries");
    if (!with_vectors) {
        // Shares the reduction of the window path so both give the same bits.
        const double inf = std::numeric_limits<double>::infinity();
        Eigensystem out = diagonalize(SymMatrix::from_dense(std::move(a)), EnergyRange{inf, inf});
        out.vector_offset = 0;
        return out;
    }
    Eigensystem out;
    out.values.resize(n);
    if (n == 0) return out;
    check(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, a.data(), n, out.values.data()), "dsyevd");
    fix_signs(a);
    out.vectors = std::move(a);
    return out;
}

Eigensystem diagonalize(SymMatrix h, EnergyRange vectors)
{
    Eigen::MatrixXd a = h.release();
    const auto n = static_cast<lapack_int>(a.rows());
    if (!a.allFinite()) throw Error("diagonalize: matrix has non-finite entries");
    Eigensystem out;
    out.values.resize(n);
    if (n == 0) return out;
    Eigen::VectorXd d(n), e(n), tau(std::max<lapack_int>(n - 1, 1));
    check(LAPACKE_dsytrd(LAPACK_COL_MAJOR, 'U', n, a.data(), n, d.data(), e.data(), tau.data()), "dsytrd");
    out.values = d;
    Eigen::VectorXd e2 = e;
    check(LAPACKE_dsterf(n, out.values.data(), e2.data()), "dsterf");

    const double* v = out.values.data();
    const auto first = std::lower_bound(v, v + n, vectors.min) - v;
    const auto last = std::upper_bound(v, v + n, vectors.max) - v;
    out.vector_offset = first;
    if (last <= first) return out;
    const auto m_req = static_cast<lapack_int>(last - first);
    Eigen::MatrixXd z(n, m_req);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(m_req));
    Eigen::VectorXd w(n);
    lapack_int m = 0;
    lapack_logical tryrac = 1;
    check(LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', 'I', n, d.data(), e.data(), 0.0, 0.0, static_cast<lapack_int>(first + 1),
                         static_cast<lapack_int>(last), &m, w.data(), z.data(), n, m_req, support.data(), &tryrac),
          "dstemr");
    if (m != m_req) throw Error("diagonalize: dstemr returned an unexpected number of vectors");
    check(LAPACKE_dormtr(LAPACK_COL_MAJOR, 'L', 'U', 'N', n, m, a.data(), n, tau.data(), z.data(), n), "dormtr");
    a.resize(0, 0);
    fix_signs(z);
    out.vectors = std::move(z);
    return out;
}

bool SpectralResult::vectors_cover(Eigen::Index first, Eigen::Index count) const noexcept
{
    return has_vectors() && first >= vector_offset && count >= 0 &&
           first + count <= vector_offset + eigenvectors.cols();
}

Eigen::Index SpectralResult::converged_count() const noexcept
{
    Eigen::Index k = 0;
    while (k < static_cast<Eigen::Index>(converged.size()) && converged[static_cast<std::size_t>(k)]) ++k;
    return k;
}

double SpectralResult::converged_energy() const noexcept
{
    const Eigen::Index k = converged_count();
    if (k == 0) return -std::numeric_limits<double>::infinity();
    return eigenvalues(k - 1);
}

namespace {

template <typename Vectors>
SpectralResult solve_with(const HamiltonianParams& params, long energy_cutoff, CouplingScheme scheme, Vectors vectors)
{
    params.validate();
    SectorBasis basis = build_basis(params.particles, energy_cutoff, ParityFilter::positive);
    SpectralResult r;
    r.params = params;
    r.energy_cutoff = energy_cutoff;
    r.scheme = scheme;
    r.basis_energies = basis.energies();
    auto eig = diagonalize(assemble_hamiltonian(basis, params, scheme), vectors);
    r.eigenvalues = std::move(eig.values);
    r.eigenvectors = std::move(eig.vectors);
    r.vector_offset = eig.vector_offset;
    return r;
}

} // namespace

SpectralResult solve_sector(const HamiltonianParams& params, long energy_cutoff, CouplingScheme scheme,
                            bool with_vectors)
{
    return solve_with(params, energy_cutoff, scheme, with_vectors);
}

SpectralResult solve_sector(const HamiltonianParams& params, long energy_cutoff, CouplingScheme scheme,
                            EnergyRange vectors)
{
    return solve_with(params, energy_cutoff, scheme, vectors);
}

std::vector<bool> convergence_filter(const SpectralResult& result, const SpectralResult& larger, double rel_tol)
{
    if (!(result.params == larger.params) || result.scheme != larger.scheme)
        throw Error("convergence_filter: spectra were computed for different Hamiltonians");
    if (5 * larger.energy_cutoff < 6 * result.energy_cutoff)
        throw Error("convergence_filter: reference cutoff must be at least 1.2 times larger");
    if (larger.dim() < result.dim()) throw Error("convergence_filter: reference spectrum is smaller");
    std::vector<bool> mask(static_cast<std::size_t>(result.dim()), false);
    for (Eigen::Index k = 0; k < result.dim(); ++k) {
        const double e = result.eigenvalues(k);
        const double diff = std::abs(e - larger.eigenvalues(k)) / std::max(1.0, std::abs(e));
        if (!(diff <= rel_tol)) break;
        mask[static_cast<std::size_t>(k)] = true;
    }
    return mask;
}

double UnfoldedSpectrum::mean_spacing() const
{
    if (levels.size() < 2) return 0.0;
    return (levels.back() - levels.front()) / static_cast<double>(levels.size() - 1);
}

UnfoldedSpectrum unfold(std::span<const double> levels, int particles, EnergyRange window)
{
    if (particles < 1) throw Error("unfold: particle count must be >= 1");
    if (!std::is_sorted(levels.begin(), levels.end())) throw Error("unfold: levels must be ascending");
    const std::size_t skip = levels.size() / 20;
    const std::size_t nfit = levels.size() - skip;
    const int terms = particles + 1;
    if (nfit < 50) throw Error("unfold: need at least 50 levels above the discarded 5%, got " + std::to_string(nfit));
    if (levels[skip] < 0.0) throw Error("unfold: staircase model needs non-negative energies");

    const double eref = std::max(levels.back(), std::numeric_limits<double>::min());
    Eigen::MatrixXd a(static_cast<Eigen::Index>(nfit), terms);
    Eigen::VectorXd y(static_cast<Eigen::Index>(nfit));
    for (std::size_t i = 0; i < nfit; ++i) {
        const double x = levels[skip + i] / eref;
        for (int j = 0; j < terms; ++j) a(static_cast<Eigen::Index>(i), j) = std::pow(x, 0.5 * j);
        y(static_cast<Eigen::Index>(i)) = static_cast<double>(skip + i) + 0.5;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-12);
    if (qr.rank() < terms) {
        throw Error("unfold: staircase fit is ill-conditioned (rank " + std::to_string(qr.rank()) + " of " +
                    std::to_string(terms) + " over E in [" + std::to_string(levels[skip]) + ", " +
                    std::to_string(levels.back()) + "])");
    }
    const Eigen::VectorXd c = qr.solve(y);

    UnfoldedSpectrum out;
    out.window_min = std::max(window.min, levels[skip]);
    out.window_max = std::min(window.max, levels.back());
    out.coefficients.resize(static_cast<std::size_t>(terms));
    for (int j = 0; j < terms; ++j) out.coefficients[static_cast<std::size_t>(j)] = c(j) / std::pow(eref, 0.5 * j);
    for (std::size_t i = skip; i < levels.size(); ++i) {
        const double e = levels[i];
        if (e < out.window_min || e > out.window_max) continue;
        double s = 0.0;
        for (int j = 0; j < terms; ++j) s += c(j) * std::pow(e / eref, 0.5 * j);
        out.energies.push_back(e);
        out.levels.push_back(s);
    }
    if (out.levels.size() < 50)
        throw Error("unfold: need at least 50 levels in the window, got " + std::to_string(out.levels.size()));
    if (!std::is_sorted(out.levels.begin(), out.levels.end()))
        throw Error("unfold: fitted staircase is not monotone over the window");
    const double m = out.mean_spacing();
    if (!(m > 0.0)) throw Error("unfold: degenerate window");
    out.scale = 1.0 / m;
    for (double& v : out.levels) v *= out.scale;
    return out;
}

double dos_model(int particles, double energy, DosMode mode)
{
    if (particles < 1) throw Error("dos_model: particle count must be >= 1");
    if (!(energy > 0.0)) throw Error("dos_model: energy must be positive");
    const double n = particles;
    const double ball = std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
    const double nfact = std::tgamma(n + 1.0);
    switch (mode) {
    case DosMode::sector_density:
        return ball * std::pow(energy, n / 2.0 - 1.0) / (std::pow(2.0, n + 2.0) * std::tgamma(n + 2.0));
    case DosMode::total_count:
        return ball * std::pow(energy, n / 2.0) / std::pow(2.0, n);
    case DosMode::sector_weyl:
        return (n / 2.0) * ball * std::pow(energy, n / 2.0 - 1.0) / std::pow(2.0, n) / (2.0 * nfact);
    }
    throw Error("dos_model: unknown mode");
}

DensityFit fit_level_density(std::span<const double> levels, double e_min, double e_max, int bins)
{
    if (!(e_max > e_min) || e_min <= 0.0) throw Error("fit_level_density: need 0 < e_min < e_max");
    if (bins < 3) throw Error("fit_level_density: need at least 3 bins");
    const double width = (e_max - e_min) / bins;
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (double e : levels) {
        if (e < e_min || e >= e_max) continue;
        auto b = static_cast<std::size_t>((e - e_min) / width);
        counts[std::min(b, counts.size() - 1)] += 1.0;
    }
    DensityFit fit;
    for (int b = 0; b < bins; ++b) {
        if (counts[static_cast<std::size_t>(b)] == 0.0) continue;
        fit.bin_centers.push_back(e_min + (b + 0.5) * width);
        fit.densities.push_back(counts[static_cast<std::size_t>(b)] / width);
    }
    const auto m = static_cast<Eigen::Index>(fit.bin_centers.size());
    if (m < 3) throw Error("fit_level_density: fewer than 3 occupied bins");
    Eigen::MatrixXd a(m, 2);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = std::log(fit.bin_centers[static_cast<std::size_t>(i)]);
        y(i) = std::log(fit.densities[static_cast<std::size_t>(i)]);
    }
    const Eigen::Vector2d c = a.colPivHouseholderQr().solve(y);
    fit.log_prefactor = c(0);
    fit.exponent = c(1);
    return fit;
}

} // namespace mwchaos
