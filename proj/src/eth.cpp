#include "mwchaos/eth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mwchaos {

EnergyWindow window_indices(std::span<const double> eigenvalues, double e_mid, double half_width)
{
    if (!(half_width > 0.0)) throw Error("energy window half-width must be positive");
    const double lo = e_mid - half_width;
    const double hi = e_mid + half_width;
    auto first = std::lower_bound(eigenvalues.begin(), eigenvalues.end(), lo);
    auto last = std::upper_bound(eigenvalues.begin(), eigenvalues.end(), hi);
    if (first >= last) {
        std::ostringstream msg;
        msg << "energy window [" << lo << ", " << hi << "] contains no eigenstates";
        throw Error(msg.str());
    }
    EnergyWindow w;
    w.e_mid = e_mid;
    w.half_width = half_width;
    w.first = first - eigenvalues.begin();
    w.count = last - first;
    return w;
}

EnergyWindow window_indices(const SpectralResult& spectral, double e_mid, double half_width)
{
    const double top = e_mid + half_width;
    const Eigen::Index n = spectral.converged_count();
    const bool certified = !spectral.converged.empty() &&
                           ((n < spectral.dim() && spectral.eigenvalues(n) > top) ||
                            (n == spectral.dim() && n > 0 && spectral.eigenvalues(n - 1) >= top));
    if (!certified) {
        const double reached = n > 0 ? spectral.eigenvalues(n - 1) : 0.0;
        const double scale = reached > 0.0 ? top / reached : 2.0;
        const long suggest = static_cast<long>(std::ceil(1.2 * std::max(scale, 1.1) * spectral.energy_cutoff));
        std::ostringstream msg;
        msg << "energy window up to " << top << " is not converged at E_cut=" << spectral.energy_cutoff;
        if (spectral.converged.empty())
            msg << " (no convergence check was run)";
        else
            msg << " (converged through " << reached << ")";
        msg << "; required E_cut is roughly " << suggest << " or more";
        throw Error(msg.str());
    }
    return window_indices(std::span<const double>(spectral.eigenvalues.data(), static_cast<std::size_t>(n)), e_mid,
                          half_width);
}

Eigen::MatrixXd observable_in_eigenbasis(const SpectralResult& spectral, const Eigen::VectorXd& observable,
                                         const EnergyWindow& window)
{
    if (!spectral.has_vectors()) throw Error("observable_in_eigenbasis: eigenvectors were not computed");
    if (observable.size() != spectral.eigenvectors.rows())
        throw Error("observable_in_eigenbasis: observable length does not match the basis");
    const Eigen::Index limit = spectral.converged.empty() ? spectral.dim() : spectral.converged_count();
    if (window.first < 0 || window.count < 1 || window.first + window.count > limit)
        throw Error("observable_in_eigenbasis: window indices outside the converged range");
    if (!spectral.vectors_cover(window.first, window.count))
        throw Error("observable_in_eigenbasis: eigenvectors of the window were not computed");
    const auto x = spectral.eigenvectors.middleCols(window.first - spectral.vector_offset, window.count);
    const Eigen::MatrixXd y = observable.asDiagonal() * x;
    Eigen::MatrixXd o = x.transpose() * y;
    // Exact symmetry, so m<n and n<m elements are the same number.
    for (Eigen::Index j = 0; j < o.cols(); ++j)
        for (Eigen::Index i = 0; i < j; ++i) o(j, i) = o(i, j);
    return o;
}

OffDiagSet off_diagonal(const Eigen::MatrixXd& m, std::span<const double> energies)
{
    if (m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) != energies.size())
        throw Error("off_diagonal: matrix and energy list sizes differ");
    OffDiagSet out;
    const auto n = static_cast<std::size_t>(m.rows());
    out.values.reserve(n * (n - 1) / 2);
    out.omegas.reserve(n * (n - 1) / 2);
    for (std::size_t j = 1; j < n; ++j) {
        for (std::size_t i = 0; i < j; ++i) {
            out.values.push_back(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            out.omegas.push_back(std::abs(energies[j] - energies[i]));
        }
    }
    return out;
}

double kurtosis(std::span<const double> values)
{
    if (values.size() < 4) throw Error("kurtosis: need at least 4 values");
    const auto n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double v : values) {
        const double d = (v - mean) * (v - mean);
        m2 += d;
        m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
    if (!(m2 > 0.0) || m2 <= 1e-28 * (mean * mean)) throw Error("kurtosis: zero variance");
    return m4 / (m2 * m2);
}

double gamma_ratio(std::span<const double> values)
{
    if (values.empty()) throw Error("gamma_ratio: no values");
    double sq = 0.0;
    double ab = 0.0;
    for (double v : values) {
        sq += v * v;
        ab += std::abs(v);
    }
    if (!(ab > 0.0)) throw Error("gamma_ratio: all values are zero");
    const auto n = static_cast<double>(values.size());
    return (sq / n) / ((ab / n) * (ab / n));
}

GammaTable gamma_ratio(const OffDiagSet& offdiag, double omega_max, int bins, long min_pairs)
{
    if (bins < 1 || !(omega_max > 0.0)) throw Error("gamma_ratio: need bins >= 1 and omega_max > 0");
    if (offdiag.values.size() != offdiag.omegas.size()) throw Error("gamma_ratio: malformed pair set");
    const double width = omega_max / bins;
    std::vector<std::vector<double>> grouped(static_cast<std::size_t>(bins));
    std::vector<double> pooled;
    for (std::size_t k = 0; k < offdiag.values.size(); ++k) {
        const double w = offdiag.omegas[k];
        if (w < 0.0 || w > omega_max) continue;
        grouped[std::min(static_cast<std::size_t>(w / width), grouped.size() - 1)].push_back(offdiag.values[k]);
        pooled.push_back(offdiag.values[k]);
    }
    if (pooled.empty()) throw Error("gamma_ratio: no pairs inside the frequency range");
    GammaTable table;
    table.pooled = gamma_ratio(pooled);
    for (int b = 0; b < bins; ++b) {
        GammaBin bin;
        const auto& vals = grouped[static_cast<std::size_t>(b)];
        bin.center = (b + 0.5) * width;
        bin.pair_count = static_cast<long>(vals.size());
        const bool nonzero = std::any_of(vals.begin(), vals.end(), [](double v) { return v != 0.0; });
        if (bin.pair_count >= min_pairs && nonzero) {
            bin.gamma = gamma_ratio(vals);
            bin.reported = true;
        } else {
            ++table.skipped;
        }
        table.bins.push_back(bin);
    }
    return table;
}

EthDiagnostics analyze_eth(const SpectralResult& spectral, double e_mid, double half_width, int bins)
{
    EthDiagnostics out;
    out.window = window_indices(spectral, e_mid, half_width);
    if (out.window.count < 2) throw Error("analyze_eth: window holds fewer than 2 eigenstates");
    const Eigen::MatrixXd o = observable_in_eigenbasis(spectral, spectral.basis_energies, out.window);
    const auto energies = std::span<const double>(spectral.eigenvalues.data() + out.window.first,
                                                  static_cast<std::size_t>(out.window.count));
    const OffDiagSet pairs = off_diagonal(o, energies);
    out.kurtosis = kurtosis(pairs.values);
    if (out.kurtosis < 1.0 - 1e-12) throw Error("analyze_eth: kurtosis below its lower bound of 1");
    out.gamma = gamma_ratio(pairs, 2.0 * half_width, bins);
    return out;
}

} // namespace mwchaos
