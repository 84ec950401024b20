#pragma once

// Symmetrized box-mode Fock basis and dense Hamiltonian assembly for N bosons
// in the box [0, pi] with W-1 equally spaced delta barriers and contact
// interactions. Energies are in units of the lowest single-particle level.

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <unordered_map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mwchaos {

/// Raised for violated preconditions anywhere in the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Single-particle box quantum number, n >= 1. Mode energy n^2, wavefunction
/// sqrt(2/pi) sin(n x).
class ModeIndex {
public:
    constexpr ModeIndex() = default;
    explicit ModeIndex(int n);
    constexpr int value() const noexcept { return n_; }
    constexpr long energy() const noexcept { return static_cast<long>(n_) * n_; }
    /// Reflection parity of sin(n x) about x = pi/2: (-1)^(n+1).
    constexpr int parity() const noexcept { return (n_ % 2 == 1) ? +1 : -1; }
    friend constexpr auto operator<=>(ModeIndex, ModeIndex) = default;

private:
    int n_ = 1;
};

enum class ParityFilter { positive, negative, both };

/// Bosonic occupation state. Stored as the non-decreasing tuple of occupied
/// modes, which is the canonical representative of the occupation multiset.
class FockState {
public:
    /// Takes the modes in any order; they are sorted.
    explicit FockState(std::vector<int> modes);

    int particle_count() const noexcept { return static_cast<int>(modes_.size()); }
    std::span<const int> modes() const noexcept { return modes_; }
    long energy() const noexcept { return e0_; }
    int parity() const noexcept { return parity_; }
    /// Mode -> occupation count.
    std::map<int, int> occupations() const;
    int occupation(int mode) const noexcept;

    friend bool operator==(const FockState&, const FockState&) = default;
    /// Canonical order: by energy, then lexicographically by mode tuple.
    friend bool operator<(const FockState& a, const FockState& b);

private:
    std::vector<int> modes_;
    long e0_ = 0;
    int parity_ = +1;
};

int fock_parity(const FockState& state);

class SectorBasis {
public:
    SectorBasis(int particles, long energy_cutoff, ParityFilter filter, std::vector<FockState> states);

    int particle_count() const noexcept { return particles_; }
    long energy_cutoff() const noexcept { return cutoff_; }
    ParityFilter parity_filter() const noexcept { return filter_; }
    std::size_t size() const noexcept { return states_.size(); }
    bool empty() const noexcept { return states_.empty(); }
    const FockState& operator[](std::size_t i) const { return states_[i]; }
    std::span<const FockState> states() const noexcept { return states_; }
    /// Index of a state, or -1 when it is not part of the basis.
    long find(const std::vector<int>& sorted_modes) const;
    /// Largest mode number appearing in any state.
    int max_mode() const noexcept { return max_mode_; }
    Eigen::VectorXd energies() const;

private:
    int particles_;
    long cutoff_;
    ParityFilter filter_;
    std::vector<FockState> states_;
    int max_mode_ = 0;
    struct TupleHash {
        std::size_t operator()(const std::vector<int>& v) const noexcept;
    };
    std::unordered_map<std::vector<int>, long, TupleHash> index_;
};

/// Every bosonic state with sum n_i^2 <= energy_cutoff passing the parity
/// filter, in canonical order.
SectorBasis build_basis(int particles, long energy_cutoff, ParityFilter filter = ParityFilter::positive);

/// (2/pi) sum_{k=1}^{W-1} sin(a pi k/W) sin(b pi k/W). Exactly zero when a and
/// b have opposite reflection parity or when either mode has a node on every
/// barrier.
double barrier_element(int a, int b, int wells);

/// <ab| delta(x1 - x2) |cd> between normalized box modes,
/// (4/pi^2) int_0^pi sin(ax) sin(bx) sin(cx) sin(dx) dx.
double interaction_element(int a, int b, int c, int d);

/// How the delta-function couplings enter the truncated matrix.
///  - bare: H = diag(e0) + tau V + gamma U with the analytic elements.
///  - renormalized: each one-body hop uses the barrier T-matrix that folds in
///    the box modes above the hop's mode cutoff, and each two-body hop uses a
///    contact strength 1/gamma_eff = 1/gamma + kappa(P) for its pair energy
///    budget P. Removes the leading 1/sqrt(E_cut) truncation error.
enum class CouplingScheme { bare, renormalized };

std::string to_string(CouplingScheme scheme);
CouplingScheme coupling_scheme_from_string(const std::string& name);

struct HamiltonianParams {
    int particles = 1;
    int wells = 1;
    double tau = 0.0;
    double gamma = 0.0;

    void validate() const;
    friend bool operator==(const HamiltonianParams&, const HamiltonianParams&) = default;
};

/// Dense real symmetric matrix. (i,j) and (j,i) are written from one value.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(Eigen::Index dim) : m_(Eigen::MatrixXd::Zero(dim, dim)) {}

    Eigen::Index dim() const noexcept { return m_.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
    void set(Eigen::Index i, Eigen::Index j, double v)
    {
        m_(i, j) = v;
        m_(j, i) = v;
    }
    const Eigen::MatrixXd& dense() const noexcept { return m_; }
    /// Moves the storage out, leaving an empty matrix.
    Eigen::MatrixXd release() noexcept { return std::move(m_); }
    double trace() const { return m_.trace(); }
    /// Adopts a matrix, checking exact symmetry.
    static SymMatrix from_dense(Eigen::MatrixXd m);

private:
    Eigen::MatrixXd m_;
};

/// Effective contact strength for a pair whose kinetic energy budget inside
/// the truncated basis is `pair_budget`.
double renormalized_gamma(double gamma, long pair_budget);

/// Tail coefficient kappa(P) of the renormalized contact coupling.
double contact_tail(long pair_budget);

/// Sum_{n > max_mode} (2/pi) sin(n x) sin(n y) / n^2.
double barrier_green_tail(double x, double y, int max_mode);

SymMatrix assemble_hamiltonian(const SectorBasis& basis, const HamiltonianParams& params,
                               CouplingScheme scheme = CouplingScheme::bare);

/// One-body barrier operator V (tau = 1, bare) in the basis.
SymMatrix barrier_operator(const SectorBasis& basis, int wells);
/// Two-body contact operator U (gamma = 1, bare) in the basis.
SymMatrix interaction_operator(const SectorBasis& basis);

} // namespace mwchaos
