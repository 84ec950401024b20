#include "mwchaos/hilbert.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>

namespace mwchaos {

namespace {

constexpr double pi = std::numbers::pi;

// sin(pi p / q), exact zero on multiples of pi, and bit-identical magnitudes
// for angles related by the reflection symmetries of sine.
double sin_pi_fraction(long p, long q)
{
    long r = p % (2 * q);
    if (r < 0) r += 2 * q;
    if (r % q == 0) return 0.0;
    double sign = 1.0;
    if (r > q) {
        r -= q;
        sign = -1.0;
    }
    // r in (0, q): use sin(pi r/q) = sin(pi (q - r)/q)
    long s = std::min(r, q - r);
    return sign * std::sin(pi * static_cast<double>(s) / static_cast<double>(q));
}

int kron(long x) { return x == 0 ? 1 : 0; }

} // namespace

ModeIndex::ModeIndex(int n) : n_(n)
{
    if (n < 1) throw Error("mode index must be >= 1, got " + std::to_string(n));
}

FockState::FockState(std::vector<int> modes) : modes_(std::move(modes))
{
    if (modes_.empty()) throw Error("FockState needs at least one particle");
    std::sort(modes_.begin(), modes_.end());
    int even = 0;
    for (int n : modes_) {
        ModeIndex m(n);
        e0_ += m.energy();
        if (n % 2 == 0) ++even;
    }
    parity_ = (even % 2 == 0) ? +1 : -1;
}

std::map<int, int> FockState::occupations() const
{
    std::map<int, int> occ;
    for (int n : modes_) ++occ[n];
    return occ;
}

int FockState::occupation(int mode) const noexcept
{
    auto [lo, hi] = std::equal_range(modes_.begin(), modes_.end(), mode);
    return static_cast<int>(hi - lo);
}

bool operator<(const FockState& a, const FockState& b)
{
    if (a.e0_ != b.e0_) return a.e0_ < b.e0_;
    return std::lexicographical_compare(a.modes_.begin(), a.modes_.end(), b.modes_.begin(), b.modes_.end());
}

int fock_parity(const FockState& state) { return state.parity(); }

std::size_t SectorBasis::TupleHash::operator()(const std::vector<int>& v) const noexcept
{
    std::size_t h = 1469598103934665603ull;
    for (int x : v) {
        h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
}

SectorBasis::SectorBasis(int particles, long energy_cutoff, ParityFilter filter, std::vector<FockState> states)
    : particles_(particles), cutoff_(energy_cutoff), filter_(filter), states_(std::move(states))
{
    index_.reserve(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) {
        const auto& s = states_[i];
        if (s.particle_count() != particles_) throw Error("basis state has wrong particle count");
        if (i > 0 && !(states_[i - 1] < s)) throw Error("basis states not strictly ordered");
        std::vector<int> key(s.modes().begin(), s.modes().end());
        max_mode_ = std::max(max_mode_, key.back());
        index_.emplace(std::move(key), static_cast<long>(i));
    }
}

long SectorBasis::find(const std::vector<int>& sorted_modes) const
{
    auto it = index_.find(sorted_modes);
    return it == index_.end() ? -1 : it->second;
}

Eigen::VectorXd SectorBasis::energies() const
{
    Eigen::VectorXd e(static_cast<Eigen::Index>(states_.size()));
    for (std::size_t i = 0; i < states_.size(); ++i) e(static_cast<Eigen::Index>(i)) = static_cast<double>(states_[i].energy());
    return e;
}

SectorBasis build_basis(int particles, long energy_cutoff, ParityFilter filter)
{
    if (particles < 1) throw Error("build_basis: particle count must be >= 1");
    std::vector<FockState> states;
    std::vector<int> cur;
    cur.reserve(static_cast<std::size_t>(particles));

    // non-decreasing tuples n_1 <= ... <= n_N with sum n_i^2 <= cutoff
    std::function<void(int, int, long)> rec = [&](int start, int remaining, long used) {
        if (remaining == 0) {
            FockState s(cur);
            bool keep = filter == ParityFilter::both || (filter == ParityFilter::positive && s.parity() > 0) ||
                        (filter == ParityFilter::negative && s.parity() < 0);
            if (keep) states.push_back(std::move(s));
            return;
        }
        for (int n = start; used + static_cast<long>(remaining) * n * n <= energy_cutoff; ++n) {
            cur.push_back(n);
            rec(n, remaining - 1, used + static_cast<long>(n) * n);
            cur.pop_back();
        }
    };
    rec(1, particles, 0);
    std::sort(states.begin(), states.end());
    return SectorBasis(particles, energy_cutoff, filter, std::move(states));
}

double barrier_element(int a, int b, int wells)
{
    ModeIndex ma(a), mb(b);
    if (wells < 1) throw Error("barrier_element: wells must be >= 1");
    if (ma.parity() != mb.parity()) return 0.0;
    double s = 0.0;
    for (int k = 1; k < wells; ++k) {
        s += sin_pi_fraction(static_cast<long>(a) * k, wells) * sin_pi_fraction(static_cast<long>(b) * k, wells);
    }
    return 2.0 / pi * s;
}

double interaction_element(int a, int b, int c, int d)
{
    for (int n : {a, b, c, d}) (void)ModeIndex(n);
    // product-to-sum: the integral of four sines is pi/8 times a signed count
    // of vanishing combinations +-a +-b +-c +-d (a+b+c+d > 0 never vanishes)
    const int count = kron(a - b - c + d) + kron(a - b + c - d) - kron(a - b - c - d) - kron(a - b + c + d) -
                      kron(a + b - c + d) - kron(a + b + c - d) + kron(a + b - c - d);
    return count / (2.0 * pi);
}

std::string to_string(CouplingScheme scheme)
{
    return scheme == CouplingScheme::bare ? "bare" : "renormalized";
}

CouplingScheme coupling_scheme_from_string(const std::string& name)
{
    if (name == "bare") return CouplingScheme::bare;
    if (name == "renormalized") return CouplingScheme::renormalized;
    throw Error("unknown coupling scheme '" + name + "' (expected bare|renormalized)");
}

void HamiltonianParams::validate() const
{
    if (particles < 1) throw Error("particle count must be >= 1");
    if (wells < 1) throw Error("well count must be >= 1");
    if (!std::isfinite(tau) || tau < 0.0) throw Error("tau must be finite and >= 0");
    if (!std::isfinite(gamma) || gamma < 0.0) throw Error("gamma must be finite and >= 0");
}

SymMatrix SymMatrix::from_dense(Eigen::MatrixXd m)
{
    if (m.rows() != m.cols()) throw Error("SymMatrix: matrix is not square");
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < j; ++i)
            if (m(i, j) != m(j, i)) throw Error("SymMatrix: matrix is not exactly symmetric");
    SymMatrix s;
    s.m_ = std::move(m);
    return s;
}

double contact_tail(long pair_budget)
{
    // Second-order tail of the lowest pair (1,1) into pair states above the
    // budget: |aa> with weight 1/pi^2 and |a,a+2> with weight 1/(2 pi^2),
    // divided by its first-order element 3/(2 pi).
    //   kappa = (1/(3 pi)) [ sum_{2a^2 > P} 1/a^2 + sum_{a^2+(a+2)^2 > P} 1/(a^2+(a+2)^2) ]
    if (pair_budget < 0) pair_budget = 0;
    double s1 = pi * pi / 6.0;
    for (long a = 1; 2 * a * a <= pair_budget; ++a) s1 -= 1.0 / static_cast<double>(a * a);
    // 1/(a^2+(a+2)^2) = 1/(2((a+1)^2+1)), and sum_{j>=1} 1/(j^2+1) = (pi coth pi - 1)/2;
    // a >= 1 means j = a+1 >= 2
    double s2 = 0.5 * ((pi / std::tanh(pi) - 1.0) / 2.0 - 0.5);
    for (long a = 1; a * a + (a + 2) * (a + 2) <= pair_budget; ++a) {
        const double j = static_cast<double>(a + 1);
        s2 -= 0.5 / (j * j + 1.0);
    }
    return (s1 + s2) / (3.0 * pi);
}

double renormalized_gamma(double gamma, long pair_budget)
{
    if (gamma == 0.0) return 0.0;
    return 1.0 / (1.0 / gamma + contact_tail(pair_budget));
}

double barrier_green_tail(double x, double y, int max_mode)
{
    // sum_{n>=1} cos(n t)/n^2 = pi^2/6 - pi t/2 + t^2/4 on [0, 2 pi]
    auto clausen = [](double t) {
        t = std::fmod(std::abs(t), 2.0 * pi);
        return pi * pi / 6.0 - pi * t / 2.0 + t * t / 4.0;
    };
    double full = (clausen(x - y) - clausen(x + y)) / pi;
    double partial = 0.0;
    for (int n = 1; n <= max_mode; ++n) partial += std::sin(n * x) * std::sin(n * y) / (static_cast<double>(n) * n);
    return full - 2.0 / pi * partial;
}

namespace {

// Per-cutoff barrier T-matrices for the renormalized one-body coupling.
class BarrierCoupling {
public:
    BarrierCoupling(int wells, double tau, CouplingScheme scheme, int max_cutoff_mode)
        : wells_(wells), tau_(tau), scheme_(scheme)
    {
        const int sites = wells - 1;
        const int modes = max_cutoff_mode + 1;
        phi_ = Eigen::MatrixXd::Zero(modes + 1, std::max(sites, 0));
        for (int n = 1; n <= modes; ++n)
            for (int k = 1; k <= sites; ++k)
                phi_(n, k - 1) = std::sqrt(2.0 / pi) * sin_pi_fraction(static_cast<long>(n) * k, wells);
        if (scheme_ == CouplingScheme::renormalized && sites > 0 && tau_ > 0.0) {
            tmat_.resize(static_cast<std::size_t>(modes + 1));
            for (int m = 0; m <= modes; ++m) {
                Eigen::MatrixXd g(sites, sites);
                for (int k = 1; k <= sites; ++k)
                    for (int l = k; l <= sites; ++l) {
                        double v = barrier_green_tail(pi * k / wells, pi * l / wells, m);
                        g(k - 1, l - 1) = v;
                        g(l - 1, k - 1) = v;
                    }
                Eigen::MatrixXd a = Eigen::MatrixXd::Identity(sites, sites) / tau_ + g;
                Eigen::MatrixXd t = a.ldlt().solve(Eigen::MatrixXd::Identity(sites, sites));
                tmat_[static_cast<std::size_t>(m)] = 0.5 * (t + t.transpose());
            }
        }
    }

    // Coupling for a hop b -> a when the moving particle may occupy modes
    // up to `cutoff_mode`.
    double element(int a, int b, int cutoff_mode) const
    {
        if (tau_ == 0.0 || wells_ < 2) return 0.0;
        if ((a + b) % 2 != 0) return 0.0;
        if (scheme_ == CouplingScheme::bare) return tau_ * barrier_element(a, b, wells_);
        // modes with a node on every barrier decouple exactly
        if (phi_.row(a).isZero(0.0) || phi_.row(b).isZero(0.0)) return 0.0;
        const auto& t = tmat_[static_cast<std::size_t>(cutoff_mode)];
        return phi_.row(a).dot(t * phi_.row(b).transpose());
    }

private:
    int wells_;
    double tau_;
    CouplingScheme scheme_;
    Eigen::MatrixXd phi_;
    std::vector<Eigen::MatrixXd> tmat_;
};

long isqrt(long x)
{
    if (x < 0) return -1;
    long r = static_cast<long>(std::sqrt(static_cast<double>(x)));
    while (r * r > x) --r;
    while ((r + 1) * (r + 1) <= x) ++r;
    return r;
}

// Fills the upper triangle (target index <= source index) of H from all
// one- and two-body hops out of each source state, then mirrors.
SymMatrix assemble(const SectorBasis& basis, int wells, double tau, double gamma, bool kinetic,
                   CouplingScheme scheme)
{
    const auto d = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    if (d == 0) return SymMatrix::from_dense(std::move(h));
    const long ecut = basis.energy_cutoff();
    const int max_mode = static_cast<int>(isqrt(ecut));
    const BarrierCoupling barrier(std::max(wells, 1), tau, scheme, max_mode);

    std::vector<double> gamma_by_budget;
    if (gamma != 0.0) {
        gamma_by_budget.resize(static_cast<std::size_t>(ecut + 1));
        for (long p = 0; p <= ecut; ++p)
            gamma_by_budget[static_cast<std::size_t>(p)] =
                scheme == CouplingScheme::renormalized ? renormalized_gamma(gamma, p) : gamma;
    }

    parallel_for(d, [&](Eigen::Index j) {
        const FockState& src = basis[static_cast<std::size_t>(j)];
        const std::vector<int> modes(src.modes().begin(), src.modes().end());
        const long e0 = src.energy();
        if (kinetic) h(j, j) += static_cast<double>(e0);
        std::vector<int> key;
        key.reserve(modes.size());

        // distinct occupied modes with counts
        std::vector<std::pair<int, int>> occ;
        for (int n : modes) {
            if (!occ.empty() && occ.back().first == n) ++occ.back().second;
            else occ.emplace_back(n, 1);
        }

        auto add = [&](const std::vector<int>& target, double value) {
            long i = basis.find(target);
            if (i < 0 || i > j) return;
            h(i, j) += value;
        };

        if (tau != 0.0 && wells >= 2) {
            for (const auto& [b, nb] : occ) {
                const long spectators = e0 - static_cast<long>(b) * b;
                const int cutoff_mode = static_cast<int>(isqrt(ecut - spectators));
                for (int a = 1; a <= cutoff_mode; ++a) {
                    double v = barrier.element(a, b, cutoff_mode);
                    if (v == 0.0) continue;
                    key = modes;
                    key.erase(std::find(key.begin(), key.end(), b));
                    const int na = static_cast<int>(std::count(key.begin(), key.end(), a));
                    key.insert(std::upper_bound(key.begin(), key.end(), a), a);
                    add(key, v * std::sqrt(static_cast<double>(nb) * (na + 1)));
                }
            }
        }

        if (gamma != 0.0 && modes.size() >= 2) {
            for (std::size_t ci = 0; ci < occ.size(); ++ci) {
                for (std::size_t di = ci; di < occ.size(); ++di) {
                    const int c = occ[ci].first;
                    const int dd = occ[di].first;
                    if (ci == di && occ[ci].second < 2) continue;
                    // annihilate d then c
                    std::vector<int> rest = modes;
                    rest.erase(std::find(rest.begin(), rest.end(), dd));
                    rest.erase(std::find(rest.begin(), rest.end(), c));
                    const double amp_out = (ci == di) ? std::sqrt(static_cast<double>(occ[ci].second) *
                                                                  (occ[ci].second - 1))
                                                      : std::sqrt(static_cast<double>(occ[ci].second) *
                                                                  occ[di].second);
                    const long budget = ecut - (e0 - static_cast<long>(c) * c - static_cast<long>(dd) * dd);
                    const double g = gamma_by_budget[static_cast<std::size_t>(budget)];
                    const long amax = isqrt(budget / 2);
                    for (int a = 1; a <= amax; ++a) {
                        int cand[7] = {a + c + dd, a + c - dd, a - c + dd, a - c - dd, -a + c + dd, -a + c - dd,
                                       -a - c + dd};
                        std::sort(std::begin(cand), std::end(cand));
                        int prev = 0;
                        for (int b : cand) {
                            if (b < a || b == prev) continue;
                            prev = b;
                            if (static_cast<long>(a) * a + static_cast<long>(b) * b > budget) continue;
                            const double u = interaction_element(a, b, c, dd);
                            if (u == 0.0) continue;
                            key = rest;
                            const int nb_ = static_cast<int>(std::count(key.begin(), key.end(), b));
                            key.insert(std::upper_bound(key.begin(), key.end(), b), b);
                            const int na_ = static_cast<int>(std::count(key.begin(), key.end(), a));
                            key.insert(std::upper_bound(key.begin(), key.end(), a), a);
                            const double amp_in = std::sqrt(static_cast<double>(nb_ + 1) * (na_ + 1));
                            const double pairs = 0.5 * (a != b ? 2.0 : 1.0) * (c != dd ? 2.0 : 1.0);
                            add(key, g * u * pairs * amp_in * amp_out);
                        }
                    }
                }
            }
        }
    });

    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < j; ++i) h(j, i) = h(i, j);
    return SymMatrix::from_dense(std::move(h));
}

} // namespace

SymMatrix assemble_hamiltonian(const SectorBasis& basis, const HamiltonianParams& params, CouplingScheme scheme)
{
    params.validate();
    if (basis.particle_count() != params.particles)
        throw Error("assemble_hamiltonian: basis built for N=" + std::to_string(basis.particle_count()) +
                    " but params have N=" + std::to_string(params.particles));
    return assemble(basis, params.wells, params.tau, params.gamma, true, scheme);
}

SymMatrix barrier_operator(const SectorBasis& basis, int wells)
{
    return assemble(basis, wells, 1.0, 0.0, false, CouplingScheme::bare);
}

SymMatrix interaction_operator(const SectorBasis& basis)
{
    return assemble(basis, 1, 0.0, 1.0, false, CouplingScheme::bare);
}

} // namespace mwchaos
