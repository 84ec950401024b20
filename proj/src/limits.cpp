#include "mwchaos/limits.hpp"

#include "mwchaos/hilbert.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>

namespace mwchaos {

namespace {

constexpr double pi = std::numbers::pi;

// Pruefer phase theta(pi) of the solution with psi(0) = 0, psi'(0) = k, where
// (psi, psi'/k) = R (sin theta, cos theta). Level n sits at theta(pi) = n pi
// and theta(pi) increases strictly with k.
double pruefer_phase(int wells, double tau, double k)
{
    const double step = k * pi / wells;
    double theta = 0.0;
    for (int b = 1; b < wells; ++b) {
        theta += step;
        const double s = std::sin(theta);
        if (s == 0.0 || tau == 0.0) continue;
        const double c = std::cos(theta);
        const double branch = std::floor(theta / pi);
        const double sign = s > 0.0 ? 1.0 : -1.0;
        theta = branch * pi + std::atan2(std::abs(s), sign * c + tau * std::abs(s) / k);
    }
    return theta + step;
}

double solve_level(int wells, double tau, int n)
{
    if (tau == 0.0) return static_cast<double>(n) * n;
    auto g = [&](double k) { return pruefer_phase(wells, tau, k) - n * pi; };
    double lo = n;
    double glo = g(lo);
    if (glo >= 0.0) return lo * lo;
    const int m = (n + wells - 1) / wells;
    double hi = static_cast<double>(wells) * m * (1.0 + 1e-12) + 1e-12;
    double ghi = g(hi);
    while (ghi < 0.0) {
        hi += 0.5;
        ghi = g(hi);
        if (hi > 4.0 * (n + wells)) throw Error("kp_levels: could not bracket level " + std::to_string(n));
    }
    if (ghi == 0.0) return hi * hi;
    std::uintmax_t iters = 200;
    auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, boost::math::tools::eps_tolerance<double>(48),
                                                    iters);
    if (iters >= 200 || std::abs(b - a) > 1e-10 * std::max(1.0, a))
        throw Error("kp_levels: root finder did not converge for level " + std::to_string(n));
    const double k = 0.5 * (a + b);
    return k * k;
}

void check_kp(int wells, double tau)
{
    if (wells < 1) throw Error("kp_levels: need W >= 1");
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw Error("kp_levels: need finite tau >= 0");
}

// Per-well many-body states: sorted mode lists with their energy (in units of
// the well's own m^2) and reflection sign.
struct WellState {
    std::vector<int> modes;
    long e = 0;
    int sign = +1;
};

std::vector<WellState> well_states(int n, long budget, bool hard_core)
{
    std::vector<WellState> out;
    std::vector<int> cur;
    std::function<void(int, int, long)> rec = [&](int start, int left, long e) {
        if (left == 0) {
            WellState s{cur, e, +1};
            int flips = 0;
            for (int m : cur)
                if (m % 2 == 0) ++flips;
            if (hard_core) flips += n * (n - 1) / 2;
            s.sign = (flips % 2 == 0) ? +1 : -1;
            out.push_back(std::move(s));
            return;
        }
        for (int m = start;; ++m) {
            const long add = static_cast<long>(m) * m;
            // remaining particles need at least m^2 (or more when hard-core)
            if (e + add * left > budget) break;
            cur.push_back(m);
            rec(hard_core ? m + 1 : m, left - 1, e + add);
            cur.pop_back();
        }
    };
    if (n == 0)
        out.push_back(WellState{});
    else
        rec(1, n, 0);
    return out;
}

std::vector<Level> group_levels(std::map<long, long>& counts)
{
    std::vector<Level> levels;
    for (auto [e, c] : counts)
        if (c > 0) levels.push_back(Level{static_cast<double>(e), c, +1});
    return levels;
}

CornerSpectrum box_corner(int corner, int particles, long e_cut)
{
    const bool hard_core = corner == 2;
    std::map<long, long> counts;
    for (const auto& s : well_states(particles, e_cut, hard_core)) {
        // Positive parity: Fock parity for free bosons, TG sign for hard core.
        if (s.sign == +1) ++counts[s.e];
    }
    CornerSpectrum out;
    out.corner = corner;
    out.particles = particles;
    out.levels = group_levels(counts);
    return out;
}

CornerSpectrum well_corner(int corner, int particles, int wells, long e_cut)
{
    const bool hard_core = corner == 4;
    const long w2 = static_cast<long>(wells) * wells;
    const long budget = e_cut / w2; // in units of W^2
    std::vector<std::vector<WellState>> per_n(static_cast<std::size_t>(particles) + 1);
    for (int n = 0; n <= particles; ++n) per_n[static_cast<std::size_t>(n)] = well_states(n, budget, hard_core);

    std::map<long, long> counts;
    std::vector<const WellState*> config(static_cast<std::size_t>(wells));
    std::function<void(int, int, long)> rec = [&](int w, int left, long e) {
        if (w == wells) {
            if (left != 0) return;
            // Parity maps well w to W-1-w, multiplying by each well's sign.
            int cmp = 0;
            for (int i = 0; i < wells && cmp == 0; ++i) {
                const auto& a = config[static_cast<std::size_t>(i)]->modes;
                const auto& b = config[static_cast<std::size_t>(wells - 1 - i)]->modes;
                if (a != b) cmp = (a < b) ? -1 : 1;
            }
            if (cmp > 0) return;
            if (cmp == 0) {
                int sign = +1;
                for (const auto* s : config) sign *= s->sign;
                if (sign != +1) return;
            }
            ++counts[e * w2];
            return;
        }
        for (int n = 0; n <= left; ++n) {
            if (w == wells - 1 && n != left) continue;
            for (const auto& s : per_n[static_cast<std::size_t>(n)]) {
                if (e + s.e > budget) continue;
                config[static_cast<std::size_t>(w)] = &s;
                rec(w + 1, left - n, e + s.e);
            }
        }
    };
    rec(0, particles, 0);
    CornerSpectrum out;
    out.corner = corner;
    out.particles = particles;
    out.wells = wells;
    out.levels = group_levels(counts);
    return out;
}

} // namespace

KPLevels kp_levels(int wells, double tau, double e_max)
{
    check_kp(wells, tau);
    KPLevels out;
    out.wells = wells;
    out.tau = tau;
    out.e_max = e_max;
    // Level n lies in [n^2, (W ceil(n/W))^2] and grows with n.
    for (int n = 1; static_cast<double>(n) * n <= e_max; ++n) {
        const double e = solve_level(wells, tau, n);
        if (e > e_max) break;
        out.energies.push_back(e);
        out.parities.push_back(n % 2 == 1 ? +1 : -1);
    }
    return out;
}

KPLevels kp_levels_count(int wells, double tau, int count)
{
    check_kp(wells, tau);
    if (count < 0) throw Error("kp_levels: negative level count");
    KPLevels out;
    out.wells = wells;
    out.tau = tau;
    for (int n = 1; n <= count; ++n) {
        out.energies.push_back(solve_level(wells, tau, n));
        out.parities.push_back(n % 2 == 1 ? +1 : -1);
    }
    out.e_max = out.energies.empty() ? 0.0 : out.energies.back();
    return out;
}

std::vector<double> CornerSpectrum::expanded() const
{
    std::vector<double> e;
    for (const auto& l : levels) e.insert(e.end(), static_cast<std::size_t>(l.degeneracy), l.energy);
    return e;
}

CornerSpectrum corner_spectrum(int corner, int particles, int wells, long e_cut)
{
    if (corner < 1 || corner > 4) throw Error("corner_spectrum: corner must be 1..4");
    if (particles < 1 || wells < 1) throw Error("corner_spectrum: need N >= 1 and W >= 1");
    if (corner <= 2) {
        CornerSpectrum s = box_corner(corner, particles, e_cut);
        s.wells = wells;
        return s;
    }
    return well_corner(corner, particles, wells, e_cut);
}

long corner_total_count(int corner, int particles, int wells, long e)
{
    if (corner < 1 || corner > 4) throw Error("corner_total_count: corner must be 1..4");
    if (particles < 1 || wells < 1) throw Error("corner_total_count: need N >= 1 and W >= 1");
    // Single-particle states as (label, energy); hard-core forbids repeated labels.
    struct Orbital {
        long label;
        long e;
    };
    std::vector<Orbital> orb;
    if (corner <= 2) {
        for (long n = 1; n * n <= e; ++n) orb.push_back({n, n * n});
    } else {
        const long w2 = static_cast<long>(wells) * wells;
        for (long m = 1; w2 * m * m <= e; ++m)
            for (long w = 0; w < wells; ++w) orb.push_back({m * wells + w, w2 * m * m});
    }
    const bool distinct = corner == 2 || corner == 4;
    std::vector<long> used;
    std::function<long(int, long)> rec = [&](int left, long budget) -> long {
        if (left == 0) return 1;
        long total = 0;
        for (const auto& o : orb) {
            if (o.e > budget) continue;
            if (distinct && std::find(used.begin(), used.end(), o.label) != used.end()) continue;
            used.push_back(o.label);
            total += rec(left - 1, budget - o.e);
            used.pop_back();
        }
        return total;
    };
    return rec(particles, e);
}

CornerSpectrum tg_compose(const KPLevels& kp, int particles, double e_cut)
{
    if (particles < 1) throw Error("tg_compose: need N >= 1");
    const auto& e = kp.energies;
    if (static_cast<int>(e.size()) < particles) throw Error("tg_compose: fewer single-particle levels than particles");
    double floor_sum = 0.0;
    for (int i = 0; i < particles; ++i) floor_sum += e[static_cast<std::size_t>(i)];
    if (floor_sum > e_cut) throw Error("tg_compose: cutoff below the lowest composite level");
    // The list must be complete up to the largest level a composite can use.
    const double needed = e_cut - (floor_sum - e[static_cast<std::size_t>(particles - 1)]);
    if (kp.e_max < needed)
        throw Error("tg_compose: single-particle levels do not reach the energy required by the cutoff");

    const int base_sign = ((particles * (particles - 1) / 2) % 2 == 0) ? +1 : -1;
    std::vector<double> energies;
    std::function<void(std::size_t, int, double, int)> rec = [&](std::size_t start, int left, double sum, int sign) {
        if (left == 0) {
            if (sign * base_sign == +1) energies.push_back(sum);
            return;
        }
        for (std::size_t i = start; i < e.size(); ++i) {
            // Remaining picks are at least as large as e[i].
            if (sum + e[i] * left > e_cut * (1.0 + 1e-12)) break;
            rec(i + 1, left - 1, sum + e[i], sign * kp.parities[i]);
        }
    };
    rec(0, particles, 0.0, +1);
    std::sort(energies.begin(), energies.end());
    CornerSpectrum out;
    out.particles = particles;
    out.wells = kp.wells;
    for (double v : energies) {
        if (!out.levels.empty() && std::abs(v - out.levels.back().energy) <= 1e-9 * std::max(1.0, std::abs(v)))
            ++out.levels.back().degeneracy;
        else
            out.levels.push_back(Level{v, 1, +1});
    }
    return out;
}

} // namespace mwchaos
