#include "oracles.hpp"

#include "mwchaos/limits.hpp"
#include "mwchaos/spectrum.hpp"

#include <doctest.h>

#include <map>
#include <numbers>

using namespace mwchaos;

namespace {

long count_below(const CornerSpectrum& c, double e)
{
    long n = 0;
    for (const auto& l : c.levels)
        if (l.energy <= e) n += l.degeneracy;
    return n;
}

} // namespace

TEST_CASE("free box levels")
{
    for (int w : {1, 2, 5}) {
        const KPLevels kp = kp_levels(w, 0.0, 110.0);
        REQUIRE(kp.energies.size() == 10);
        for (int n = 1; n <= 10; ++n) {
            CHECK(kp.energies[static_cast<std::size_t>(n - 1)] == doctest::Approx(double(n) * n).epsilon(1e-12));
            CHECK(kp.parities[static_cast<std::size_t>(n - 1)] == (n % 2 ? 1 : -1));
        }
    }
}

TEST_CASE("levels agree with an independent shooting solver")
{
    for (int w : {2, 3, 5})
        for (double tau : {0.5, 10.0, 200.0}) {
            const KPLevels kp = kp_levels(w, tau, 400.0);
            const auto ref = oracle::shooting_levels(w, tau, 400.0);
            INFO("W " << w << " tau " << tau);
            REQUIRE(kp.energies.size() == ref.size());
            for (std::size_t i = 0; i < ref.size(); ++i) CHECK(kp.energies[i] == doctest::Approx(ref[i]).epsilon(1e-10));
        }
}

TEST_CASE("two wells")
{
    const KPLevels k10 = kp_levels_count(2, 10.0, 6);
    CHECK(k10.energies[0] > 1.0);
    CHECK(k10.energies[0] < 4.0);
    CHECK(k10.parities[0] == 1);
    // Odd states have a node on the barrier and do not feel it.
    CHECK(k10.energies[1] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(k10.parities[1] == -1);

    const KPLevels hard = kp_levels_count(2, 1e6, 6);
    const double expect[] = {4, 4, 16, 16, 36, 36};
    for (int i = 0; i < 6; ++i) CHECK(hard.energies[static_cast<std::size_t>(i)] == doctest::Approx(expect[i]).epsilon(1e-4));
}

TEST_CASE("levels rise with the barrier and stay between the limits")
{
    for (int w : {2, 3, 4}) {
        const int count = 24;
        const KPLevels free = kp_levels_count(w, 0.0, count);
        // Decoupled wells: each level (W m)^2 appears W times.
        std::vector<double> walls;
        for (int m = 1; static_cast<int>(walls.size()) < count; ++m)
            for (int k = 0; k < w; ++k) walls.push_back(double(w * m) * (w * m));
        std::vector<double> prev = free.energies;
        for (double tau : {0.3, 3.0, 30.0, 300.0, 3000.0}) {
            const KPLevels kp = kp_levels_count(w, tau, count);
            for (int i = 0; i < count; ++i) {
                const auto u = static_cast<std::size_t>(i);
                CHECK(kp.energies[u] >= prev[u] * (1 - 1e-12));
                CHECK(kp.energies[u] >= free.energies[u] * (1 - 1e-12));
                CHECK(kp.energies[u] <= walls[u] * (1 + 1e-12));
            }
            prev = kp.energies;
        }
    }
}

TEST_CASE("invalid single-particle input")
{
    CHECK_THROWS_AS(kp_levels(0, 1.0, 10.0), Error);
    CHECK_THROWS_AS(kp_levels(2, -1.0, 10.0), Error);
    CHECK_THROWS_AS(kp_levels(2, std::numeric_limits<double>::infinity(), 10.0), Error);
}

TEST_CASE("single particle: solver and diagonalization")
{
    // Positive-parity levels of W=3, tau=2 against the dense solve at a large
    // cutoff; agreement is limited by basis truncation.
    const KPLevels kp = kp_levels_count(3, 2.0, 12);
    std::vector<double> even;
    for (std::size_t i = 0; i < kp.energies.size(); ++i)
        if (kp.parities[i] > 0) even.push_back(kp.energies[i]);
    const auto r = solve_sector({1, 3, 2.0, 0.0}, 2000, CouplingScheme::renormalized, false);
    for (std::size_t i = 0; i < 5; ++i) CHECK(r.eigenvalues(static_cast<Eigen::Index>(i)) == doctest::Approx(even[i]).epsilon(1e-4));
}

TEST_CASE("corner ground states")
{
    for (int w : {1, 2, 4}) {
        const auto c1 = corner_spectrum(1, 2, w, 60);
        CHECK(c1.levels.front().energy == 2.0);
        CHECK(c1.levels.front().degeneracy == 1);
        const auto c2 = corner_spectrum(2, 2, w, 60);
        CHECK(c2.levels.front().energy == 5.0);
    }
    const auto c3 = corner_spectrum(3, 2, 2, 200);
    CHECK(c3.levels.front().energy == 8.0);
    for (std::size_t i = 1; i < c3.levels.size(); ++i) CHECK(c3.levels[i].energy > c3.levels[i - 1].energy);
    for (const auto& l : c3.levels) CHECK(l.degeneracy >= 1);
    CHECK_THROWS_AS(corner_spectrum(5, 2, 2, 100), Error);
}

TEST_CASE("free bosons against brute-force enumeration")
{
    for (int n : {2, 3}) {
        const long e_cut = 300;
        const auto c1 = corner_spectrum(1, n, 2, e_cut);
        std::map<long, long> ref;
        for (const auto& t : oracle::enumerate_tuples(n, e_cut)) {
            long e = 0;
            int odd = 0;
            for (int m : t) {
                e += static_cast<long>(m) * m;
                odd += (m % 2 == 0);
            }
            if (odd % 2 == 0) ++ref[e];
        }
        REQUIRE(c1.levels.size() == ref.size());
        auto it = ref.begin();
        for (const auto& l : c1.levels) {
            CHECK(l.energy == static_cast<double>(it->first));
            CHECK(l.degeneracy == it->second);
            ++it;
        }
    }
}

TEST_CASE("hard-core map from free bosons")
{
    // Pairs (n1 <= n2) map one to one onto (n1, n2 + 1). The shift flips the
    // mode-product parity, and so does the exchange sign of the hard-core
    // wavefunction, so the map preserves the sector.
    const long e_cut = 2000;
    const auto c2 = corner_spectrum(2, 2, 1, e_cut);
    std::map<long, long> mapped;
    for (int a = 1; 2L * a * a <= e_cut; ++a)
        for (int b = a; static_cast<long>(a) * a + static_cast<long>(b) * b <= e_cut; ++b) {
            const long e = static_cast<long>(a) * a + static_cast<long>(b + 1) * (b + 1);
            const bool even = ((a + 1) + (b + 1)) % 2 == 0;
            if (e <= e_cut && even) ++mapped[e];
        }
    REQUIRE(c2.levels.size() == mapped.size());
    auto it = mapped.begin();
    for (const auto& l : c2.levels) {
        CHECK(l.energy == static_cast<double>(it->first));
        CHECK(l.degeneracy == it->second);
        ++it;
    }
}

TEST_CASE("state counting follows the leading Weyl law")
{
    double prev = 1.0;
    for (long e : {150L, 600L, 2400L}) {
        const double lead = dos_model(2, static_cast<double>(e), DosMode::total_count);
        const double rel = std::abs(static_cast<double>(corner_total_count(1, 2, 2, e)) - lead) / lead;
        MESSAGE("E " << e << " relative deviation " << rel);
        CHECK(rel < prev);
        prev = rel;
    }
    CHECK(prev < 0.03);
    // The four corners share the leading term; they differ by O(sqrt E).
    const long e = 600;
    const double c1 = static_cast<double>(corner_total_count(1, 2, 2, e));
    for (int c = 2; c <= 4; ++c) {
        const double ck = static_cast<double>(corner_total_count(c, 2, 2, e));
        MESSAGE("corner " << c << " count " << ck << " vs " << c1);
        CHECK(std::abs(ck - c1) <= 3.0 * std::sqrt(static_cast<double>(e)));
    }
}

TEST_CASE("counts agree with the sector spectra")
{
    // Distinguishable-particle counts split over symmetry sectors; the
    // positive-parity bosonic sector is roughly a 1/(2 N!) share.
    const long e = 2400;
    for (int c = 1; c <= 4; ++c) {
        const double total = static_cast<double>(corner_total_count(c, 2, 2, e));
        const double sector = static_cast<double>(count_below(corner_spectrum(c, 2, 2, e), static_cast<double>(e)));
        CHECK(sector / total == doctest::Approx(0.25).epsilon(0.1));
    }
}

TEST_CASE("hard-core composition")
{
    KPLevels kp;
    kp.wells = 1;
    kp.energies = {1.0, 2.5, 4.0, 9.0};
    kp.parities = {1, -1, 1, -1};
    kp.e_max = 9.0;
    const auto c = tg_compose(kp, 2, 6.0);
    REQUIRE_FALSE(c.levels.empty());
    CHECK(c.levels.front().energy == 3.5);

    for (int n : {2, 3}) {
        const auto tg = tg_compose(kp_levels(2, 0.0, 900.0), n, 800.0);
        const auto c2 = corner_spectrum(2, n, 2, 800);
        REQUIRE(tg.levels.size() == c2.levels.size());
        for (std::size_t i = 0; i < tg.levels.size(); ++i) {
            CHECK(tg.levels[i].energy == doctest::Approx(c2.levels[i].energy).epsilon(1e-9));
            CHECK(tg.levels[i].degeneracy == c2.levels[i].degeneracy);
        }
    }
    CHECK_THROWS_AS(tg_compose(kp, 5, 100.0), Error);
}

TEST_CASE("hard-core composition against strong contact interaction")
{
    const double tau = 10.0;
    const auto tg = tg_compose(kp_levels(2, tau, 700.0), 3, 300.0);
    const auto levels = tg.expanded();
    REQUIRE(levels.size() >= 20);
    const auto r = solve_sector({3, 2, tau, 1e6}, 1500, CouplingScheme::renormalized, false);
    double worst = 0.0;
    for (std::size_t i = 0; i < 20; ++i)
        worst = std::max(worst, std::abs(r.eigenvalues(static_cast<Eigen::Index>(i)) - levels[i]) / levels[i]);
    MESSAGE("worst relative deviation over the lowest 20 levels " << worst);
    CHECK(worst < 0.005);
}
