#include "mwchaos/config.hpp"
#include "mwchaos/io.hpp"
#include "mwchaos/pipeline.hpp"
#include "mwchaos/render.hpp"

#include <doctest.h>

#include <unistd.h>

#include <cstring>
#include <random>

using namespace mwchaos;
namespace fs = std::filesystem;

namespace {

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / ("mwchaos_" + name + "_" + std::to_string(::getpid())))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

bool has_flag(const DiagnosticsRecord& r, const std::string& prefix)
{
    return std::any_of(r.flags.begin(), r.flags.end(), [&](const std::string& f) { return f.rfind(prefix, 0) == 0; });
}

PointConfig small_point(double tau, double gamma)
{
    PointConfig p;
    p.params = {3, 2, tau, gamma};
    p.e_mid = 200.0;
    p.half_width = 50.0;
    p.brody.bootstrap_resamples = 20;
    return p;
}

std::map<std::string, std::string> read_tree(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_text_file(e.path());
    return out;
}

} // namespace

TEST_CASE("config defaults and overrides")
{
    const RunConfig d = parse_config("");
    CHECK(d.sweep.particles == std::vector<int>{4});
    CHECK(d.sweep.wells == std::vector<int>{2});
    CHECK(d.sweep.tau.min == 12.5);
    CHECK(d.sweep.tau.steps == 1);
    CHECK(d.sweep.gamma.min == 20.0);
    CHECK_FALSE(d.grid_given);
    CHECK(d.sweep.point.e_cut == 0);
    CHECK(d.sweep.point.scheme == CouplingScheme::renormalized);
    CHECK(d.sweep.point.e_mid == 300.0);
    CHECK(d.sweep.point.half_width == 60.0);
    CHECK(d.sweep.point.diagnostics.brody);
    CHECK_FALSE(d.sweep.point.diagnostics.survival);
    CHECK(d.sweep.point.gamma_bins == 50);
    CHECK(d.sweep.point.brody.bootstrap_resamples == 200);

    const std::string text = "[model]\nparticles = 2, 3\nwells = 2,10\n[grid]\ntau_min = 0\ntau_max = 20\ntau_steps = 5\n"
                             "gamma_min = 5\ngamma_max = 45\ngamma_steps = 9\n[window]\ne_mid = 700\nhalf_width = 100\n";
    const RunConfig g = parse_config(text, {"basis.e_cut=900", "diagnostics.survival = yes", "run.workers=3"});
    CHECK(g.grid_given);
    CHECK(g.sweep.particles == std::vector<int>{2, 3});
    CHECK(g.sweep.wells == std::vector<int>{2, 10});
    CHECK(g.sweep.tau.values() == std::vector<double>{0, 5, 10, 15, 20});
    CHECK(g.sweep.gamma.values().size() == 9);
    CHECK(g.sweep.point.e_cut == 900);
    CHECK(g.sweep.point.diagnostics.survival);
    CHECK(g.sweep.workers == 3);
    CHECK(g.sweep.point.e_mid == 700.0);
}

TEST_CASE("config errors")
{
    CHECK_THROWS_AS(parse_config("[nonsense]\na = 1\n"), Error);
    CHECK_THROWS_AS(parse_config("[model]\nparticle = 4\n"), Error);
    CHECK_THROWS_AS(parse_config("[grid]\ntau_min = 0\ntau_max = 10\n"), Error);
    CHECK_THROWS_AS(parse_config("[grid]\ntau_min = 10\ntau_max = 0\ntau_steps = 3\n"), Error);
    CHECK_THROWS_AS(parse_config("[window]\nhalf_width = -1\n"), Error);
    CHECK_THROWS_AS(parse_config("[diagnostics]\nbrody = perhaps\n"), Error);
    CHECK_THROWS_AS(parse_config("[model]\ntau = 1.5x\n"), Error);
    CHECK_THROWS_AS(parse_config("[model]\nparticles = 2,,3\n"), Error);
    CHECK_THROWS_AS(parse_config("[basis]\nscheme = magic\n"), Error);
    CHECK_THROWS_AS(parse_config("", {"no_dot=3"}), Error);
    CHECK_THROWS_AS(parse_config("", {"model.color=blue"}), Error);
    CHECK_THROWS_AS(load_config("/nonexistent/mwchaos.ini"), Error);
}

TEST_CASE("default config text parses to the defaults")
{
    const RunConfig a = parse_config("");
    const RunConfig b = parse_config(default_config_text());
    CHECK(a.sweep.particles == b.sweep.particles);
    CHECK(a.sweep.tau.min == b.sweep.tau.min);
    CHECK(a.sweep.point.brody.seed == b.sweep.point.brody.seed);
    CHECK(a.sweep.point.time_grid.points == b.sweep.point.time_grid.points);
    CHECK(a.sweep.output_dir == b.sweep.output_dir);
}

TEST_CASE("numbers round-trip through text")
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double v = std::ldexp(u(rng), static_cast<int>(rng() % 200) - 100);
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("csv round-trip")
{
    CsvTable t;
    t.kind = "spacing_histogram";
    t.metadata = {{"N", "4"}, {"beta", format_double(0.1 + 0.2)}};
    t.columns = {"s_bin_center", "empirical_density"};
    t.add_row({0.05, 1.0 / 3.0});
    t.add_row({0.15, std::nan("")});
    const std::string text = t.to_string();
    const CsvTable back = parse_csv(text);
    CHECK(back.kind == t.kind);
    CHECK(back.metadata == t.metadata);
    CHECK(back.columns == t.columns);
    CHECK(back.rows == t.rows);
    CHECK(back.number(0, 1) == 1.0 / 3.0);
    CHECK(std::isnan(back.number(1, 1)));
    CHECK(back.to_string() == text);
    CHECK(text.rfind("# mwchaos-csv v", 0) == 0);
}

TEST_CASE("cache round-trip")
{
    TempDir dir("cache");
    const SpectrumCache cache(dir.path);
    const HamiltonianParams p{2, 3, 4.5, 7.25};
    const SpectralResult vec = solve_sector(p, 150, CouplingScheme::renormalized, true);
    const SpectralResult val = solve_sector(p, 150, CouplingScheme::renormalized, false);
    CHECK_FALSE(cache.load(p, 150, CouplingScheme::renormalized, false));
    cache.store(val);
    CHECK_FALSE(cache.load(p, 150, CouplingScheme::renormalized, true));
    const auto v1 = cache.load(p, 150, CouplingScheme::renormalized, false);
    REQUIRE(v1);
    CHECK(std::memcmp(v1->eigenvalues.data(), val.eigenvalues.data(), sizeof(double) * val.dim()) == 0);
    cache.store(vec);
    const auto v2 = cache.load(p, 150, CouplingScheme::renormalized, true);
    REQUIRE(v2);
    CHECK(v2->eigenvectors == vec.eigenvectors);
    CHECK(v2->basis_energies == vec.basis_energies);
    CHECK(v2->params == p);
    // Different bits of tau are a different key.
    CHECK_FALSE(cache.load({2, 3, std::nextafter(4.5, 5.0), 7.25}, 150, CouplingScheme::renormalized, false));
    CHECK_FALSE(cache.load(p, 150, CouplingScheme::bare, false));
    // A damaged file is a miss, not an error.
    const auto file = cache.path_for(p, 150, CouplingScheme::renormalized, false);
    {
        std::string bytes = read_text_file(file);
        bytes.resize(bytes.size() / 2);
        write_text_file(file, bytes);
    }
    CHECK_FALSE(cache.load(p, 150, CouplingScheme::renormalized, false));
    bool hit = true;
    const auto again = solve_cached(&cache, p, 150, CouplingScheme::renormalized, false, &hit);
    CHECK_FALSE(hit);
    CHECK(again.eigenvalues == val.eigenvalues);
}

TEST_CASE("cache keeps window eigenvectors")
{
    TempDir dir("window");
    const SpectrumCache cache(dir.path);
    const HamiltonianParams p{3, 2, 6.0, 6.0};
    bool hit = true;
    const auto a = solve_cached(&cache, p, 300, CouplingScheme::renormalized, EnergyRange{100.0, 140.0}, &hit);
    CHECK_FALSE(hit);
    const auto b = solve_cached(&cache, p, 300, CouplingScheme::renormalized, EnergyRange{110.0, 130.0}, &hit);
    CHECK(hit);
    CHECK(b.vector_offset == a.vector_offset);
    CHECK(b.eigenvectors == a.eigenvectors);
    CHECK(b.eigenvalues == a.eigenvalues);
    // A wider window is not covered and replaces the entry.
    const auto c = solve_cached(&cache, p, 300, CouplingScheme::renormalized, EnergyRange{90.0, 140.0}, &hit);
    CHECK_FALSE(hit);
    CHECK(c.eigenvectors.cols() > a.eigenvectors.cols());
    solve_cached(&cache, p, 300, CouplingScheme::renormalized, EnergyRange{90.0, 140.0}, &hit);
    CHECK(hit);
    // A full solve covers any window.
    const auto full = solve_sector(p, 300, CouplingScheme::renormalized, true);
    cache.store(full);
    const auto d = solve_cached(&cache, p, 300, CouplingScheme::renormalized, EnergyRange{0.0, 300.0}, &hit);
    CHECK(hit);
    CHECK(d.eigenvectors.cols() == d.dim());
}

TEST_CASE("point with a warm cache gives the same record")
{
    TempDir dir("warm");
    const SpectrumCache cache(dir.path);
    PointConfig p = small_point(10.0, 10.0);
    p.diagnostics.survival = true;
    const PointResult cold = run_point(p, &cache);
    const PointResult warm = run_point(p, &cache);
    INFO(to_json(cold.record).dump());
    CHECK_FALSE(cold.record.flagged());
    CHECK(cold.record.cache_misses > 0);
    CHECK(warm.record.cache_misses == 0);
    CHECK(warm.record.cache_hits > 0);
    CHECK(to_json(cold.record, false).dump() == to_json(warm.record, false).dump());
    CHECK(cold.record.beta.has_value());
    CHECK(cold.record.kurtosis.has_value());
    CHECK(cold.record.s_inf.has_value());
    CHECK(*cold.record.converged_through >= p.e_mid + p.half_width);
}

TEST_CASE("uncoupled point is flagged")
{
    PointConfig p = small_point(0.0, 0.0);
    const PointResult r = run_point(p, nullptr);
    INFO(to_json(r.record).dump());
    CHECK(r.record.flagged());
    CHECK(has_flag(r.record, "picket_fence_regime"));
    // Off-diagonal elements vanish, so the ETH statistics refuse to report.
    CHECK_FALSE(r.record.kurtosis.has_value());
    CHECK(has_flag(r.record, "eth_failed"));
}

TEST_CASE("unconverged window emits no numbers")
{
    PointConfig p = small_point(10.0, 10.0);
    p.e_cut = 120;
    const PointResult r = run_point(p, nullptr);
    CHECK(has_flag(r.record, "unconverged_window"));
    CHECK_FALSE(r.record.beta.has_value());
    CHECK_FALSE(r.record.kurtosis.has_value());
    CHECK_FALSE(r.record.eta.has_value());
    const auto j = to_json(r.record, false);
    CHECK(j["brody"]["beta"].is_null());
    CHECK(j["kurtosis"].is_null());
}

TEST_CASE("sweep: one record per grid point and byte-identical reruns")
{
    TempDir dir("sweep");
    SweepConfig s;
    s.particles = {3};
    s.wells = {2};
    s.tau = {5.0, 15.0, 3};
    s.gamma = {5.0, 15.0, 3};
    s.point = small_point(0.0, 0.0);
    s.point.diagnostics = {true, false, false, false};
    s.output_dir = dir.path / "out";
    s.cache_dir = dir.path / "cache";
    s.workers = 2;
    const SweepResult first = run_sweep(s);
    REQUIRE(first.records.size() == 9);
    CHECK(first.all_clean());
    // tau runs fastest
    CHECK(first.records[1].params.tau == 10.0);
    CHECK(first.records[1].params.gamma == 5.0);
    CHECK(first.records[3].params.gamma == 10.0);
    const CsvTable t = read_csv(s.output_dir / "sweep.csv");
    CHECK(t.rows.size() == 9);
    REQUIRE(first.summary.argmax_beta);
    for (const auto& r : first.records) CHECK(*r.beta <= *first.records[*first.summary.argmax_beta].beta);
    CHECK_FALSE(first.summary.argmin_kurtosis);

    auto before = read_tree(s.output_dir);
    const SweepResult second = run_sweep(s);
    for (const auto& r : second.records) CHECK(r.cache_misses == 0);
    auto after = read_tree(s.output_dir);
    before.erase("run_log.json");
    after.erase("run_log.json");
    CHECK(before.size() == after.size());
    CHECK(before == after);
}

TEST_CASE("sweep keeps going past failed points")
{
    TempDir dir("partial");
    SweepConfig s;
    s.particles = {3};
    s.wells = {2};
    s.tau = {0.0, 10.0, 2};
    s.gamma = {0.0, 0.0, 1};
    s.point = small_point(0.0, 0.0);
    s.point.diagnostics = {true, true, false, false};
    s.output_dir = dir.path;
    const SweepResult r = run_sweep(s);
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].flagged());
    CHECK(r.records[1].beta.has_value());
    CHECK_FALSE(r.all_clean());
}

TEST_CASE("unwritable output directory fails before any compute")
{
    TempDir dir("unwritable");
    write_text_file(dir.path / "blocker", "file, not a directory\n");
    SweepConfig s;
    s.particles = {3};
    s.wells = {2};
    s.tau = {5.0, 5.0, 1};
    s.gamma = {5.0, 5.0, 1};
    s.point = small_point(0.0, 0.0);
    s.output_dir = dir.path / "blocker" / "out";
    s.cache_dir = dir.path / "cache";
    CHECK_THROWS_AS(run_sweep(s), Error);
    CHECK_FALSE(fs::exists(s.cache_dir));
}

TEST_CASE("memory estimate and admission")
{
    PointConfig p = small_point(5.0, 5.0);
    const double with_vectors = estimated_point_bytes(p);
    p.diagnostics = {true, false, false, false};
    const double values_only = estimated_point_bytes(p);
    CHECK(values_only > 0.0);
    CHECK(with_vectors > values_only);

    // A budget below one point still runs points one at a time.
    TempDir dir("budget");
    SweepConfig s;
    s.particles = {3};
    s.wells = {2};
    s.tau = {5.0, 10.0, 2};
    s.gamma = {5.0, 5.0, 1};
    s.point = p;
    s.workers = 4;
    s.memory_budget_mb = 1e-6;
    const SweepResult r = run_sweep(s);
    CHECK(r.records.size() == 2);
    CHECK(r.all_clean());
}

TEST_CASE("rendering")
{
    PointConfig p = small_point(10.0, 10.0);
    p.diagnostics.survival = true;
    const PointResult res = run_point(p, nullptr);
    REQUIRE_FALSE(res.record.flagged());

    const CsvTable sweep = parse_csv(sweep_table({res.record}).to_string());
    const std::string h1 = render(sweep, RenderKind::heatmap, {"beta", 0, 0});
    const std::string h2 = render(parse_csv(sweep_table({res.record}).to_string()), RenderKind::heatmap, {"beta", 0, 0});
    CHECK(h1 == h2);
    CHECK(h1.find("<svg") != std::string::npos);
    CHECK(h1.find("color_min") != std::string::npos);
    CHECK(h1.find("color_max") != std::string::npos);

    const CsvTable surv = parse_csv(survival_table(*res.outputs.survival, res.record).to_string());
    const std::string s1 = render(surv, RenderKind::survival_curve);
    CHECK(s1 == render(surv, RenderKind::survival_curve));
    for (const char* label : {">raw<", ">smoothed<", ">analytic<", ">S_inf<"}) CHECK(s1.find(label) != std::string::npos);

    const CsvTable spacing = parse_csv(spacing_table(*res.outputs.histogram, res.record).to_string());
    CHECK(render(spacing, RenderKind::spacing_hist) == render(spacing, RenderKind::spacing_hist));
    const CsvTable gamma = parse_csv(gamma_table(*res.outputs.gamma, res.record).to_string());
    CHECK(render(gamma, RenderKind::gamma_scatter).find("<svg") != std::string::npos);

    // Asking for a diagnostic that was not run names the toggle.
    DiagnosticsRecord bare = res.record;
    bare.kurtosis.reset();
    try {
        render(parse_csv(sweep_table({bare}).to_string()), RenderKind::heatmap, {"kurtosis", 0, 0});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("diagnostics.kurtosis") != std::string::npos);
    }
    CHECK_THROWS_AS(render(spacing, RenderKind::survival_curve), Error);
    CHECK_THROWS_AS(render_kind_from_string("pie"), Error);
}
