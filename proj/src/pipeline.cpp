#include "mwchaos/pipeline.hpp"

#include "mwchaos/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <ctime>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

namespace mwchaos {

namespace {

std::string utc_now()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

long scaled_cutoff(long e_cut) { return (6 * e_cut + 4) / 5; } // ceil(1.2 e_cut)

bool certified_through(const SpectralResult& s, double top)
{
    const Eigen::Index n = s.converged_count();
    if (s.converged.empty() || n == 0) return false;
    if (n < s.dim()) return s.eigenvalues(n) > top;
    return s.eigenvalues(n - 1) >= top;
}

void brody_stage(const PointConfig& cfg, const SpectralResult& s, DiagnosticsRecord& rec, PointOutputs& out)
{
    const double top = cfg.e_mid + cfg.half_width;
    std::vector<double> levels;
    for (Eigen::Index k = 0; k < s.converged_count() && s.eigenvalues(k) <= top; ++k) levels.push_back(s.eigenvalues(k));
    EnergyRange range{-std::numeric_limits<double>::infinity(), top};
    if (cfg.brody_window == BrodyWindow::energy) range.min = cfg.e_mid - cfg.half_width;
    const UnfoldedSpectrum u = unfold(levels, cfg.params.particles, range);
    const SpacingSample sample = spacings(u);
    const BrodyFit fit = fit_brody(sample, cfg.brody);
    const BrodyFit hist = fit_brody_histogram(sample);
    rec.beta = fit.beta;
    rec.beta_error = fit.fit_error;
    rec.beta_histogram = hist.beta;
    rec.spacing_count = static_cast<long>(sample.spacings.size());
    rec.brody_window_min = u.window_min;
    rec.brody_window_max = u.window_max;
    out.histogram = spacing_histogram(sample, fit.beta);
    out.unfolded_spacings = sample.spacings;
    if (fit.beta < 0.0) rec.flags.push_back("picket_fence_regime: fitted beta < 0 indicates degeneracies");
}

void eth_stage(const PointConfig& cfg, const SpectralResult& s, DiagnosticsRecord& rec, PointOutputs& out)
{
    const EthDiagnostics eth = analyze_eth(s, cfg.e_mid, cfg.half_width, cfg.gamma_bins);
    if (cfg.diagnostics.kurtosis) rec.kurtosis = eth.kurtosis;
    if (cfg.diagnostics.gamma) {
        rec.gamma_pooled = eth.gamma.pooled;
        long reported = 0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& b : eth.gamma.bins) {
            if (!b.reported) continue;
            ++reported;
            lo = std::min(lo, b.gamma - std::numbers::pi / 2);
            hi = std::max(hi, b.gamma - std::numbers::pi / 2);
        }
        rec.gamma_bins_reported = reported;
        if (reported > 0) {
            rec.gamma_min_deviation = lo;
            rec.gamma_max_deviation = hi;
        } else {
            rec.flags.push_back("gamma_empty: no frequency bin holds enough pairs");
        }
        out.gamma = eth.gamma;
    }
}

void survival_stage(const PointConfig& cfg, const SpectralResult& s, DiagnosticsRecord& rec, PointOutputs& out)
{
    const WindowState state = window_state(s, cfg.e_mid, cfg.half_width);
    SurvivalCurve c = survival_curve(state, cfg.time_grid, cfg.smoothing_dt);
    rec.s_inf = c.s_inf;
    const CorrelationHole hole = correlation_hole(c);
    rec.hole_depth = hole.depth;
    rec.hole_time = hole.time;
    rec.hole_significance = hole.significance;

    try {
        const RampAgreement ramp = ramp_agreement(c);
        rec.ramp_max_deviation = ramp.max_deviation;
        rec.ramp_mean_deviation = ramp.mean_deviation;
    } catch (const Error& e) {
        rec.flags.push_back(std::string("ramp_unavailable: ") + e.what());
    }
    out.survival = std::move(c);
}

template <typename F>
void guarded(DiagnosticsRecord& rec, const std::string& name, F&& f)
{
    try {
        f();
    } catch (const std::exception& e) {
        rec.flags.push_back(name + "_failed: " + e.what());
    }
}

} // namespace

CertifiedSpectrum certified_spectrum(const PointConfig& cfg, const SpectrumCache* cache, bool with_vectors)
{
    cfg.params.validate();
    CertifiedSpectrum out;
    // Eigenvectors are only used inside the energy window.
    const EnergyRange window{cfg.e_mid - cfg.half_width, cfg.e_mid + cfg.half_width};
    auto solve = [&](long e, bool vectors) {
        bool hit = false;
        SpectralResult r = vectors ? solve_cached(cache, cfg.params, e, cfg.scheme, window, &hit)
                                   : solve_cached(cache, cfg.params, e, cfg.scheme, false, &hit);
        (hit ? out.cache_hits : out.cache_misses) += 1;
        return r;
    };
    const double top = cfg.e_mid + cfg.half_width;
    long e = cfg.e_cut;
    std::optional<SpectralResult> values;
    std::optional<SpectralResult> reference;
    if (e <= 0) {
        // Grow the cutoff by the reference factor until the window is certified;
        // each reference solve becomes the next candidate.
        const long ceiling = cfg.max_e_cut > 0 ? cfg.max_e_cut : static_cast<long>(std::ceil(4.0 * top));
        e = std::max<long>(cfg.params.particles, static_cast<long>(std::ceil(2.0 * top)));
        values = solve(e, false);
        while (true) {
            reference = solve(scaled_cutoff(e), false);
            values->converged = convergence_filter(*values, *reference, cfg.rel_tol);
            if (certified_through(*values, top) || scaled_cutoff(e) > ceiling) break;
            e = scaled_cutoff(e);
            values = std::move(reference);
        }
    } else {
        reference = solve(scaled_cutoff(e), false);
    }
    if (with_vectors || !values) {
        out.spectrum = solve(e, with_vectors);
        out.spectrum.converged = convergence_filter(out.spectrum, *reference, cfg.rel_tol);
    } else {
        out.spectrum = std::move(*values);
    }
    out.reference_cutoff = reference->energy_cutoff;
    return out;
}

PointResult run_point(const PointConfig& cfg, const SpectrumCache* cache)
{
    PointResult res;
    DiagnosticsRecord& rec = res.record;
    rec.params = cfg.params;
    rec.scheme = cfg.scheme;
    rec.e_mid = cfg.e_mid;
    rec.half_width = cfg.half_width;
    rec.started = utc_now();

    const bool vectors = cfg.diagnostics.any_needs_vectors();
    CertifiedSpectrum cs;
    try {
        cs = certified_spectrum(cfg, cache, vectors);
    } catch (const std::exception& e) {
        rec.flags.push_back(std::string("solve_failed: ") + e.what());
        rec.finished = utc_now();
        return res;
    }
    const SpectralResult& s = cs.spectrum;
    rec.cache_hits = cs.cache_hits;
    rec.cache_misses = cs.cache_misses;
    rec.e_cut = s.energy_cutoff;
    rec.dimension = static_cast<long>(s.dim());
    if (s.converged_count() > 0) rec.converged_through = s.eigenvalues(s.converged_count() - 1);

    try {
        rec.eta = static_cast<long>(window_indices(s, cfg.e_mid, cfg.half_width).eta());
    } catch (const std::exception& e) {
        rec.flags.push_back(std::string("unconverged_window: ") + e.what());
        rec.finished = utc_now();
        return res;
    }

    if (cfg.diagnostics.brody) guarded(rec, "brody", [&] { brody_stage(cfg, s, rec, res.outputs); });
    if (cfg.diagnostics.kurtosis || cfg.diagnostics.gamma)
        guarded(rec, "eth", [&] { eth_stage(cfg, s, rec, res.outputs); });
    if (cfg.diagnostics.survival) guarded(rec, "survival", [&] { survival_stage(cfg, s, rec, res.outputs); });
    rec.finished = utc_now();
    return res;
}

std::vector<double> GridAxis::values() const
{
    if (steps < 1) throw Error("grid axis needs at least one step");
    if (steps == 1) return {min};
    std::vector<double> v(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) v[static_cast<std::size_t>(i)] = min + (max - min) * i / (steps - 1);
    return v;
}

bool SweepResult::all_clean() const
{
    return std::none_of(records.begin(), records.end(), [](const auto& r) { return r.flagged(); });
}

double estimated_point_bytes(const PointConfig& cfg)
{
    const long e = cfg.e_cut > 0 ? cfg.e_cut : static_cast<long>(std::ceil(2.0 * (cfg.e_mid + cfg.half_width)));
    const double d = static_cast<double>(build_basis(cfg.params.particles, scaled_cutoff(e)).size());
    // One dense matrix; window eigenvectors add d x eta columns.
    double bytes = 8.0 * d * d * 1.1;
    if (cfg.diagnostics.any_needs_vectors())
        bytes += 8.0 * d * 2.0 * cfg.half_width * dos_model(cfg.params.particles, cfg.e_mid, DosMode::sector_weyl) * 1.5;
    return bytes;
}

namespace {

std::vector<PointConfig> expand_grid(const SweepConfig& cfg)
{
    std::vector<PointConfig> points;
    for (int n : cfg.particles)
        for (int w : cfg.wells)
            for (double g : cfg.gamma.values())
                for (double t : cfg.tau.values()) {
                    PointConfig p = cfg.point;
                    p.params = HamiltonianParams{n, w, t, g};
                    p.params.validate();
                    points.push_back(p);
                }
    return points;
}

void check_writable(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const auto probe = dir / ".write_probe";
    try {
        write_text_file(probe, "ok\n");
        std::filesystem::remove(probe);
    } catch (const std::exception&) {
        throw Error("output directory is not writable: " + dir.string());
    }
}

SweepSummary summarize(const std::vector<DiagnosticsRecord>& records)
{
    SweepSummary s;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.kurtosis && (!s.argmin_kurtosis || *r.kurtosis < *records[*s.argmin_kurtosis].kurtosis))
            s.argmin_kurtosis = i;
        if (r.beta && (!s.argmax_beta || *r.beta > *records[*s.argmax_beta].beta)) s.argmax_beta = i;
    }
    return s;
}

} // namespace

SweepResult run_sweep(const SweepConfig& cfg)
{
    if (!cfg.output_dir.empty()) check_writable(cfg.output_dir);
    const std::vector<PointConfig> points = expand_grid(cfg);
    std::optional<SpectrumCache> cache;
    if (!cfg.cache_dir.empty()) cache.emplace(cfg.cache_dir);

    std::vector<PointResult> results(points.size());
    std::vector<double> need(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) need[i] = estimated_point_bytes(points[i]);

    const double budget = cfg.memory_budget_mb * 1024.0 * 1024.0;
    std::mutex m;
    std::condition_variable cv;
    double in_use = 0.0;
    int running = 0;
    std::size_t next = 0;

    auto worker = [&] {
        while (true) {
            std::size_t i;
            {
                std::unique_lock lock(m);
                if (next >= points.size()) return;
                i = next++;
                // Admission: wait for memory unless nothing else is running.
                cv.wait(lock, [&] { return running == 0 || in_use + need[i] <= budget; });
                in_use += need[i];
                ++running;
            }
            try {
                results[i] = run_point(points[i], cache ? &*cache : nullptr);
            } catch (const std::exception& e) {
                results[i].record.params = points[i].params;
                results[i].record.flags.push_back(std::string("point_failed: ") + e.what());
            }
            if (!cfg.output_dir.empty() && cfg.write_point_files) {
                try {
                    write_point_files(cfg.output_dir / "points", results[i]);
                } catch (const std::exception& e) {
                    results[i].record.flags.push_back(std::string("write_failed: ") + e.what());
                }
            }
            {
                std::lock_guard lock(m);
                in_use -= need[i];
                --running;
            }
            cv.notify_all();
        }
    };
    const int workers = std::max(1, cfg.workers);
    std::vector<std::thread> pool;
    for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    SweepResult out;
    for (auto& r : results) out.records.push_back(std::move(r.record));
    out.summary = summarize(out.records);

    if (!cfg.output_dir.empty()) {
        write_text_file(cfg.output_dir / "sweep.csv", sweep_table(out.records).to_string());
        // Results and run bookkeeping go to separate files so that reruns
        // leave every file but run_log.json byte-identical.
        nlohmann::ordered_json recs = nlohmann::ordered_json::array();
        nlohmann::ordered_json runs = nlohmann::ordered_json::array();
        for (const auto& r : out.records) {
            recs.push_back(to_json(r, false));
            runs.push_back({{"point", point_tag(r.params)},
                            {"started", r.started},
                            {"finished", r.finished},
                            {"cache_hits", r.cache_hits},
                            {"cache_misses", r.cache_misses}});
        }
        write_text_file(cfg.output_dir / "records.json", recs.dump(2) + "\n");
        write_text_file(cfg.output_dir / "run_log.json", runs.dump(2) + "\n");
        write_text_file(cfg.output_dir / "summary.json", to_json(out.summary, out.records).dump(2) + "\n");
    }
    return out;
}

WellsScanResult run_wells_scan(const SweepConfig& cfg)
{
    WellsScanResult out;
    out.sweep = run_sweep(cfg);
    const auto& recs = out.sweep.records;
    for (int n : cfg.particles) {
        for (int w : cfg.wells) {
            WellsScanRow row;
            row.particles = n;
            row.wells = w;
            for (std::size_t i = 0; i < recs.size(); ++i) {
                const auto& r = recs[i];
                if (r.params.particles != n || r.params.wells != w) continue;
                if (r.kurtosis && (!row.argmin_kurtosis || *r.kurtosis < *recs[*row.argmin_kurtosis].kurtosis))
                    row.argmin_kurtosis = i;
                if (r.beta && (!row.argmax_beta || *r.beta > *recs[*row.argmax_beta].beta)) row.argmax_beta = i;
            }
            out.rows.push_back(row);
        }
    }
    if (!cfg.output_dir.empty()) {
        CsvTable t;
        t.kind = "wells_scan";
        t.columns = {"N", "W", "K_min", "tau_at_K_min", "gamma_at_K_min", "beta_max", "tau_at_beta_max",
                     "gamma_at_beta_max"};
        auto text = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("null"); };
        auto at = [&](const std::optional<std::size_t>& i, auto get) -> std::optional<double> {
            if (!i) return std::nullopt;
            return get(recs[*i]);
        };
        auto kurt = [](const DiagnosticsRecord& r) { return r.kurtosis; };
        auto beta = [](const DiagnosticsRecord& r) { return r.beta; };
        auto tau = [](const DiagnosticsRecord& r) { return std::optional<double>(r.params.tau); };
        auto gam = [](const DiagnosticsRecord& r) { return std::optional<double>(r.params.gamma); };
        for (const auto& row : out.rows) {
            t.rows.push_back({std::to_string(row.particles), std::to_string(row.wells),
                              text(at(row.argmin_kurtosis, kurt)), text(at(row.argmin_kurtosis, tau)),
                              text(at(row.argmin_kurtosis, gam)), text(at(row.argmax_beta, beta)),
                              text(at(row.argmax_beta, tau)), text(at(row.argmax_beta, gam))});
        }
        write_text_file(cfg.output_dir / "wells_scan.csv", t.to_string());
    }
    return out;
}

} // namespace mwchaos
