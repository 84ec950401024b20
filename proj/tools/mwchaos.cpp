// Command-line driver: single points, grid sweeps, well scans, survival
// curves, exactly solvable limits and SVG rendering.

#include "mwchaos/config.hpp"
#include "mwchaos/io.hpp"
#include "mwchaos/limits.hpp"
#include "mwchaos/pipeline.hpp"
#include "mwchaos/render.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

using namespace mwchaos;

namespace {

struct Common {
    std::string config;
    std::vector<std::string> set;
    std::string output;
    std::optional<int> particles, wells;
    std::optional<double> tau, gamma;

    void add_to(CLI::App* app)
    {
        app->add_option("-c,--config", config, "INI config file (defaults apply when omitted)");
        app->add_option("-s,--set", set, "Override, e.g. window.e_mid=700 (repeatable)");
        app->add_option("-o,--output", output, "Output directory (overrides run.output_dir)");
        app->add_option("-N,--particles", particles, "Particle number");
        app->add_option("-W,--wells", wells, "Number of wells");
        app->add_option("--tau", tau, "Barrier strength");
        app->add_option("--gamma", gamma, "Contact strength");
    }

    RunConfig load() const
    {
        std::vector<std::string> o = set;
        if (particles) o.push_back("model.particles=" + std::to_string(*particles));
        if (wells) o.push_back("model.wells=" + std::to_string(*wells));
        if (tau) o.push_back("model.tau=" + format_double(*tau));
        if (gamma) o.push_back("model.gamma=" + format_double(*gamma));
        if (!output.empty()) o.push_back("run.output_dir=" + output);
        RunConfig rc = config.empty() ? parse_config("", o) : load_config(config, o);
        return rc;
    }
};

PointConfig single_point(const RunConfig& rc)
{
    const SweepConfig& s = rc.sweep;
    if (s.particles.size() != 1 || s.wells.size() != 1 || s.tau.steps != 1 || s.gamma.steps != 1)
        throw Error("this command runs one point; the config describes a grid (use 'sweep')");
    PointConfig p = s.point;
    p.params = HamiltonianParams{s.particles[0], s.wells[0], s.tau.min, s.gamma.min};
    p.params.validate();
    return p;
}

void report_flags(const DiagnosticsRecord& r)
{
    for (const auto& f : r.flags)
        std::cerr << "flag [" << point_tag(r.params) << "] " << f << "\n";
}

int run_single(const RunConfig& rc)
{
    const PointConfig p = single_point(rc);
    std::optional<SpectrumCache> cache;
    if (!rc.sweep.cache_dir.empty()) cache.emplace(rc.sweep.cache_dir);
    const auto& out_dir = rc.sweep.output_dir;
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

    const PointResult res = run_point(p, cache ? &*cache : nullptr);
    const auto json = to_json(res.record);
    std::cout << json.dump(2) << "\n";
    if (!out_dir.empty()) {
        const std::string tag = point_tag(p.params);
        write_text_file(out_dir / (tag + "_record.json"), to_json(res.record, true).dump(2) + "\n");
        write_point_files(out_dir, res);
        if (res.outputs.survival) {
            const CsvTable t = survival_table(*res.outputs.survival, res.record);
            write_text_file(out_dir / (tag + "_survival.svg"), render_survival_curve(t));
        }
        if (res.outputs.histogram)
            write_text_file(out_dir / (tag + "_spacing.svg"),
                            render_spacing_hist(spacing_table(*res.outputs.histogram, res.record)));
        if (res.outputs.gamma && res.record.gamma_bins_reported.value_or(0) > 0)
            write_text_file(out_dir / (tag + "_gamma.svg"),
                            render_gamma_scatter(gamma_table(*res.outputs.gamma, res.record)));
    }
    report_flags(res.record);
    return res.record.flagged() ? 1 : 0;
}

int run_grid(const RunConfig& rc, bool wells_scan)
{
    SweepResult sweep;
    if (wells_scan) {
        const WellsScanResult w = run_wells_scan(rc.sweep);
        sweep = w.sweep;
        std::cout << "N,W,K_min,beta_max\n";
        for (const auto& row : w.rows) {
            auto val = [&](const std::optional<std::size_t>& i, bool kurt) -> std::string {
                if (!i) return "null";
                const auto& r = w.sweep.records[*i];
                return format_double(kurt ? *r.kurtosis : *r.beta);
            };
            std::cout << row.particles << "," << row.wells << "," << val(row.argmin_kurtosis, true) << ","
                      << val(row.argmax_beta, false) << "\n";
        }
    } else {
        sweep = run_sweep(rc.sweep);
        std::cout << to_json(sweep.summary, sweep.records).dump(2) << "\n";
    }
    for (const auto& r : sweep.records) report_flags(r);
    return sweep.all_clean() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Few-boson multi-well chaos diagnostics"};
    app.require_subcommand(1);

    Common point_opts, sweep_opts, scan_opts, surv_opts;
    auto* point = app.add_subcommand("point", "Diagnose one (N, W, tau, gamma) point");
    point_opts.add_to(point);
    auto* sweep = app.add_subcommand("sweep", "Run every point of a (tau, gamma) grid");
    sweep_opts.add_to(sweep);
    auto* scan = app.add_subcommand("wells-scan", "Grid sweep for each W with K_min and beta_max per W");
    scan_opts.add_to(scan);
    auto* surv = app.add_subcommand("survival", "Survival probability of a uniform window state");
    surv_opts.add_to(surv);

    auto* limits = app.add_subcommand("limits", "Exactly solvable spectra");
    std::string limit_kind = "kp";
    int lim_n = 2, lim_w = 2, corner = 1;
    double lim_tau = 0.0, e_max = 100.0;
    std::string lim_out;
    limits->add_option("kind", limit_kind, "kp | corner | tg")->check(CLI::IsMember({"kp", "corner", "tg"}));
    limits->add_option("-N,--particles", lim_n, "Particle number (corner, tg)");
    limits->add_option("-W,--wells", lim_w, "Number of wells");
    limits->add_option("--tau", lim_tau, "Barrier strength (kp, tg)");
    limits->add_option("--corner", corner, "Corner model 1..4")->check(CLI::Range(1, 4));
    limits->add_option("-e,--e-max", e_max, "Highest energy listed");
    limits->add_option("-o,--output", lim_out, "CSV file (stdout when omitted)");

    auto* rend = app.add_subcommand("render", "SVG from a CSV table written by the other commands");
    std::string kind_name, input, output, column = "beta";
    int r_n = 0, r_w = 0;
    rend->add_option("kind", kind_name, "heatmap | spacing_hist | gamma_scatter | survival_curve")->required();
    rend->add_option("-i,--input", input, "Input CSV")->required()->check(CLI::ExistingFile);
    rend->add_option("-o,--output", output, "Output SVG")->required();
    rend->add_option("--column", column, "Heatmap column of sweep.csv");
    rend->add_option("-N,--particles", r_n, "Heatmap: N to show when the sweep has several");
    rend->add_option("-W,--wells", r_w, "Heatmap: W to show when the sweep has several");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*point) return run_single(point_opts.load());
        if (*sweep) return run_grid(sweep_opts.load(), false);
        if (*scan) return run_grid(scan_opts.load(), true);
        if (*surv) {
            RunConfig rc = surv_opts.load();
            auto& d = rc.sweep.point.diagnostics;
            d.survival = true;
            d.brody = d.kurtosis = d.gamma = false;
            return run_single(rc);
        }
        if (*limits) {
            CsvTable t;
            if (limit_kind == "kp") {
                t = kp_table(kp_levels(lim_w, lim_tau, e_max));
            } else if (limit_kind == "corner") {
                t = levels_table(corner_spectrum(corner, lim_n, lim_w, static_cast<long>(std::floor(e_max))),
                                 "corner" + std::to_string(corner));
            } else {
                // Composition needs single-particle levels up to e_max minus the lowest N-1 of them.
                const KPLevels kp = kp_levels(lim_w, lim_tau, e_max);
                t = levels_table(tg_compose(kp, lim_n, e_max), "tonks_girardeau");
                t.metadata.emplace_back("tau", format_double(lim_tau));
            }
            if (lim_out.empty())
                std::cout << t.to_string();
            else
                write_text_file(lim_out, t.to_string());
            return 0;
        }
        if (*rend) {
            const CsvTable t = read_csv(input);
            write_text_file(output, render(t, render_kind_from_string(kind_name), HeatmapOptions{column, r_n, r_w}));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
