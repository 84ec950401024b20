#include "mwchaos/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <unistd.h>

namespace mwchaos {

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : "null"; }
std::string opt(const std::optional<long>& v) { return v ? std::to_string(*v) : "null"; }

template <typename T>
nlohmann::ordered_json jopt(const std::optional<T>& v)
{
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::string short_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

void add_point_metadata(CsvTable& t, const DiagnosticsRecord& r)
{
    t.metadata.emplace_back("N", std::to_string(r.params.particles));
    t.metadata.emplace_back("W", std::to_string(r.params.wells));
    t.metadata.emplace_back("tau", format_double(r.params.tau));
    t.metadata.emplace_back("gamma", format_double(r.params.gamma));
    t.metadata.emplace_back("E_mid", format_double(r.e_mid));
    t.metadata.emplace_back("dE", format_double(r.half_width));
    t.metadata.emplace_back("E_cut", opt(r.e_cut));
    t.metadata.emplace_back("scheme", to_string(r.scheme));
    t.metadata.emplace_back("eta", opt(r.eta));
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

} // namespace

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void CsvTable::add_row(const std::vector<double>& values)
{
    std::vector<std::string> row;
    row.reserve(values.size());
    for (double v : values) row.push_back(format_double(v));
    rows.push_back(std::move(row));
}

std::string CsvTable::to_string() const
{
    std::ostringstream out;
    out << "# mwchaos-csv v" << csv_schema_version << " kind=" << kind << "\n";
    for (const auto& [k, v] : metadata) out << "# " << k << "=" << v << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
    return out.str();
}

std::optional<std::size_t> CsvTable::column(const std::string& name) const
{
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    return std::nullopt;
}

double CsvTable::number(std::size_t row, std::size_t col) const
{
    const std::string& s = rows.at(row).at(col);
    if (s == "null" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::stod(s);
}

std::string CsvTable::meta(const std::string& key) const
{
    for (const auto& [k, v] : metadata)
        if (k == key) return v;
    return {};
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << text;
        out.flush();
        if (!out) throw Error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

CsvTable parse_csv(const std::string& text)
{
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.substr(line.find_first_not_of("# "));
            if (first && body.rfind("mwchaos-csv", 0) == 0) {
                const auto k = body.find("kind=");
                if (k != std::string::npos) t.kind = body.substr(k + 5);
            } else {
                const auto eq = body.find('=');
                if (eq != std::string::npos) t.metadata.emplace_back(body.substr(0, eq), body.substr(eq + 1));
            }
            first = false;
            continue;
        }
        first = false;
        if (t.columns.empty())
            t.columns = split(line, ',');
        else
            t.rows.push_back(split(line, ','));
    }
    return t;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_text_file(path)); }

CsvTable spacing_table(const SpacingHistogram& h, const DiagnosticsRecord& r)
{
    CsvTable t;
    t.kind = "spacing_histogram";
    add_point_metadata(t, r);
    t.metadata.emplace_back("beta", opt(r.beta));
    t.metadata.emplace_back("beta_error", opt(r.beta_error));
    t.metadata.emplace_back("spacings", opt(r.spacing_count));
    t.metadata.emplace_back("fit_window_min", opt(r.brody_window_min));
    t.metadata.emplace_back("fit_window_max", opt(r.brody_window_max));
    t.columns = {"s_bin_center", "empirical_density", "brody_fit_density", "poisson_ref", "wd_ref"};
    for (std::size_t i = 0; i < h.bin_centers.size(); ++i)
        t.add_row({h.bin_centers[i], h.empirical[i], h.brody[i], h.poisson[i], h.wigner_dyson[i]});
    return t;
}

CsvTable gamma_table(const GammaTable& g, const DiagnosticsRecord& r)
{
    CsvTable t;
    t.kind = "gamma_ratio";
    add_point_metadata(t, r);
    t.metadata.emplace_back("kurtosis", opt(r.kurtosis));
    t.metadata.emplace_back("gamma_pooled", format_double(g.pooled));
    t.metadata.emplace_back("skipped_bins", std::to_string(g.skipped));
    t.columns = {"omega_bin_center", "Gamma", "pair_count"};
    for (const auto& b : g.bins) {
        t.rows.push_back({format_double(b.center), b.reported ? format_double(b.gamma) : "null",
                          std::to_string(b.pair_count)});
    }
    return t;
}

CsvTable eth_scalar_table(const DiagnosticsRecord& r)
{
    CsvTable t;
    t.kind = "eth_record";
    t.columns = {"N", "W", "tau", "gamma", "E_mid", "dE", "eta", "kurtosis"};
    t.rows.push_back({std::to_string(r.params.particles), std::to_string(r.params.wells), format_double(r.params.tau),
                      format_double(r.params.gamma), format_double(r.e_mid), format_double(r.half_width), opt(r.eta),
                      opt(r.kurtosis)});
    return t;
}

CsvTable survival_table(const SurvivalCurve& c, const DiagnosticsRecord& r)
{
    CsvTable t;
    t.kind = "survival";
    add_point_metadata(t, r);
    t.metadata.emplace_back("dt_smoothing", format_double(c.smoothing_dt));
    t.metadata.emplace_back("hole_depth", opt(r.hole_depth));
    t.metadata.emplace_back("hole_time", opt(r.hole_time));
    t.columns = {"t", "S_P", "S_P_smoothed", "S_P_analytic", "S_inf"};
    for (std::size_t i = 0; i < c.times.size(); ++i)
        t.add_row({c.times[i], c.values[i], c.smoothed[i], c.analytic[i], c.s_inf});
    return t;
}

CsvTable levels_table(const CornerSpectrum& s, const std::string& label)
{
    CsvTable t;
    t.kind = "levels";
    t.metadata.emplace_back("source", label);
    t.metadata.emplace_back("N", std::to_string(s.particles));
    t.metadata.emplace_back("W", std::to_string(s.wells));
    t.columns = {"energy", "degeneracy", "parity"};
    for (const auto& l : s.levels)
        t.rows.push_back({format_double(l.energy), std::to_string(l.degeneracy), std::to_string(l.parity)});
    return t;
}

CsvTable kp_table(const KPLevels& kp)
{
    CsvTable t;
    t.kind = "levels";
    t.metadata.emplace_back("source", "single_particle");
    t.metadata.emplace_back("W", std::to_string(kp.wells));
    t.metadata.emplace_back("tau", format_double(kp.tau));
    t.columns = {"energy", "degeneracy", "parity"};
    for (std::size_t i = 0; i < kp.energies.size(); ++i)
        t.rows.push_back({format_double(kp.energies[i]), "1", std::to_string(kp.parities[i])});
    return t;
}

CsvTable sweep_table(const std::vector<DiagnosticsRecord>& records)
{
    CsvTable t;
    t.kind = "sweep";
    t.columns = {"N",           "W",          "tau",          "gamma",         "E_cut",          "eta",
                 "beta",        "beta_error", "kurtosis",     "inverse_kurtosis", "gamma_pooled", "gamma_min_dev",
                 "gamma_max_dev", "s_inf",    "hole_depth",   "hole_time",     "flags"};
    for (const auto& r : records) {
        std::optional<double> inv;
        if (r.kurtosis) inv = 1.0 / *r.kurtosis;
        std::string flags;
        for (const auto& f : r.flags) {
            std::string clean = f.substr(0, f.find(':'));
            flags += (flags.empty() ? "" : ";") + clean;
        }
        t.rows.push_back({std::to_string(r.params.particles), std::to_string(r.params.wells),
                          format_double(r.params.tau), format_double(r.params.gamma), opt(r.e_cut), opt(r.eta),
                          opt(r.beta), opt(r.beta_error), opt(r.kurtosis), opt(inv), opt(r.gamma_pooled),
                          opt(r.gamma_min_deviation), opt(r.gamma_max_deviation), opt(r.s_inf), opt(r.hole_depth),
                          opt(r.hole_time), flags});
    }
    return t;
}

nlohmann::ordered_json to_json(const DiagnosticsRecord& r, bool with_run_info)
{
    nlohmann::ordered_json j;
    j["params"] = {{"N", r.params.particles}, {"W", r.params.wells}, {"tau", r.params.tau}, {"gamma", r.params.gamma}};
    j["scheme"] = to_string(r.scheme);
    j["window"] = {{"E_mid", r.e_mid}, {"dE", r.half_width}};
    j["E_cut"] = jopt(r.e_cut);
    j["dimension"] = jopt(r.dimension);
    j["converged_through"] = jopt(r.converged_through);
    j["eta"] = jopt(r.eta);
    j["brody"] = {{"beta", jopt(r.beta)},
                  {"fit_error", jopt(r.beta_error)},
                  {"beta_histogram", jopt(r.beta_histogram)},
                  {"spacings", jopt(r.spacing_count)},
                  {"window_min", jopt(r.brody_window_min)},
                  {"window_max", jopt(r.brody_window_max)}};
    j["kurtosis"] = jopt(r.kurtosis);
    j["gamma"] = {{"pooled", jopt(r.gamma_pooled)},
                  {"min_deviation", jopt(r.gamma_min_deviation)},
                  {"max_deviation", jopt(r.gamma_max_deviation)},
                  {"bins_reported", jopt(r.gamma_bins_reported)}};
    j["survival"] = {{"S_inf", jopt(r.s_inf)},
                     {"hole_depth", jopt(r.hole_depth)},
                     {"hole_time", jopt(r.hole_time)},
                     {"hole_significance", jopt(r.hole_significance)},
                     {"ramp_max_deviation", jopt(r.ramp_max_deviation)},
                     {"ramp_mean_deviation", jopt(r.ramp_mean_deviation)}};
    j["flags"] = r.flags;
    if (with_run_info) {
        j["started"] = r.started;
        j["finished"] = r.finished;
        j["cache_hits"] = r.cache_hits;
        j["cache_misses"] = r.cache_misses;
    }
    return j;
}

nlohmann::ordered_json to_json(const SweepSummary& s, const std::vector<DiagnosticsRecord>& records)
{
    nlohmann::ordered_json j;
    auto point = [&](const std::optional<std::size_t>& i, bool kurt) -> nlohmann::ordered_json {
        if (!i) return nullptr;
        const auto& r = records.at(*i);
        return {{"N", r.params.particles},
                {"W", r.params.wells},
                {"tau", r.params.tau},
                {"gamma", r.params.gamma},
                {kurt ? "kurtosis" : "beta", kurt ? jopt(r.kurtosis) : jopt(r.beta)}};
    };
    j["points"] = records.size();
    long flagged = 0;
    for (const auto& r : records) flagged += r.flagged() ? 1 : 0;
    j["flagged"] = flagged;
    j["argmin_kurtosis"] = point(s.argmin_kurtosis, true);
    j["argmax_beta"] = point(s.argmax_beta, false);
    return j;
}

std::string point_tag(const HamiltonianParams& p)
{
    return "N" + std::to_string(p.particles) + "_W" + std::to_string(p.wells) + "_tau" + short_double(p.tau) +
           "_gamma" + short_double(p.gamma);
}

void write_point_files(const std::filesystem::path& dir, const PointResult& result)
{
    const auto& r = result.record;
    const std::string tag = point_tag(r.params);
    if (result.outputs.histogram)
        write_text_file(dir / (tag + "_spacing.csv"), spacing_table(*result.outputs.histogram, r).to_string());
    if (result.outputs.gamma)
        write_text_file(dir / (tag + "_gamma.csv"), gamma_table(*result.outputs.gamma, r).to_string());
    if (r.kurtosis) write_text_file(dir / (tag + "_eth.csv"), eth_scalar_table(r).to_string());
    if (result.outputs.survival)
        write_text_file(dir / (tag + "_survival.csv"), survival_table(*result.outputs.survival, r).to_string());
}

} // namespace mwchaos
