#include "mwchaos/config.hpp"

#include "mwchaos/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace mwchaos {

namespace {

namespace pt = boost::property_tree;

// Section -> allowed keys. Order here is also the order of default_config_text.
const std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>& schema()
{
    static const std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> s = {
        {"model", {{"particles", "4"}, {"wells", "2"}, {"tau", "12.5"}, {"gamma", "20"}}},
        {"grid",
         {{"tau_min", ""}, {"tau_max", ""}, {"tau_steps", ""}, {"gamma_min", ""}, {"gamma_max", ""},
          {"gamma_steps", ""}}},
        {"basis", {{"e_cut", "auto"}, {"max_e_cut", "auto"}, {"scheme", "renormalized"}, {"rel_tol", "1e-3"}}},
        {"window", {{"e_mid", "300"}, {"half_width", "60"}}},
        {"diagnostics", {{"brody", "true"}, {"kurtosis", "true"}, {"gamma", "true"}, {"survival", "false"}}},
        {"brody", {{"window", "converged"}, {"bootstrap", "200"}, {"seed", "20240611"}, {"resolution", "1e-4"}}},
        {"eth", {{"gamma_bins", "50"}}},
        {"survival", {{"log10_t_min", "-3"}, {"log10_t_max", "2"}, {"points", "2000"}, {"smoothing_dt", "0.02"}}},
        {"run",
         {{"output_dir", "out"}, {"cache_dir", ""}, {"workers", "1"}, {"memory_budget_mb", "2048"},
          {"point_files", "true"}}},
    };
    return s;
}

std::string trim(std::string s)
{
    auto sp = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), sp));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), sp).base(), s.end());
    return s;
}

class Reader {
public:
    explicit Reader(pt::ptree tree) : tree_(std::move(tree)) {}

    bool has(const std::string& key) const { return !raw(key).empty(); }

    std::string raw(const std::string& key) const
    {
        if (auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'))) return trim(*v);
        return default_of(key);
    }

    double number(const std::string& key) const
    {
        const std::string s = raw(key);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.empty() || !std::isfinite(v)) throw Error("config " + key + ": not a number: '" + s + "'");
        return v;
    }

    long integer(const std::string& key) const
    {
        const double v = number(key);
        if (v != std::floor(v) || std::abs(v) > 9e15) throw Error("config " + key + ": not an integer: '" + raw(key) + "'");
        return static_cast<long>(v);
    }

    /// "auto" maps to 0.
    long integer_or_auto(const std::string& key) const { return raw(key) == "auto" ? 0 : integer(key); }

    bool flag(const std::string& key) const
    {
        std::string s = raw(key);
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
        if (s == "false" || s == "no" || s == "off" || s == "0") return false;
        throw Error("config " + key + ": not a boolean: '" + raw(key) + "'");
    }

    std::vector<int> int_list(const std::string& key) const
    {
        std::vector<int> out;
        std::istringstream in(raw(key));
        std::string item;
        while (std::getline(in, item, ',')) {
            item = trim(item);
            std::size_t used = 0;
            int v = 0;
            try {
                v = std::stoi(item, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (item.empty() || used != item.size()) throw Error("config " + key + ": bad integer list '" + raw(key) + "'");
            out.push_back(v);
        }
        if (out.empty()) throw Error("config " + key + ": list is empty");
        return out;
    }

private:
    static std::string default_of(const std::string& key)
    {
        const auto dot = key.find('.');
        const std::string sec = key.substr(0, dot), name = key.substr(dot + 1);
        for (const auto& [s, keys] : schema())
            if (s == sec)
                for (const auto& [k, d] : keys)
                    if (k == name) return d;
        return {};
    }

    pt::ptree tree_;
};

void check_known(const pt::ptree& tree)
{
    for (const auto& [sec, body] : tree) {
        const auto it = std::find_if(schema().begin(), schema().end(), [&](const auto& e) { return e.first == sec; });
        if (it == schema().end()) throw Error("config: unknown section [" + sec + "]");
        if (!body.data().empty()) throw Error("config: key '" + sec + "' outside a section");
        for (const auto& [key, value] : body) {
            (void)value;
            const auto& keys = it->second;
            if (std::none_of(keys.begin(), keys.end(), [&](const auto& k) { return k.first == key; }))
                throw Error("config: unknown key '" + key + "' in [" + sec + "]");
        }
    }
}

GridAxis axis(const Reader& r, const std::string& name, bool& given)
{
    const std::string g = "grid." + name;
    const bool any = r.has(g + "_min") || r.has(g + "_max") || r.has(g + "_steps");
    if (!any) {
        const double v = r.number("model." + name);
        return {v, v, 1};
    }
    if (!(r.has(g + "_min") && r.has(g + "_max") && r.has(g + "_steps")))
        throw Error("config [grid]: " + name + "_min, " + name + "_max and " + name + "_steps go together");
    given = true;
    GridAxis a{r.number(g + "_min"), r.number(g + "_max"), static_cast<int>(r.integer(g + "_steps"))};
    if (a.steps < 1) throw Error("config [grid]: " + name + "_steps must be >= 1");
    if (a.max < a.min) throw Error("config [grid]: " + name + "_max < " + name + "_min");
    return a;
}

} // namespace

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides)
{
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(std::string("config: ") + e.what());
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        const auto dot = o.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw Error("override must look like section.key=value: '" + o + "'");
        tree.put(pt::ptree::path_type(trim(o.substr(0, eq)), '.'), trim(o.substr(eq + 1)));
    }
    check_known(tree);
    const Reader r(tree);

    RunConfig rc;
    SweepConfig& s = rc.sweep;
    s.particles = r.int_list("model.particles");
    s.wells = r.int_list("model.wells");
    for (int n : s.particles)
        if (n < 1) throw Error("config model.particles: values must be >= 1");
    for (int w : s.wells)
        if (w < 1) throw Error("config model.wells: values must be >= 1");
    s.tau = axis(r, "tau", rc.grid_given);
    s.gamma = axis(r, "gamma", rc.grid_given);
    if (s.tau.min < 0.0 || s.gamma.min < 0.0) throw Error("config: tau and gamma must be >= 0");

    PointConfig& p = s.point;
    p.e_cut = r.integer_or_auto("basis.e_cut");
    p.max_e_cut = r.integer_or_auto("basis.max_e_cut");
    p.scheme = coupling_scheme_from_string(r.raw("basis.scheme"));
    p.rel_tol = r.number("basis.rel_tol");
    if (!(p.rel_tol > 0.0)) throw Error("config basis.rel_tol must be > 0");
    p.e_mid = r.number("window.e_mid");
    p.half_width = r.number("window.half_width");
    if (!(p.half_width > 0.0)) throw Error("config window.half_width must be > 0");

    p.diagnostics.brody = r.flag("diagnostics.brody");
    p.diagnostics.kurtosis = r.flag("diagnostics.kurtosis");
    p.diagnostics.gamma = r.flag("diagnostics.gamma");
    p.diagnostics.survival = r.flag("diagnostics.survival");

    const std::string bw = r.raw("brody.window");
    if (bw == "converged")
        p.brody_window = BrodyWindow::converged;
    else if (bw == "energy")
        p.brody_window = BrodyWindow::energy;
    else
        throw Error("config brody.window must be 'converged' or 'energy'");
    p.brody.bootstrap_resamples = static_cast<int>(r.integer("brody.bootstrap"));
    p.brody.seed = static_cast<std::uint64_t>(r.integer("brody.seed"));
    p.brody.resolution = r.number("brody.resolution");
    p.gamma_bins = static_cast<int>(r.integer("eth.gamma_bins"));
    if (p.gamma_bins < 1) throw Error("config eth.gamma_bins must be >= 1");

    p.time_grid.log10_min = r.number("survival.log10_t_min");
    p.time_grid.log10_max = r.number("survival.log10_t_max");
    p.time_grid.points = static_cast<int>(r.integer("survival.points"));
    p.smoothing_dt = r.number("survival.smoothing_dt");

    s.output_dir = r.raw("run.output_dir");
    s.cache_dir = r.raw("run.cache_dir");
    if (s.cache_dir.empty()) s.cache_dir = cache_dir_from_env();
    s.workers = static_cast<int>(r.integer("run.workers"));
    if (s.workers < 1) throw Error("config run.workers must be >= 1");
    s.memory_budget_mb = r.number("run.memory_budget_mb");
    s.write_point_files = r.flag("run.point_files");
    return rc;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides)
{
    return parse_config(read_text_file(path), overrides);
}

std::string default_config_text()
{
    std::ostringstream out;
    bool first = true;
    for (const auto& [sec, keys] : schema()) {
        out << (first ? "" : "\n") << "[" << sec << "]\n";
        first = false;
        for (const auto& [k, d] : keys) out << (d.empty() ? "; " : "") << k << " = " << d << "\n";
    }
    return out.str();
}

} // namespace mwchaos
