#include "mwchaos/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace mwchaos {

namespace {

constexpr double canvas_w = 640.0;
constexpr double canvas_h = 480.0;
constexpr double left = 80.0;
constexpr double right = 520.0;
constexpr double top = 40.0;
constexpr double bottom = 420.0;

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string esc(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

// Viridis sampled at nine points, interpolated linearly in RGB.
std::string color(double x)
{
    static constexpr std::array<std::array<int, 3>, 9> anchors = {{{68, 1, 84},
                                                                   {71, 44, 122},
                                                                   {59, 81, 139},
                                                                   {44, 113, 142},
                                                                   {33, 144, 141},
                                                                   {39, 173, 129},
                                                                   {92, 200, 99},
                                                                   {170, 220, 50},
                                                                   {253, 231, 37}}};
    x = std::clamp(x, 0.0, 1.0) * (anchors.size() - 1);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(x), anchors.size() - 2);
    const double f = x - static_cast<double>(i);
    char buf[8];
    int rgb[3];
    for (int c = 0; c < 3; ++c)
        rgb[c] = static_cast<int>(std::lround(anchors[i][c] + f * (anchors[i + 1][c] - anchors[i][c])));
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
    return buf;
}

class Svg {
public:
    explicit Svg(const std::string& title)
    {
        out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
             << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(canvas_w) << "\" height=\"" << num(canvas_h)
             << "\" viewBox=\"0 0 " << num(canvas_w) << " " << num(canvas_h) << "\" font-family=\"sans-serif\">\n"
             << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        text(canvas_w / 2, 22, title, 14, "middle");
    }

    void metadata(const nlohmann::ordered_json& j) { out_ << "<metadata>" << esc(j.dump()) << "</metadata>\n"; }

    void rect(double x, double y, double w, double h, const std::string& fill, const std::string& extra = "")
    {
        out_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
             << "\" fill=\"" << fill << "\"" << extra << "/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1.0,
              const std::string& dash = "")
    {
        out_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
             << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << "\"";
        if (!dash.empty()) out_ << " stroke-dasharray=\"" << dash << "\"";
        out_ << "/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double width,
                  const std::string& dash = "")
    {
        if (pts.empty()) return;
        out_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << "\"";
        if (!dash.empty()) out_ << " stroke-dasharray=\"" << dash << "\"";
        out_ << " points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i)
            out_ << (i ? " " : "") << num(pts[i].first) << "," << num(pts[i].second);
        out_ << "\"/>\n";
    }

    void circle(double x, double y, double r, const std::string& fill)
    {
        out_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r) << "\" fill=\"" << fill
             << "\"/>\n";
    }

    void text(double x, double y, const std::string& s, int size = 11, const std::string& anchor = "start",
              double rotate = 0.0)
    {
        out_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size << "\" text-anchor=\""
             << anchor << "\"";
        if (rotate != 0.0) out_ << " transform=\"rotate(" << num(rotate) << " " << num(x) << " " << num(y) << ")\"";
        out_ << ">" << esc(s) << "</text>\n";
    }

    std::string finish()
    {
        out_ << "</svg>\n";
        return out_.str();
    }

private:
    std::ostringstream out_;
};

// Linear or log10 axis mapping data to pixels.
struct Axis {
    double lo = 0.0, hi = 1.0;
    double p0 = 0.0, p1 = 1.0;
    bool log = false;
    double operator()(double v) const
    {
        const double a = log ? std::log10(lo) : lo;
        const double b = log ? std::log10(hi) : hi;
        const double x = log ? std::log10(v) : v;
        return p0 + (x - a) / (b - a) * (p1 - p0);
    }
};

std::vector<double> nice_ticks(double lo, double hi, int target = 6)
{
    const double span = hi - lo;
    if (!(span > 0.0)) return {lo};
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    std::vector<double> t;
    for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + 1e-9 * span; v += step)
        t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return t;
}

void frame(Svg& svg, const Axis& x, const Axis& y, const std::string& xlabel, const std::string& ylabel)
{
    svg.rect(left, top, right - left, bottom - top, "none", " stroke=\"black\"");
    auto ticks = [](const Axis& a) {
        if (!a.log) return nice_ticks(a.lo, a.hi);
        std::vector<double> t;
        for (int e = static_cast<int>(std::ceil(std::log10(a.lo) - 1e-9));
             e <= static_cast<int>(std::floor(std::log10(a.hi) + 1e-9)); ++e)
            t.push_back(std::pow(10.0, e));
        return t;
    };
    for (double v : ticks(x)) {
        const double px = x(v);
        svg.line(px, bottom, px, bottom + 5, "black");
        svg.text(px, bottom + 18, x.log ? "1e" + num(std::log10(v)) : num(v), 10, "middle");
    }
    for (double v : ticks(y)) {
        const double py = y(v);
        svg.line(left - 5, py, left, py, "black");
        svg.text(left - 8, py + 4, y.log ? "1e" + num(std::log10(v)) : num(v), 10, "end");
    }
    svg.text((left + right) / 2, bottom + 38, xlabel, 12, "middle");
    svg.text(24, (top + bottom) / 2, ylabel, 12, "middle", -90.0);
}

void legend(Svg& svg, const std::vector<std::tuple<std::string, std::string, std::string>>& entries)
{
    double y = top + 14;
    for (const auto& [label, stroke, dash] : entries) {
        svg.line(right + 12, y - 4, right + 36, y - 4, stroke, 2.0, dash);
        svg.text(right + 40, y, label, 10);
        y += 16;
    }
}

std::vector<double> column_values(const CsvTable& t, const std::string& name)
{
    const auto c = t.column(name);
    if (!c) throw Error("table of kind '" + t.kind + "' has no column '" + name + "'");
    std::vector<double> v(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) v[i] = t.number(i, *c);
    return v;
}

std::string toggle_for(const std::string& column)
{
    if (column.rfind("beta", 0) == 0) return "brody";
    if (column.find("kurtosis") != std::string::npos) return "kurtosis";
    if (column.rfind("gamma_", 0) == 0) return "gamma";
    if (column == "s_inf" || column.rfind("hole_", 0) == 0) return "survival";
    return {};
}

void require_kind(const CsvTable& t, const std::string& kind, const std::string& toggle)
{
    if (t.kind != kind)
        throw Error("expected a '" + kind + "' table (diagnostics." + toggle + "), got '" + t.kind + "'");
    if (t.rows.empty()) throw Error("'" + kind + "' table is empty; enable diagnostics." + toggle);
}

std::string point_title(const CsvTable& t, const std::string& what)
{
    return what + "  N=" + t.meta("N") + " W=" + t.meta("W") + " tau=" + t.meta("tau") + " gamma=" + t.meta("gamma");
}

} // namespace

RenderKind render_kind_from_string(const std::string& name)
{
    if (name == "heatmap") return RenderKind::heatmap;
    if (name == "spacing_hist") return RenderKind::spacing_hist;
    if (name == "gamma_scatter") return RenderKind::gamma_scatter;
    if (name == "survival_curve") return RenderKind::survival_curve;
    throw Error("unknown render kind '" + name + "' (heatmap, spacing_hist, gamma_scatter, survival_curve)");
}

std::string render_heatmap(const CsvTable& sweep, const HeatmapOptions& opt)
{
    if (sweep.kind != "sweep") throw Error("heatmap needs a sweep table, got '" + sweep.kind + "'");
    const auto ns = column_values(sweep, "N");
    const auto ws = column_values(sweep, "W");
    const auto taus = column_values(sweep, "tau");
    const auto gammas = column_values(sweep, "gamma");
    const auto vals = column_values(sweep, opt.column);

    std::set<int> n_set(ns.begin(), ns.end()), w_set(ws.begin(), ws.end());
    auto pick = [](const std::set<int>& s, int want, const char* what) {
        if (want != 0) return want;
        if (s.size() != 1) throw Error(std::string("sweep holds several ") + what + " values; choose one");
        return *s.begin();
    };
    const int n = pick(n_set, opt.particles, "N");
    const int w = pick(w_set, opt.wells, "W");

    std::set<double> tau_set, gamma_set;
    std::map<std::pair<double, double>, double> cell;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (static_cast<int>(ns[i]) != n || static_cast<int>(ws[i]) != w) continue;
        tau_set.insert(taus[i]);
        gamma_set.insert(gammas[i]);
        cell[{taus[i], gammas[i]}] = vals[i];
    }
    if (cell.empty()) throw Error("sweep has no rows for N=" + std::to_string(n) + " W=" + std::to_string(w));

    const bool is_beta = opt.column == "beta";
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& [k, v] : cell) {
        if (!std::isfinite(v) || (is_beta && v < 0.0)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!std::isfinite(lo)) {
        const std::string t = toggle_for(opt.column);
        throw Error("column '" + opt.column + "' has no values" + (t.empty() ? "" : "; enable diagnostics." + t));
    }

    const std::vector<double> tv(tau_set.begin(), tau_set.end()), gv(gamma_set.begin(), gamma_set.end());
    Svg svg(opt.column + "  N=" + std::to_string(n) + " W=" + std::to_string(w));
    nlohmann::ordered_json meta = {{"kind", "heatmap"}, {"column", opt.column}, {"N", n}, {"W", w},
                                   {"color_min", lo},   {"color_max", hi},     {"colormap", "viridis"},
                                   {"tau", tv},         {"gamma", gv}};
    svg.metadata(meta);

    const double cw = (right - left) / static_cast<double>(tv.size());
    const double ch = (bottom - top) / static_cast<double>(gv.size());
    for (std::size_t i = 0; i < tv.size(); ++i) {
        for (std::size_t j = 0; j < gv.size(); ++j) {
            const auto it = cell.find({tv[i], gv[j]});
            std::string fill = "#bdbdbd";
            if (it != cell.end() && std::isfinite(it->second)) {
                if (is_beta && it->second < 0.0)
                    fill = "#000000";
                else
                    fill = color(hi > lo ? (it->second - lo) / (hi - lo) : 0.5);
            }
            svg.rect(left + cw * i, bottom - ch * (j + 1), cw, ch, fill);
        }
    }
    svg.rect(left, top, right - left, bottom - top, "none", " stroke=\"black\"");
    const std::size_t xstep = std::max<std::size_t>(1, tv.size() / 8);
    for (std::size_t i = 0; i < tv.size(); i += xstep)
        svg.text(left + cw * (i + 0.5), bottom + 16, num(tv[i]), 10, "middle");
    const std::size_t ystep = std::max<std::size_t>(1, gv.size() / 8);
    for (std::size_t j = 0; j < gv.size(); j += ystep)
        svg.text(left - 6, bottom - ch * (j + 0.5) + 4, num(gv[j]), 10, "end");
    svg.text((left + right) / 2, bottom + 38, "tau", 12, "middle");
    svg.text(24, (top + bottom) / 2, "gamma", 12, "middle", -90.0);

    // Color bar.
    constexpr int steps = 64;
    const double bx = right + 30, bw = 18, bh = (bottom - top) / steps;
    for (int k = 0; k < steps; ++k) svg.rect(bx, bottom - bh * (k + 1), bw, bh + 0.5, color((k + 0.5) / steps));
    svg.rect(bx, top, bw, bottom - top, "none", " stroke=\"black\"");
    svg.text(bx + bw + 4, bottom, num(lo), 10);
    svg.text(bx + bw + 4, top + 8, num(hi), 10);
    return svg.finish();
}

std::string render_spacing_hist(const CsvTable& t)
{
    require_kind(t, "spacing_histogram", "brody");
    const auto s = column_values(t, "s_bin_center");
    const auto emp = column_values(t, "empirical_density");
    const auto fit = column_values(t, "brody_fit_density");
    const auto poi = column_values(t, "poisson_ref");
    const auto wd = column_values(t, "wd_ref");
    const double width = s.size() > 1 ? s[1] - s[0] : 0.1;
    double ymax = 1.0;
    for (std::size_t i = 0; i < s.size(); ++i) ymax = std::max({ymax, emp[i], fit[i]});
    const Axis x{0.0, s.back() + width / 2, left, right};
    const Axis y{0.0, 1.1 * ymax, bottom, top};

    Svg svg(point_title(t, "P(s)  beta=" + t.meta("beta")));
    svg.metadata({{"kind", "spacing_hist"}, {"beta", t.meta("beta")}, {"spacings", t.meta("spacings")}});
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!std::isfinite(emp[i])) continue;
        svg.rect(x(s[i] - width / 2), y(emp[i]), x(s[i] + width / 2) - x(s[i] - width / 2), y(0.0) - y(emp[i]),
                 "#9ecae1", " stroke=\"#6baed6\" stroke-width=\"0.5\"");
    }
    auto curve = [&](const std::vector<double>& v) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (std::isfinite(v[i])) pts.emplace_back(x(s[i]), y(v[i]));
        return pts;
    };
    svg.polyline(curve(poi), "#2ca02c", 1.5, "5,3");
    svg.polyline(curve(wd), "#ff7f0e", 1.5, "2,2");
    svg.polyline(curve(fit), "#d62728", 2.0);
    frame(svg, x, y, "s", "P(s)");
    legend(svg, {{"data", "#6baed6", ""}, {"Brody fit", "#d62728", ""}, {"Poisson", "#2ca02c", "5,3"},
                 {"Wigner-Dyson", "#ff7f0e", "2,2"}});
    return svg.finish();
}

std::string render_gamma_scatter(const CsvTable& t)
{
    require_kind(t, "gamma_ratio", "gamma");
    const auto w = column_values(t, "omega_bin_center");
    const auto g = column_values(t, "Gamma");
    double lo = 1.0, hi = 2.0, wmax = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < w.size(); ++i) {
        wmax = std::max(wmax, w[i]);
        if (!std::isfinite(g[i])) continue;
        any = true;
        lo = std::min(lo, g[i]);
        hi = std::max(hi, g[i]);
    }
    if (!any) throw Error("gamma table has no reported bins; enable diagnostics.gamma with a wider window");
    const double bin = w.size() > 1 ? w[1] - w[0] : wmax;
    const Axis x{0.0, wmax + bin / 2, left, right};
    const Axis y{lo - 0.05 * (hi - lo), hi + 0.05 * (hi - lo), bottom, top};

    Svg svg(point_title(t, "Gamma(omega)"));
    svg.metadata({{"kind", "gamma_scatter"}, {"gamma_pooled", t.meta("gamma_pooled")}, {"gaussian", std::numbers::pi / 2}});
    svg.line(left, y(std::numbers::pi / 2), right, y(std::numbers::pi / 2), "#d62728", 1.5, "5,3");
    for (std::size_t i = 0; i < w.size(); ++i)
        if (std::isfinite(g[i])) svg.circle(x(w[i]), y(g[i]), 3.0, "#1f77b4");
    frame(svg, x, y, "omega", "Gamma");
    legend(svg, {{"Gamma per bin", "#1f77b4", ""}, {"pi/2", "#d62728", "5,3"}});
    return svg.finish();
}

std::string render_survival_curve(const CsvTable& t)
{
    require_kind(t, "survival", "survival");
    const auto ts = column_values(t, "t");
    const auto raw = column_values(t, "S_P");
    const auto sm = column_values(t, "S_P_smoothed");
    const auto an = column_values(t, "S_P_analytic");
    const double s_inf = column_values(t, "S_inf").front();

    double ymin = s_inf;
    for (std::size_t i = 0; i < ts.size(); ++i)
        for (double v : {sm[i], an[i]})
            if (v > 0.0) ymin = std::min(ymin, v);
    ymin = std::pow(10.0, std::floor(std::log10(std::max(ymin / 3.0, 1e-12))));
    const Axis x{ts.front(), ts.back(), left, right, true};
    const Axis y{ymin, 1.5, bottom, top, true};
    auto curve = [&](const std::vector<double>& v) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < ts.size(); ++i) pts.emplace_back(x(ts[i]), y(std::max(v[i], ymin)));
        return pts;
    };

    Svg svg(point_title(t, "S_P(t)"));
    svg.metadata({{"kind", "survival_curve"}, {"S_inf", s_inf}, {"y_min", ymin}, {"dt_smoothing", t.meta("dt_smoothing")}});
    svg.polyline(curve(raw), "#c7c7c7", 0.6);
    svg.polyline(curve(sm), "#1f77b4", 1.8);
    svg.polyline(curve(an), "#d62728", 1.5);
    svg.line(left, y(s_inf), right, y(s_inf), "#2ca02c", 1.5, "6,4");
    frame(svg, x, y, "t", "S_P");
    legend(svg, {{"raw", "#c7c7c7", ""}, {"smoothed", "#1f77b4", ""}, {"analytic", "#d62728", ""},
                 {"S_inf", "#2ca02c", "6,4"}});
    return svg.finish();
}

std::string render(const CsvTable& table, RenderKind kind, const HeatmapOptions& heatmap)
{
    switch (kind) {
    case RenderKind::heatmap: return render_heatmap(table, heatmap);
    case RenderKind::spacing_hist: return render_spacing_hist(table);
    case RenderKind::gamma_scatter: return render_gamma_scatter(table);
    case RenderKind::survival_curve: return render_survival_curve(table);
    }
    throw Error("unknown render kind");
}

} // namespace mwchaos
