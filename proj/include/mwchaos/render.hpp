#pragma once

// SVG figures from the CSV tables written by the pipeline. Output depends
// only on the table contents: fixed canvas, fixed color map, fixed number
// formatting, so identical inputs give byte-identical files.

#include "mwchaos/io.hpp"

#include <string>

namespace mwchaos {

enum class RenderKind { heatmap, spacing_hist, gamma_scatter, survival_curve };

RenderKind render_kind_from_string(const std::string& name);

struct HeatmapOptions {
    std::string column = "beta"; ///< any numeric sweep.csv column
    int particles = 0;           ///< 0: the table must hold a single N
    int wells = 0;               ///< 0: the table must hold a single W
};

/// tau on x, gamma on y. Color bounds are the finite min and max of the
/// column and are recorded in the <metadata> block. Cells without a value
/// are grey; for beta, negative cells are black.
std::string render_heatmap(const CsvTable& sweep, const HeatmapOptions& options);
std::string render_spacing_hist(const CsvTable& spacing);
std::string render_gamma_scatter(const CsvTable& gamma);
/// Raw, smoothed and analytic curves with S_inf as a dashed line, log-log axes.
std::string render_survival_curve(const CsvTable& survival);

/// Dispatches on kind; the table's own kind must match.
std::string render(const CsvTable& table, RenderKind kind, const HeatmapOptions& heatmap = {});

} // namespace mwchaos
