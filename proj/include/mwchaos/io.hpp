#pragma once

// CSV and JSON export of diagnostics. CSV files start with a schema comment
// line, carry metadata as further comment lines and print every float with 17
// significant digits so values round-trip exactly.

#include "mwchaos/limits.hpp"
#include "mwchaos/pipeline.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mwchaos {

constexpr int csv_schema_version = 1;

std::string format_double(double v);

struct CsvTable {
    std::string kind;
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(const std::vector<double>& values);
    std::string to_string() const;
    std::optional<std::size_t> column(const std::string& name) const;
    double number(std::size_t row, std::size_t col) const; ///< NaN for null
    std::string meta(const std::string& key) const;       ///< empty when absent
};

/// Writes via a temporary file and rename so readers never see partial files.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

CsvTable spacing_table(const SpacingHistogram& h, const DiagnosticsRecord& r);
CsvTable gamma_table(const GammaTable& g, const DiagnosticsRecord& r);
/// Scalar ETH record: N, W, tau, gamma, E_mid, dE, eta, kurtosis.
CsvTable eth_scalar_table(const DiagnosticsRecord& r);
CsvTable survival_table(const SurvivalCurve& c, const DiagnosticsRecord& r);
CsvTable levels_table(const CornerSpectrum& s, const std::string& label);
CsvTable kp_table(const KPLevels& kp);
CsvTable sweep_table(const std::vector<DiagnosticsRecord>& records);

nlohmann::ordered_json to_json(const DiagnosticsRecord& r, bool with_run_info = true);
nlohmann::ordered_json to_json(const SweepSummary& s, const std::vector<DiagnosticsRecord>& records);

/// File-name tag for a parameter point, e.g. "N4_W2_tau12.5_gamma20".
std::string point_tag(const HamiltonianParams& p);

/// Writes the per-point CSV files that exist for this result into `dir`.
void write_point_files(const std::filesystem::path& dir, const PointResult& result);

} // namespace mwchaos
