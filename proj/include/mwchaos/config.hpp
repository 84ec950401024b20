#pragma once

// Run configuration as an INI-style file with [section] headers and
// key = value lines. Command-line overrides use "section.key=value".

#include "mwchaos/pipeline.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mwchaos {

struct RunConfig {
    SweepConfig sweep;
    bool grid_given = false; ///< false when tau/gamma came from [model] as single values
};

/// Parses config text. Unknown sections or keys are errors, as are values
/// that do not parse.
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Every recognised key with its default, in file order; also the reference
/// for the shipped example configs.
std::string default_config_text();

} // namespace mwchaos
