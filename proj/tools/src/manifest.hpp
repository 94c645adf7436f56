#pragma once

#include <string>
#include <vector>

#include "artic/fitting.hpp"

namespace artic::cli {

// Scan manifest: {"speakers", "poses", "scans": [{"speaker", "pose",
// "cloud", "landmarks"?}]}. Cloud and landmark paths are relative to
// the manifest file.
std::vector<BootstrapInput> load_scan_manifest(
    const std::string& manifest_path, std::vector<std::string>& speakers,
    std::vector<std::string>& poses);

}  // namespace artic::cli
