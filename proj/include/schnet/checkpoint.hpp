#pragma once

#include <string>

#include "schnet/model.hpp"

namespace schnet {

// Versioned container: magic + JSON header (config, normalizer, parameter
// names/shapes) followed by raw little-endian doubles. Round-trips are
// bit-exact.
void save_checkpoint(const std::string& path, const SchNetModel& model);
SchNetModel load_checkpoint(const std::string& path);

}  // namespace schnet
