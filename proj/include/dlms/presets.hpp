#pragma once

#include <string>
#include <vector>

#include "dlms/config.hpp"

namespace dlms {

// Built-in experiment configurations reproducing the reference scenarios.
std::vector<std::string> preset_names();
bool has_preset(const std::string& name);
std::string preset_json(const std::string& name);  // throws std::domain_error when unknown
ExperimentConfig load_preset(const std::string& name);

}  // namespace dlms
