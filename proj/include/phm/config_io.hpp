#pragma once

#include <string>

#include "phm/compressor.hpp"
#include "phm/unet.hpp"

namespace phm {

// JSON documents; absent keys keep their defaults, unknown keys are errors.
UNetConfig parse_unet_config(const std::string &text);
std::string unet_config_to_json(const UNetConfig &cfg);
DrcConfig parse_drc_config(const std::string &text);
std::string drc_config_to_json(const DrcConfig &cfg);

std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &text);

}  // namespace phm
