#pragma once

#include <string>

#include "doalab/neural/models.hpp"

namespace doalab::neural {

// Binary checkpoint: magic, version, JSON header (config + array manifest),
// then each array as row-major little-endian f32. Bit-exact round trip.
void save_checkpoint(const std::string& path, AnyModel<float>& model);
AnyModel<float> load_checkpoint(const std::string& path);

}  // namespace doalab::neural
