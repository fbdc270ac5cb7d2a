#pragma once

#include <string>
#include <utility>

#include "boxlab/mlp.hpp"

namespace boxlab {

// Versioned JSON checkpoint: {"format":"boxlab-mlp","version":1,"spec":{...},
// "params":{"weights":[[...]],"biases":[[...]]}}. Doubles round-trip exactly.
void save_checkpoint(const MlpSpec& spec, const MlpParams& params, const std::string& path);
std::pair<MlpSpec, MlpParams> load_checkpoint(const std::string& path);

std::string checkpoint_to_string(const MlpSpec& spec, const MlpParams& params);
std::pair<MlpSpec, MlpParams> checkpoint_from_string(const std::string& text);

}  // namespace boxlab
