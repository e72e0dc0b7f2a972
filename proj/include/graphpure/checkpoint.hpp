#pragma once

#include <string>

#include "graphpure/diffusion.hpp"
#include "graphpure/gnn.hpp"

namespace graphpure {

// JSON checkpoints with versioned format tags. Loading rejects unknown tags
// and revalidates shapes (and, for schedules, the alpha_bar table).

void save_classifier(const GcnParams& params, const std::string& path);
GcnParams load_classifier(const std::string& path);

void save_denoiser(const DenoiserParams& params, const std::string& path);
DenoiserParams load_denoiser(const std::string& path);

void save_schedule(const NoiseSchedule& schedule, const std::string& path);
NoiseSchedule load_schedule(const std::string& path);

}  // namespace graphpure
