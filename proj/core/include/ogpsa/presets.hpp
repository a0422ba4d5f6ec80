#pragma once

// Default family and training settings shipped with the tool. The shipped
// configs/*.cfg files spell out the same values.

#include <cstdint>

#include "ogpsa/optimizer.hpp"
#include "ogpsa/tasks.hpp"

namespace ogpsa::presets {

tasks::FamilySpec family_spec(tasks::FamilyKind kind, std::uint64_t seed = 0);

/// Stages, step sizes and refresh periods for `kind`; `method` and `seed`
/// are copied into the config.
optimizer::TrainConfig train_config(tasks::FamilyKind kind, optimizer::Method method,
                                    std::uint64_t seed = 0);

}  // namespace ogpsa::presets
