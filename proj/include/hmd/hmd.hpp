#pragma once

#include "hmd/dataset_io.hpp"    // IWYU pragma: export
#include "hmd/diffusion.hpp"     // IWYU pragma: export
#include "hmd/ego.hpp"           // IWYU pragma: export
#include "hmd/embeddings.hpp"    // IWYU pragma: export
#include "hmd/features.hpp"      // IWYU pragma: export
#include "hmd/graph.hpp"         // IWYU pragma: export
#include "hmd/synth.hpp"         // IWYU pragma: export
#include "hmd/training.hpp"      // IWYU pragma: export
#include "hmd/utterance.hpp"     // IWYU pragma: export

namespace hmd {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hmd
